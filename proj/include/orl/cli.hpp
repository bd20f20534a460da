#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "orl/datagen.hpp"
#include "orl/ensemble.hpp"
#include "orl/tuning.hpp"

namespace orl {
namespace cli {

/// Full experiment configuration. Mirrors the JSON config file; command-line
/// flags override individual fields after the file is read.
struct RunConfig {
    int n = 0;
    int p = 2;
    int k = 60;
    int num_experts = 20;  // JSON key "N"
    long horizon = 0;      // JSON key "T"
    std::vector<double> gamma;  // scalar in JSON broadcasts to every expert
    double epsilon = 1.0;
    double spectral_bound = 0.0;  // JSON key "D"
    double residual_bound = 0.0;  // JSON key "D_r"
    double lambda = 1e-4;
    std::vector<std::string> methods = {"orl", "online", "offline_experts", "best_offline"};
    std::string trajectory_path;  // JSON key "trajectory"
    std::string offline_path;     // JSON key "offline"
    bool has_scenario = false;
    SyntheticScenario scenario;   // JSON key "scenario"; n/p/T/k/N come from the top level
    std::string out_dir;          // JSON key "out"
    std::uint64_t seed = 0;
    ProjectionMode projection = ProjectionMode::Exact;

    bool operator==(const RunConfig&) const;
};

RunConfig parse_run_config(const std::string& json_text);
std::string serialize_run_config(const RunConfig& cfg);
RunConfig load_run_config(const std::string& path);

/// Structural validation plus advisory checks. Throws ConfigError on hard
/// problems; returns human-readable warnings (e.g. lambda above the
/// theoretical cap) the caller should surface without aborting.
std::vector<std::string> validate_run_config(const RunConfig& cfg);

PipelineConfig pipeline_config(const RunConfig& cfg);

/// Run every configured method and emit loss_<method>.csv, weights.csv and
/// summary.csv into cfg.out_dir. Inputs are fully loaded and validated before
/// any file is written.
void cmd_run(const RunConfig& cfg, std::ostream& err);

/// Print the tuning report (lambda_max, alpha, gamma, expert_regret_term) as
/// key=value lines.
void cmd_tune(const tuning::TuningInputs& inputs, std::ostream& out, std::ostream& err);

struct SynthConfig {
    SyntheticScenario scenario;
    std::string out_dir;
};

/// Generate a synthetic scenario and write trajectory.csv + offline.csv.
void cmd_synth(const SynthConfig& cfg, std::ostream& out, std::ostream& err);

/// Parse argv and dispatch. Exit codes: 0 success, 1 usage/config error,
/// 2 data/validation error, 3 I/O error.
int run_cli(int argc, const char* const* argv);

}  // namespace cli
}  // namespace orl
