#include "orl/cli.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "orl/bench.hpp"

namespace orl {
namespace cli {

using nlohmann::json;

namespace {

void reject_unknown_keys(const json& j, const std::vector<std::string>& allowed,
                         const std::string& where) {
    for (auto it = j.begin(); it != j.end(); ++it) {
        if (std::find(allowed.begin(), allowed.end(), it.key()) == allowed.end())
            throw ConfigError("unknown key '" + it.key() + "' in " + where);
    }
}

Vec json_to_vec(const json& j, const std::string& where) {
    if (!j.is_array()) throw ConfigError(where + " must be an array of numbers");
    Vec v(static_cast<Eigen::Index>(j.size()));
    Eigen::Index i = 0;
    for (const auto& x : j) {
        if (!x.is_number()) throw ConfigError(where + " must contain only numbers");
        v(i++) = x.get<double>();
    }
    return v;
}

json vec_to_json(const Vec& v) {
    json arr = json::array();
    for (Eigen::Index i = 0; i < v.size(); ++i) arr.push_back(v(i));
    return arr;
}

ExpertCorruption parse_corruption(const json& j, int index) {
    const std::string where = "experts[" + std::to_string(index) + "]";
    if (!j.is_object()) throw ConfigError(where + " must be an object");
    const std::string kind = j.value("kind", std::string());
    if (kind == "exact") {
        reject_unknown_keys(j, {"kind"}, where);
        return ExpertCorruption::exact();
    }
    if (kind == "bias") {
        reject_unknown_keys(j, {"kind", "bias"}, where);
        if (!j.contains("bias")) throw ConfigError(where + ": bias corruption needs 'bias'");
        return ExpertCorruption::biased(json_to_vec(j.at("bias"), where + ".bias"));
    }
    if (kind == "noise") {
        reject_unknown_keys(j, {"kind", "scale"}, where);
        if (!j.contains("scale")) throw ConfigError(where + ": noise corruption needs 'scale'");
        return ExpertCorruption::noisy(j.at("scale").get<double>());
    }
    if (kind == "drift") {
        reject_unknown_keys(j, {"kind", "onset", "rate", "direction"}, where);
        if (!j.contains("onset") || !j.contains("rate"))
            throw ConfigError(where + ": drift corruption needs 'onset' and 'rate'");
        Vec dir;
        if (j.contains("direction")) dir = json_to_vec(j.at("direction"), where + ".direction");
        return ExpertCorruption::drifting(j.at("onset").get<long>(), j.at("rate").get<double>(),
                                          std::move(dir));
    }
    throw ConfigError(where + ": unknown corruption kind '" + kind +
                      "' (valid: exact, bias, noise, drift)");
}

json corruption_to_json(const ExpertCorruption& c) {
    json j;
    switch (c.kind) {
        case ExpertCorruption::Kind::Exact:
            j["kind"] = "exact";
            break;
        case ExpertCorruption::Kind::Bias:
            j["kind"] = "bias";
            j["bias"] = vec_to_json(c.bias);
            break;
        case ExpertCorruption::Kind::Noise:
            j["kind"] = "noise";
            j["scale"] = c.noise_scale;
            break;
        case ExpertCorruption::Kind::Drift:
            j["kind"] = "drift";
            j["onset"] = c.drift_onset;
            j["rate"] = c.drift_rate;
            if (c.drift_direction.size() > 0) j["direction"] = vec_to_json(c.drift_direction);
            break;
    }
    return j;
}

SyntheticScenario parse_scenario(const json& j) {
    if (!j.is_object()) throw ConfigError("'scenario' must be an object");
    reject_unknown_keys(j,
                        {"kind", "d_max", "spectral_radius", "sine_amp", "sine_freq",
                         "corruption_reference", "experts"},
                        "scenario");
    SyntheticScenario sc;
    sc.kind = parse_dynamics_kind(j.value("kind", std::string("static-linear")));
    sc.disturbance_bound = j.value("d_max", 0.0);
    sc.spectral_radius = j.value("spectral_radius", 0.85);
    sc.sine_amp = j.value("sine_amp", 0.2);
    sc.sine_freq = j.value("sine_freq", 1.0);
    const std::string ref = j.value("corruption_reference", std::string("nominal"));
    if (ref == "nominal")
        sc.reference = CorruptionReference::Nominal;
    else if (ref == "truth")
        sc.reference = CorruptionReference::Truth;
    else
        throw ConfigError("scenario.corruption_reference must be 'nominal' or 'truth'");
    if (j.contains("experts")) {
        if (!j.at("experts").is_array()) throw ConfigError("scenario.experts must be an array");
        int idx = 0;
        for (const auto& e : j.at("experts")) sc.experts.push_back(parse_corruption(e, idx++));
    }
    return sc;
}

json scenario_to_json(const SyntheticScenario& sc) {
    json j;
    j["kind"] = dynamics_kind_name(sc.kind);
    j["d_max"] = sc.disturbance_bound;
    j["spectral_radius"] = sc.spectral_radius;
    j["sine_amp"] = sc.sine_amp;
    j["sine_freq"] = sc.sine_freq;
    j["corruption_reference"] =
        sc.reference == CorruptionReference::Truth ? "truth" : "nominal";
    json experts = json::array();
    for (const auto& c : sc.experts) experts.push_back(corruption_to_json(c));
    j["experts"] = std::move(experts);
    return j;
}

ProjectionMode parse_projection(const std::string& s) {
    if (s == "exact") return ProjectionMode::Exact;
    if (s == "scale") return ProjectionMode::Scale;
    throw ConfigError("unknown projection mode '" + s + "' (valid: exact, scale)");
}

}  // namespace

bool RunConfig::operator==(const RunConfig& o) const {
    return n == o.n && p == o.p && k == o.k && num_experts == o.num_experts &&
           horizon == o.horizon && gamma == o.gamma && epsilon == o.epsilon &&
           spectral_bound == o.spectral_bound && residual_bound == o.residual_bound &&
           lambda == o.lambda && methods == o.methods && trajectory_path == o.trajectory_path &&
           offline_path == o.offline_path && has_scenario == o.has_scenario &&
           (!has_scenario || scenario == o.scenario) && out_dir == o.out_dir && seed == o.seed &&
           projection == o.projection;
}

RunConfig parse_run_config(const std::string& json_text) {
    json j;
    try {
        j = json::parse(json_text);
    } catch (const json::exception& e) {
        throw ConfigError(std::string("config is not valid JSON: ") + e.what());
    }
    if (!j.is_object()) throw ConfigError("config must be a JSON object");
    reject_unknown_keys(j,
                        {"n", "p", "k", "N", "T", "gamma", "epsilon", "D", "D_r", "lambda",
                         "methods", "trajectory", "offline", "scenario", "out", "seed",
                         "projection"},
                        "config");

    RunConfig cfg;
    try {
        cfg.n = j.value("n", cfg.n);
        cfg.p = j.value("p", cfg.p);
        cfg.k = j.value("k", cfg.k);
        cfg.num_experts = j.value("N", cfg.num_experts);
        cfg.horizon = j.value("T", cfg.horizon);
        cfg.epsilon = j.value("epsilon", cfg.epsilon);
        cfg.spectral_bound = j.value("D", cfg.spectral_bound);
        cfg.residual_bound = j.value("D_r", cfg.residual_bound);
        cfg.lambda = j.value("lambda", cfg.lambda);
        if (j.contains("gamma")) {
            const auto& g = j.at("gamma");
            if (g.is_number()) {
                cfg.gamma.assign(static_cast<std::size_t>(std::max(cfg.num_experts, 1)),
                                 g.get<double>());
            } else if (g.is_array()) {
                cfg.gamma.clear();
                for (const auto& x : g) cfg.gamma.push_back(x.get<double>());
            } else {
                throw ConfigError("'gamma' must be a number or an array");
            }
        } else {
            cfg.gamma.assign(static_cast<std::size_t>(std::max(cfg.num_experts, 1)), 0.8);
        }
        if (j.contains("methods")) {
            cfg.methods.clear();
            for (const auto& m : j.at("methods")) cfg.methods.push_back(m.get<std::string>());
        }
        cfg.trajectory_path = j.value("trajectory", cfg.trajectory_path);
        cfg.offline_path = j.value("offline", cfg.offline_path);
        if (j.contains("scenario")) {
            cfg.has_scenario = true;
            cfg.scenario = parse_scenario(j.at("scenario"));
        }
        cfg.out_dir = j.value("out", cfg.out_dir);
        cfg.seed = j.value("seed", cfg.seed);
        if (j.contains("projection")) cfg.projection = parse_projection(j.at("projection").get<std::string>());
    } catch (const json::exception& e) {
        throw ConfigError(std::string("config field has the wrong type: ") + e.what());
    }
    return cfg;
}

std::string serialize_run_config(const RunConfig& cfg) {
    json j;
    j["n"] = cfg.n;
    j["p"] = cfg.p;
    j["k"] = cfg.k;
    j["N"] = cfg.num_experts;
    j["T"] = cfg.horizon;
    j["gamma"] = cfg.gamma;
    j["epsilon"] = cfg.epsilon;
    j["D"] = cfg.spectral_bound;
    j["D_r"] = cfg.residual_bound;
    j["lambda"] = cfg.lambda;
    j["methods"] = cfg.methods;
    if (!cfg.trajectory_path.empty()) j["trajectory"] = cfg.trajectory_path;
    if (!cfg.offline_path.empty()) j["offline"] = cfg.offline_path;
    if (cfg.has_scenario) j["scenario"] = scenario_to_json(cfg.scenario);
    if (!cfg.out_dir.empty()) j["out"] = cfg.out_dir;
    j["seed"] = cfg.seed;
    j["projection"] = cfg.projection == ProjectionMode::Exact ? "exact" : "scale";
    return j.dump(2) + "\n";
}

RunConfig load_run_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open config '" + path + "'");
    std::stringstream buf;
    buf << in.rdbuf();
    return parse_run_config(buf.str());
}

namespace {

SyntheticScenario effective_scenario(const RunConfig& cfg) {
    SyntheticScenario sc = cfg.scenario;
    sc.n = cfg.n;
    sc.p = cfg.p;
    sc.horizon = cfg.horizon;
    sc.k = cfg.k;
    sc.num_experts = cfg.num_experts;
    sc.seed = cfg.seed;
    return sc;
}

}  // namespace

std::vector<std::string> validate_run_config(const RunConfig& cfg) {
    if (cfg.n < 1) throw ConfigError("config: n must be >= 1");
    if (cfg.p < 1) throw ConfigError("config: p must be >= 1");
    if (cfg.k < 1) throw ConfigError("config: k must be >= 1");
    if (cfg.num_experts < 1) throw ConfigError("config: N must be >= 1");
    if (cfg.horizon < cfg.k) throw ConfigError("config: T must be >= k");
    if (static_cast<int>(cfg.gamma.size()) != cfg.num_experts)
        throw ConfigError("config: gamma must be a scalar or a list of N values");
    for (double g : cfg.gamma)
        if (!(g > 0.0) || g > 1.0) throw ConfigError("config: gamma values must lie in (0, 1]");
    if (!(cfg.epsilon > 0.0)) throw ConfigError("config: epsilon must be > 0");
    if (cfg.spectral_bound < 0.0) throw ConfigError("config: D must be >= 0");
    if (!(cfg.residual_bound > 0.0)) throw ConfigError("config: D_r must be > 0");
    if (!(cfg.lambda > 0.0)) throw ConfigError("config: lambda must be > 0");
    if (cfg.methods.empty()) throw ConfigError("config: at least one method required");
    for (const auto& m : cfg.methods) bench::parse_method(m);
    if (cfg.out_dir.empty()) throw ConfigError("config: output directory required");

    const bool has_files = !cfg.trajectory_path.empty() || !cfg.offline_path.empty();
    if (cfg.has_scenario && has_files)
        throw ConfigError("config: give either input files or a scenario, not both");
    if (!cfg.has_scenario && (cfg.trajectory_path.empty() || cfg.offline_path.empty()))
        throw ConfigError("config: need both 'trajectory' and 'offline', or a 'scenario'");
    if (cfg.has_scenario) effective_scenario(cfg).validate();

    std::vector<std::string> warnings;
    const double cap = tuning::lambda_max(cfg.residual_bound, cfg.spectral_bound);
    if (cfg.lambda > cap) {
        warnings.push_back("lambda=" + fmt_g17(cfg.lambda) + " exceeds lambda_max=" +
                           fmt_g17(cap) + "; the expert-regret guarantee does not apply");
    }
    return warnings;
}

PipelineConfig pipeline_config(const RunConfig& cfg) {
    PipelineConfig p;
    p.n = cfg.n;
    p.p = cfg.p;
    p.k = cfg.k;
    p.num_experts = cfg.num_experts;
    p.horizon = cfg.horizon;
    p.forgetting = cfg.gamma;
    p.ridge = cfg.epsilon;
    p.spectral_bound = cfg.spectral_bound;
    p.residual_bound = cfg.residual_bound;
    p.learning_rate = cfg.lambda;
    p.projection = cfg.projection;
    return p;
}

void cmd_run(const RunConfig& cfg, std::ostream& err) {
    for (const auto& w : validate_run_config(cfg)) err << "warning: " << w << "\n";

    Trajectory trajectory;
    OfflinePredictionSet offline;
    if (cfg.has_scenario) {
        GeneratedData data = generate(effective_scenario(cfg));
        trajectory = std::move(data.trajectory);
        offline = std::move(data.offline);
    } else {
        trajectory = load_trajectory(cfg.trajectory_path);
        offline = load_offline_predictions(cfg.offline_path, cfg.num_experts, cfg.horizon, cfg.n);
    }

    const PipelineConfig pcfg = pipeline_config(cfg);
    std::vector<bench::RunTrace> traces;
    traces.reserve(cfg.methods.size());
    for (const auto& name : cfg.methods)
        traces.push_back(bench::run_method(bench::parse_method(name), trajectory, offline, pcfg));

    const auto streams = bench::residual_streams(trajectory, offline, cfg.horizon);
    const auto comparator =
        bench::hindsight_static_comparator(streams, cfg.p, cfg.k, cfg.horizon, cfg.spectral_bound);

    std::vector<bench::MethodResult> results;
    results.reserve(traces.size());
    for (const auto& trace : traces) results.push_back(bench::summarize(trace, comparator));

    bench::emit_plot_data(traces, cfg.out_dir);
    bench::write_summary(results, cfg.out_dir);

    for (const auto& trace : traces) {
        if (trace.residual_bound_violations > 0) {
            err << "warning: " << trace.method << ": " << trace.residual_bound_violations
                << " residuals exceeded D_r=" << fmt_g17(cfg.residual_bound)
                << " (max observed " << fmt_g17(trace.max_residual_norm) << ")\n";
        }
    }
}

void cmd_tune(const tuning::TuningInputs& inputs, std::ostream& out, std::ostream& err) {
    const double cap = tuning::lambda_max(inputs.residual_bound, inputs.spectral_bound);
    const double alpha = tuning::exp_concavity_alpha(inputs.residual_bound, inputs.spectral_bound);
    bool clamped = false;
    const double gamma = tuning::forgetting_factor(inputs.path_length_budget, inputs.horizon,
                                                   inputs.spectral_bound, 0.05, &clamped);
    if (clamped)
        err << "warning: forgetting factor clamped to " << fmt_g17(gamma)
            << "; the schedule would have been nonpositive at this horizon/budget\n";
    out << "lambda_max=" << fmt_g17(cap) << "\n";
    out << "alpha=" << fmt_g17(alpha) << "\n";
    out << "gamma=" << fmt_g17(gamma) << "\n";
    out << "expert_regret_term=" << fmt_g17(tuning::expert_regret_term(inputs.num_experts, alpha))
        << "\n";
}

void cmd_synth(const SynthConfig& cfg, std::ostream& out, std::ostream& err) {
    (void)err;
    if (cfg.out_dir.empty()) throw ConfigError("synth: output directory required");
    GeneratedData data = generate(cfg.scenario);
    std::error_code ec;
    std::filesystem::create_directories(cfg.out_dir, ec);
    if (ec) throw IoError("cannot create output directory '" + cfg.out_dir + "': " + ec.message());
    const auto traj_path = (std::filesystem::path(cfg.out_dir) / "trajectory.csv").string();
    const auto off_path = (std::filesystem::path(cfg.out_dir) / "offline.csv").string();
    save_trajectory(data.trajectory, traj_path);
    save_offline_predictions(data.offline, off_path);
    out << "trajectory=" << traj_path << "\n";
    out << "offline=" << off_path << "\n";
    out << "realized_residual_bound=" << fmt_g17(data.meta.realized_residual_bound) << "\n";
}

namespace {

std::vector<std::string> split_methods(const std::string& list) {
    std::vector<std::string> out;
    std::stringstream ss(list);
    std::string item;
    while (std::getline(ss, item, ',')) {
        if (!item.empty()) out.push_back(item);
    }
    return out;
}

int dispatch(int argc, const char* const* argv) {
    CLI::App app{"online residual learning over offline experts"};
    app.require_subcommand(1);

    // run
    auto* run = app.add_subcommand("run", "run the configured methods and emit CSV results");
    std::string run_config_path, run_out, run_traj, run_off, run_methods;
    std::uint64_t run_seed = 0;
    run->add_option("--config", run_config_path, "JSON config file")->required();
    run->add_option("--out", run_out, "output directory (overrides config)");
    run->add_option("--trajectory", run_traj, "trajectory CSV (overrides config)");
    run->add_option("--offline", run_off, "offline predictions CSV (overrides config)");
    auto* run_seed_opt = run->add_option("--seed", run_seed, "scenario seed (overrides config)");
    run->add_option("--methods", run_methods, "comma-separated method list (overrides config)");

    // tune
    auto* tune = app.add_subcommand("tune", "print the theoretical tuning constants");
    tuning::TuningInputs ti;
    tune->add_option("--D_r", ti.residual_bound, "residual norm bound")->required();
    tune->add_option("--D", ti.spectral_bound, "spectral norm bound")->required();
    tune->add_option("--T", ti.horizon, "horizon")->required();
    tune->add_option("--V_T", ti.path_length_budget, "comparator path-length budget")
        ->default_val(0.0);
    tune->add_option("--N", ti.num_experts, "number of experts")->default_val(20);

    // synth
    auto* synth = app.add_subcommand("synth", "generate a synthetic scenario as CSV files");
    std::string synth_config_path, synth_out, synth_kind = "static-linear";
    int synth_n = 2, synth_p = 2, synth_k = 1, synth_experts = 3;
    long synth_horizon = 1000;
    double synth_dmax = 0.0, synth_rho = 0.85;
    std::uint64_t synth_seed = 0;
    synth->add_option("--config", synth_config_path,
                      "JSON config with a 'scenario' (other flags override)");
    synth->add_option("--out", synth_out, "output directory")->required();
    auto* kind_opt = synth->add_option("--kind", synth_kind, "dynamics kind");
    auto* n_opt = synth->add_option("--n", synth_n, "state dimension");
    auto* p_opt = synth->add_option("--p", synth_p, "dynamics memory");
    auto* t_opt = synth->add_option("--T", synth_horizon, "horizon");
    auto* k_opt = synth->add_option("--k", synth_k, "prediction horizon");
    auto* experts_opt = synth->add_option("--N", synth_experts, "number of experts");
    auto* dmax_opt = synth->add_option("--d-max", synth_dmax, "disturbance bound");
    auto* rho_opt = synth->add_option("--spectral-radius", synth_rho, "dynamics spectral radius");
    auto* seed_opt = synth->add_option("--seed", synth_seed, "generator seed");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 1;
    }

    if (run->parsed()) {
        RunConfig cfg = load_run_config(run_config_path);
        if (!run_out.empty()) cfg.out_dir = run_out;
        if (!run_traj.empty()) {
            cfg.trajectory_path = run_traj;
            cfg.has_scenario = false;
        }
        if (!run_off.empty()) {
            cfg.offline_path = run_off;
            cfg.has_scenario = false;
        }
        if (run_seed_opt->count() > 0) cfg.seed = run_seed;
        if (!run_methods.empty()) cfg.methods = split_methods(run_methods);
        cmd_run(cfg, std::cerr);
        return 0;
    }
    if (tune->parsed()) {
        cmd_tune(ti, std::cout, std::cerr);
        return 0;
    }
    if (synth->parsed()) {
        SynthConfig sc;
        if (!synth_config_path.empty()) {
            RunConfig file_cfg = load_run_config(synth_config_path);
            if (!file_cfg.has_scenario)
                throw ConfigError("synth: config file has no 'scenario' section");
            sc.scenario = effective_scenario(file_cfg);
        } else {
            // Without a config every expert gets bounded noise of scale 0.5.
            sc.scenario.experts.assign(static_cast<std::size_t>(synth_experts),
                                       ExpertCorruption::noisy(0.5));
        }
        if (kind_opt->count() > 0 || synth_config_path.empty())
            sc.scenario.kind = parse_dynamics_kind(synth_kind);
        if (n_opt->count() > 0 || synth_config_path.empty()) sc.scenario.n = synth_n;
        if (p_opt->count() > 0 || synth_config_path.empty()) sc.scenario.p = synth_p;
        if (t_opt->count() > 0 || synth_config_path.empty()) sc.scenario.horizon = synth_horizon;
        if (k_opt->count() > 0 || synth_config_path.empty()) sc.scenario.k = synth_k;
        if (experts_opt->count() > 0 && !synth_config_path.empty())
            throw ConfigError("synth: --N cannot override a config scenario (corruptions are per "
                              "expert)");
        if (synth_config_path.empty()) sc.scenario.num_experts = synth_experts;
        if (dmax_opt->count() > 0 || synth_config_path.empty())
            sc.scenario.disturbance_bound = synth_dmax;
        if (rho_opt->count() > 0) sc.scenario.spectral_radius = synth_rho;
        if (seed_opt->count() > 0 || synth_config_path.empty()) sc.scenario.seed = synth_seed;
        sc.out_dir = synth_out;
        cmd_synth(sc, std::cout, std::cerr);
        return 0;
    }
    return 1;
}

}  // namespace

int run_cli(int argc, const char* const* argv) {
    try {
        return dispatch(argc, argv);
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 1;
    } catch (const DataError& e) {
        std::cerr << "data error: " << e.what() << "\n";
        return 2;
    } catch (const IoError& e) {
        std::cerr << "i/o error: " << e.what() << "\n";
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "internal error: " << e.what() << "\n";
        return 1;
    }
}

}  // namespace cli
}  // namespace orl
