#pragma once

#include <span>
#include <string>
#include <vector>

#include "orl/core.hpp"
#include "orl/ensemble.hpp"

namespace orl {
namespace bench {

enum class Method { Orl, Online, OfflineExperts, BestOffline };

Method parse_method(const std::string& name);
std::string method_name(Method m);
std::vector<std::string> method_names();

/// Per-step record of one method run over the scored window [k, T].
struct RunTrace {
    std::string method;
    long first_t = 0;  // == k; row i describes time first_t + i
    int num_experts = 0;
    std::vector<double> inst;          // instantaneous loss
    std::vector<double> cum;           // prefix sums of inst
    std::vector<Vec> predictions;      // what was predicted for each scored time
    std::vector<std::vector<Vec>> expert_predictions;  // ensemble methods only
    std::vector<Vec> expert_losses;                    // ensemble methods only
    std::vector<Vec> weights;                          // ensemble methods only
    double max_residual_norm = 0.0;
    long residual_bound_violations = 0;
    int best_offline_expert = -1;  // chosen expert (BestOffline only)

    std::size_t steps() const { return inst.size(); }
    double total() const { return cum.empty() ? 0.0 : cum.back(); }
    bool has_weights() const { return !weights.empty(); }
};

/// Run one prediction method over the data. All methods are scored on the
/// same window t in [k, T] so their cumulative losses are comparable.
RunTrace run_method(Method method, const Trajectory& trajectory,
                    const OfflinePredictionSet& offline, const PipelineConfig& cfg);

/// Mean instantaneous squared loss over the scored window.
double ade_sq(const RunTrace& trace);
/// Mean Euclidean displacement (square root of each loss) over the window.
double ade_l2(const RunTrace& trace);

/// Residual streams e_{t,i} for t in [0, T], one per expert.
std::vector<std::vector<Vec>> residual_streams(const Trajectory& trajectory,
                                               const OfflinePredictionSet& offline, long horizon);

/// Best static predictor per expert in hindsight. Solves the ridge problem
///   min_M sum_{t=k}^{T} ||e_t - M z_{t-k}||^2 + ||M||_F^2
/// in closed form; when the minimizer leaves the spectral ball a projected
/// gradient pass produces the constrained solution. `losses` holds the pure
/// (ridge-free) comparator losses of the feasible solutions.
struct StaticComparator {
    std::vector<Mat> predictors;              // feasible (constrained) solutions
    std::vector<double> losses;               // sum of squared errors of `predictors`
    std::vector<double> unconstrained_losses; // same for the raw ridge minimizers
    std::vector<char> constrained;            // 1 where the ball constraint was active
    std::vector<Mat> gram;                    // per expert: sum z z^T + I
    std::vector<Mat> cross;                   // per expert: sum e z^T

    double best_loss() const;
};

StaticComparator hindsight_static_comparator(const std::vector<std::vector<Vec>>& residuals,
                                             int p, int k, long horizon, double spectral_bound);

struct RegretReport {
    std::string comparator;
    double comparator_loss = 0.0;
    double regret = 0.0;
    double comparator_path_length = 0.0;
};

/// Cumulative loss of the trace minus the best static comparator loss.
RegretReport empirical_regret(const RunTrace& trace, const StaticComparator& comparator);

/// Evaluate a user-supplied time-varying comparator sequence on one residual
/// stream. predictors[j] is applied at scored time k + j.
struct ComparatorEvaluation {
    double loss = 0.0;
    double path_length = 0.0;    // stride-1 total variation
    double path_length_k = 0.0;  // stride-k total variation
};

ComparatorEvaluation evaluate_comparator_sequence(const std::vector<Vec>& residual_stream,
                                                  std::span<const Mat> predictors, int p, int k,
                                                  long horizon);

struct MethodResult {
    std::string method;
    double cumulative_loss = 0.0;
    double ade_sq = 0.0;
    double ade_l2 = 0.0;
    double regret_static = 0.0;
};

MethodResult summarize(const RunTrace& trace, const StaticComparator& comparator);

/// Write loss_<method>.csv (header t,loss,cumloss) per trace plus
/// weights.csv (header t,w_1,...,w_N) from the first trace that carries
/// weights. Deterministic: rerunning produces byte-identical files.
void emit_plot_data(const std::vector<RunTrace>& traces, const std::string& out_dir);

/// Write summary.csv (header method,cumloss,ade_sq,ade_l2,regret_static).
void write_summary(const std::vector<MethodResult>& results, const std::string& out_dir);

}  // namespace bench
}  // namespace orl
