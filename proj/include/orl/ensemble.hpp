#pragma once

#include <optional>
#include <vector>

#include "orl/core.hpp"
#include "orl/rls.hpp"

namespace orl {

/// Uniform simplex point 1/N used to initialize expert weights.
Vec uniform_weights(int num_experts);

/// Weighted average of expert predictions, summed in ascending expert index
/// for bitwise reproducibility.
Vec aggregate(const Vec& weights, const std::vector<Vec>& predictions);

/// Multiplicative weight update w_i <- w_i exp(-rate * loss_i), renormalized
/// to the simplex. The smallest loss among live experts is subtracted before
/// exponentiation; the result is unchanged by any common shift of the losses
/// (the factor cancels in the normalization) and no finite loss pattern can
/// produce NaN/Inf or a zero denominator.
Vec update_weights(const Vec& weights, const Vec& losses, double learning_rate);

/// Configuration of the two-level predictor (per-expert residual learners
/// plus exponential-weights aggregation).
struct PipelineConfig {
    int n = 0;  // state dimension
    int p = 2;  // regressor memory
    int k = 1;  // prediction horizon (feedback delay)
    int num_experts = 0;
    long horizon = 0;  // last time step T
    std::vector<double> forgetting;  // one factor per expert
    double ridge = 1.0;
    double spectral_bound = 1.0;
    double residual_bound = 1.0;  // assumed residual norm bound; exceeding it warns
    double learning_rate = 1e-4;
    bool residual_learning = true;  // false: pass raw offline predictions through
    ProjectionMode projection = ProjectionMode::Exact;

    void validate() const;
    RlsConfig rls_config(int expert) const;
};

/// What happened at one time step.
struct ScoredStep {
    long t = 0;                       // time whose truth was just received
    double aggregate_loss = 0.0;      // loss of the aggregate prediction for t
    Vec expert_losses;                // per corrected expert
    Vec aggregate_prediction;         // what was predicted for t
    std::vector<Vec> expert_predictions;
    Vec weights;                      // weights after folding in these losses
};

struct EmittedPrediction {
    long t = 0;  // target time (current time + k)
    Vec aggregate;
    std::vector<Vec> experts;
};

struct StepOutput {
    std::optional<ScoredStep> scored;      // present once t >= k
    std::optional<EmittedPrediction> emitted;  // present while t + k <= horizon
};

/// The online residual pipeline over N offline experts. Each expert owns a
/// k-learner bank trained on its residual stream; corrected predictions are
/// combined with exponential weights. Feedback for time t arrives k steps
/// after the prediction was emitted, and weights are refreshed as soon as a
/// loss becomes computable.
class ExpertEnsemble {
public:
    ExpertEnsemble(PipelineConfig cfg, const OfflinePredictionSet& offline);

    /// Advance one step: ingest the true state for time t (t must increase
    /// from 0 one step at a time), score the prediction previously emitted
    /// for t, update weights and learners, and emit the prediction for t + k.
    StepOutput step(long t, const Vec& truth);

    const Vec& weights() const { return weights_; }
    const PipelineConfig& config() const { return cfg_; }
    const KStepLearnerBank& bank(int expert) const;

    double max_residual_norm() const { return max_residual_norm_; }
    long residual_bound_violations() const { return residual_bound_violations_; }

private:
    PipelineConfig cfg_;
    const OfflinePredictionSet* offline_;
    std::vector<KStepLearnerBank> banks_;
    Vec weights_;
    std::vector<std::vector<Vec>> residuals_;   // [expert][t]
    std::vector<std::vector<Vec>> regressors_;  // [expert][t]
    std::vector<EmittedPrediction> pending_;    // predictions awaiting feedback
    long next_t_ = 0;
    double max_residual_norm_ = 0.0;
    long residual_bound_violations_ = 0;
};

}  // namespace orl
