#include "orl/ensemble.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace orl {

Vec uniform_weights(int num_experts) {
    if (num_experts < 1) throw ConfigError("expert count must be >= 1");
    return Vec::Constant(num_experts, 1.0 / static_cast<double>(num_experts));
}

Vec aggregate(const Vec& weights, const std::vector<Vec>& predictions) {
    if (static_cast<std::size_t>(weights.size()) != predictions.size())
        throw DataError("aggregate: weight/prediction count mismatch");
    if (predictions.empty()) throw DataError("aggregate: no predictions");
    const auto n = predictions.front().size();
    Vec out = Vec::Zero(n);
    for (std::size_t i = 0; i < predictions.size(); ++i) {
        if (predictions[i].size() != n) throw DataError("aggregate: prediction dimension mismatch");
        out += weights(static_cast<Eigen::Index>(i)) * predictions[i];
    }
    return out;
}

Vec update_weights(const Vec& weights, const Vec& losses, double learning_rate) {
    const Eigen::Index n = weights.size();
    if (losses.size() != n) throw DataError("update_weights: weight/loss count mismatch");
    if (!(learning_rate > 0.0) || !std::isfinite(learning_rate))
        throw ConfigError("learning rate must be positive and finite");
    if (!losses.allFinite()) throw DataError("update_weights: losses must be finite");

    // Shift by the smallest loss carried by a live (nonzero) weight. A dead
    // weight stays exactly zero regardless of its loss, so it cannot drag the
    // shift down and force every live factor to underflow.
    double shift = std::numeric_limits<double>::infinity();
    for (Eigen::Index i = 0; i < n; ++i) {
        if (weights(i) > 0.0) shift = std::min(shift, losses(i));
    }
    if (!std::isfinite(shift))
        throw InternalError("update_weights: weight vector has no live entry");

    Vec scaled(n);
    double total = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
        scaled(i) = weights(i) > 0.0
                        ? weights(i) * std::exp(-learning_rate * (losses(i) - shift))
                        : 0.0;
        total += scaled(i);
    }
    if (!(total > 0.0))
        throw InternalError("update_weights: normalization collapsed to zero");
    return scaled / total;
}

void PipelineConfig::validate() const {
    if (n < 1) throw ConfigError("state dimension n must be >= 1");
    if (p < 1) throw ConfigError("memory p must be >= 1");
    if (k < 1) throw ConfigError("prediction horizon k must be >= 1");
    if (num_experts < 1) throw ConfigError("expert count must be >= 1");
    if (horizon < k)
        throw ConfigError("horizon T must be >= k (no feedback ever arrives otherwise)");
    if (static_cast<int>(forgetting.size()) != num_experts)
        throw ConfigError("need one forgetting factor per expert");
    for (double g : forgetting) {
        if (!(g > 0.0) || g > 1.0)
            throw ConfigError("forgetting factors must lie in (0, 1]");
    }
    if (!(ridge > 0.0)) throw ConfigError("ridge multiplier must be > 0");
    if (spectral_bound < 0.0) throw ConfigError("spectral bound must be >= 0");
    if (!(residual_bound > 0.0)) throw ConfigError("residual bound must be > 0");
    if (!(learning_rate > 0.0)) throw ConfigError("learning rate must be > 0");
}

RlsConfig PipelineConfig::rls_config(int expert) const {
    RlsConfig cfg;
    cfg.forgetting = forgetting[static_cast<std::size_t>(expert)];
    cfg.ridge = ridge;
    cfg.spectral_bound = spectral_bound;
    cfg.projection = projection;
    return cfg;
}

ExpertEnsemble::ExpertEnsemble(PipelineConfig cfg, const OfflinePredictionSet& offline)
    : cfg_(std::move(cfg)), offline_(&offline) {
    cfg_.validate();
    offline.validate();
    if (offline.num_experts != cfg_.num_experts)
        throw DataError("offline prediction set has " + std::to_string(offline.num_experts) +
                        " experts, config expects " + std::to_string(cfg_.num_experts));
    if (offline.dim != cfg_.n)
        throw DataError("offline prediction dimension does not match config");
    if (offline.horizon < cfg_.horizon)
        throw DataError("offline predictions end at t=" + std::to_string(offline.horizon) +
                        ", horizon needs t=" + std::to_string(cfg_.horizon));

    weights_ = uniform_weights(cfg_.num_experts);
    banks_.reserve(static_cast<std::size_t>(cfg_.num_experts));
    for (int i = 0; i < cfg_.num_experts; ++i)
        banks_.emplace_back(cfg_.k, cfg_.n, cfg_.p, cfg_.rls_config(i));
    residuals_.resize(static_cast<std::size_t>(cfg_.num_experts));
    regressors_.resize(static_cast<std::size_t>(cfg_.num_experts));
}

const KStepLearnerBank& ExpertEnsemble::bank(int expert) const {
    if (expert < 0 || expert >= cfg_.num_experts) throw DataError("bank index out of range");
    return banks_[static_cast<std::size_t>(expert)];
}

StepOutput ExpertEnsemble::step(long t, const Vec& truth) {
    if (t != next_t_)
        throw DataError("ensemble step: expected t=" + std::to_string(next_t_) + ", got t=" +
                        std::to_string(t));
    if (t > cfg_.horizon) throw DataError("ensemble step: past the configured horizon");
    if (truth.size() != cfg_.n) throw DataError("ensemble step: state dimension mismatch");
    next_t_ = t + 1;

    const int N = cfg_.num_experts;
    const int k = cfg_.k;

    // Residual and regressor for time t, per expert.
    for (int i = 0; i < N; ++i) {
        auto& column = residuals_[static_cast<std::size_t>(i)];
        Vec e = residual(truth, offline_->at(i, t));
        const double norm = e.norm();
        max_residual_norm_ = std::max(max_residual_norm_, norm);
        if (norm > cfg_.residual_bound) ++residual_bound_violations_;
        column.push_back(std::move(e));
        regressors_[static_cast<std::size_t>(i)].push_back(
            stack_regressors(std::span<const Vec>(column), cfg_.p, cfg_.n));
    }

    StepOutput out;
    std::vector<Vec> residual_forecasts(static_cast<std::size_t>(N));

    if (t >= k) {
        // Score the prediction emitted k steps ago, refresh weights, and let
        // the active learner of each expert absorb the new pair.
        if (pending_.empty() || pending_.front().t != t)
            throw InternalError("ensemble step: pending prediction queue out of sync");
        EmittedPrediction scored_pred = std::move(pending_.front());
        pending_.erase(pending_.begin());

        ScoredStep scored;
        scored.t = t;
        scored.aggregate_prediction = std::move(scored_pred.aggregate);
        scored.expert_predictions = std::move(scored_pred.experts);
        scored.aggregate_loss = squared_loss(truth, scored.aggregate_prediction);
        scored.expert_losses = Vec(N);
        for (int i = 0; i < N; ++i)
            scored.expert_losses(i) =
                squared_loss(truth, scored.expert_predictions[static_cast<std::size_t>(i)]);

        weights_ = update_weights(weights_, scored.expert_losses, cfg_.learning_rate);
        scored.weights = weights_;
        out.scored = std::move(scored);

        for (int i = 0; i < N; ++i) {
            const auto& zs = regressors_[static_cast<std::size_t>(i)];
            const Vec& e_t = residuals_[static_cast<std::size_t>(i)][static_cast<std::size_t>(t)];
            const Vec& z_feedback = zs[static_cast<std::size_t>(t - k)];
            const Vec& z_current = zs[static_cast<std::size_t>(t)];
            residual_forecasts[static_cast<std::size_t>(i)] =
                cfg_.residual_learning
                    ? banks_[static_cast<std::size_t>(i)].step(t, e_t, z_feedback, z_current)
                    : Vec::Zero(cfg_.n);
        }
    } else {
        // Warm-up window: no feedback yet, learners predict from their
        // initial state.
        for (int i = 0; i < N; ++i) {
            const Vec& z_current = regressors_[static_cast<std::size_t>(i)][static_cast<std::size_t>(t)];
            residual_forecasts[static_cast<std::size_t>(i)] =
                cfg_.residual_learning ? banks_[static_cast<std::size_t>(i)].predict_at(t, z_current)
                                       : Vec::Zero(cfg_.n);
        }
    }

    if (t + k <= cfg_.horizon) {
        EmittedPrediction emitted;
        emitted.t = t + k;
        emitted.experts.resize(static_cast<std::size_t>(N));
        for (int i = 0; i < N; ++i)
            emitted.experts[static_cast<std::size_t>(i)] = corrected_prediction(
                residual_forecasts[static_cast<std::size_t>(i)], offline_->at(i, t + k));
        emitted.aggregate = aggregate(weights_, emitted.experts);
        pending_.push_back(emitted);
        out.emitted = std::move(emitted);
    }

    return out;
}

}  // namespace orl
