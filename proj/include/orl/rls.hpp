#pragma once

#include <optional>
#include <vector>

#include "orl/core.hpp"

namespace orl {

/// How candidate predictors are mapped back into the spectral-norm ball.
/// Exact solves the precision-weighted projection; Scale just rescales the
/// candidate by bound/||M|| (cheap, approximate, kept for speed comparisons).
enum class ProjectionMode { Exact, Scale };

struct RlsConfig {
    double forgetting = 0.8;      // geometric discount on past squared errors, in (0, 1]
    double ridge = 1.0;           // regularization multiplier seeding the precision matrix
    double spectral_bound = 1.0;  // radius of the feasible predictor set {||M||_2 <= bound}
    ProjectionMode projection = ProjectionMode::Exact;

    void validate() const;
};

double spectral_norm(const Mat& m);

/// Euclidean (unweighted Frobenius) projection onto {||M||_2 <= bound}:
/// clip the singular values.
Mat clip_spectral(const Mat& m, double bound);

/// Minimize tr((M - m_star) P (M - m_star)^T) over the spectral ball by
/// projected gradient with step 1/lambda_max(P). Monotone in the objective,
/// started from the better of the clipped and rescaled candidates, so the
/// result is never worse than plain rescaling. For P = c*I the first iterate
/// is already the exact solution (singular-value clipping).
Mat project_weighted(const Mat& m_star, const Mat& p, double bound);

/// Projection used after each recursive update. Feasible candidates pass
/// through unchanged; a precision matrix that is numerically a multiple of
/// the identity reduces the problem to singular-value clipping.
Mat project_to_spectral_ball(const Mat& m_star, const Mat& p, double bound,
                             ProjectionMode mode = ProjectionMode::Exact);

/// Recursive least squares with forgetting for one residual stream.
///
/// Maintains the n x (n*p) predictor matrix and the (n*p) x (n*p) precision
/// matrix (discounted regressor Gram plus ridge seed). Each update folds in
/// one (feedback, regressor) pair and re-projects the predictor onto the
/// spectral ball; the recursion reproduces the closed-form discounted ridge
/// minimizer whenever the projection stays inactive.
class RlsLearner {
public:
    RlsLearner(int n, int p, RlsConfig cfg, const std::optional<Mat>& m0 = std::nullopt);

    /// Predicted value for a regressor: predictor * z.
    Vec predict(const Vec& z) const;

    /// Fold in feedback `e` for the prediction that was made from `z_used`:
    ///   P <- forgetting * P + z z^T
    ///   M <- project(M + (e - M z) z^T P^{-1})
    void update(const Vec& e, const Vec& z_used);

    const Mat& predictor() const { return predictor_; }
    const Mat& precision() const { return precision_; }
    long updates() const { return updates_; }
    int dim() const { return n_; }
    int memory() const { return p_; }
    const RlsConfig& config() const { return cfg_; }

    /// Lower bound forgetting^updates * ridge on the precision spectrum.
    double precision_floor() const;

private:
    int n_;
    int p_;
    RlsConfig cfg_;
    Mat predictor_;  // n x (n*p)
    Mat precision_;  // (n*p) x (n*p), symmetric positive definite
    long updates_ = 0;
};

/// k independent learner copies handling k-step delayed feedback: at time t
/// only the learner with index t mod k is touched, so each copy sees a
/// non-overlapping subsequence of the data.
class KStepLearnerBank {
public:
    KStepLearnerBank(int k, int n, int p, const RlsConfig& cfg);

    static int learner_index(long t, int k);

    /// Process feedback for time t (requires t >= k, consecutive calls from
    /// t = k): learner t mod k is updated with the pair (feedback at t,
    /// regressor from t-k), then predicts k steps ahead from z_current.
    /// Returns that prediction for time t + k.
    Vec step(long t, const Vec& feedback, const Vec& z_feedback, const Vec& z_current);

    /// Prediction for time t + k without any update. Used during the first k
    /// steps, before any feedback exists.
    Vec predict_at(long t, const Vec& z_current) const;

    int horizon() const { return k_; }
    const RlsLearner& learner(int j) const;
    std::vector<long> update_counts() const;

private:
    int k_;
    std::vector<RlsLearner> learners_;
    long next_t_;  // next expected feedback time
};

}  // namespace orl
