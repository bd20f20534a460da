#include "orl/rls.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>
#include <cmath>

namespace orl {

void RlsConfig::validate() const {
    if (!(forgetting > 0.0) || forgetting > 1.0)
        throw ConfigError("forgetting factor must lie in (0, 1], got " + fmt_g17(forgetting));
    if (!(ridge > 0.0))
        throw ConfigError("ridge multiplier must be > 0, got " + fmt_g17(ridge));
    if (spectral_bound < 0.0 || !std::isfinite(spectral_bound))
        throw ConfigError("spectral bound must be >= 0, got " + fmt_g17(spectral_bound));
}

double spectral_norm(const Mat& m) {
    if (m.size() == 0) return 0.0;
    return Eigen::JacobiSVD<Mat>(m).singularValues()(0);
}

Mat clip_spectral(const Mat& m, double bound) {
    // Frobenius norm dominates the spectral norm; skip the SVD when the
    // candidate cannot be infeasible.
    if (m.norm() <= bound) return m;
    Eigen::JacobiSVD<Mat> svd(m, Eigen::ComputeThinU | Eigen::ComputeThinV);
    if (svd.singularValues()(0) <= bound) return m;
    Vec s = svd.singularValues().cwiseMin(bound);
    return svd.matrixU() * s.asDiagonal() * svd.matrixV().transpose();
}

namespace {

double weighted_dist_sq(const Mat& m, const Mat& m_star, const Mat& p) {
    Mat d = m - m_star;
    return (d * p).cwiseProduct(d).sum();  // tr(d P d^T)
}

bool is_scaled_identity(const Mat& p) {
    const Eigen::Index m = p.rows();
    const double d0 = p(0, 0);
    const double tol = 1e-12 * std::abs(d0);
    for (Eigen::Index i = 0; i < m; ++i) {
        if (std::abs(p(i, i) - d0) > tol) return false;
        for (Eigen::Index j = 0; j < m; ++j) {
            if (i != j && std::abs(p(i, j)) > tol) return false;
        }
    }
    return true;
}

}  // namespace

Mat project_weighted(const Mat& m_star, const Mat& p, double bound) {
    Eigen::SelfAdjointEigenSolver<Mat> es(p, Eigen::EigenvaluesOnly);
    const double lam_max = es.eigenvalues().maxCoeff();
    if (!(lam_max > 0.0)) throw InternalError("weighted projection needs a positive definite weight");

    const double ns = spectral_norm(m_star);
    if (ns <= bound) return m_star;

    // Two feasible starting candidates; keep the better one in the weighted
    // metric so the iteration can only improve on plain rescaling.
    Mat clipped = clip_spectral(m_star, bound);
    Mat scaled = m_star * (bound / ns);
    Mat m = weighted_dist_sq(clipped, m_star, p) <= weighted_dist_sq(scaled, m_star, p)
                ? std::move(clipped)
                : std::move(scaled);

    double obj = weighted_dist_sq(m, m_star, p);
    for (int it = 0; it < 500; ++it) {
        Mat candidate = clip_spectral(m - ((m - m_star) * p) / lam_max, bound);
        const double candidate_obj = weighted_dist_sq(candidate, m_star, p);
        if (candidate_obj < obj) {
            m = std::move(candidate);
            if (obj - candidate_obj < 1e-10 * std::max(1.0, obj)) {
                obj = candidate_obj;
                break;
            }
            obj = candidate_obj;
        } else {
            break;
        }
    }
    return m;
}

Mat project_to_spectral_ball(const Mat& m_star, const Mat& p, double bound, ProjectionMode mode) {
    const double ns = spectral_norm(m_star);
    if (ns <= bound) return m_star;
    if (mode == ProjectionMode::Scale) return m_star * (bound / ns);
    if (is_scaled_identity(p)) return clip_spectral(m_star, bound);
    return project_weighted(m_star, p, bound);
}

RlsLearner::RlsLearner(int n, int p, RlsConfig cfg, const std::optional<Mat>& m0)
    : n_(n), p_(p), cfg_(cfg) {
    if (n < 1) throw ConfigError("state dimension n must be >= 1");
    if (p < 1) throw ConfigError("memory p must be >= 1");
    cfg_.validate();
    const Eigen::Index d = static_cast<Eigen::Index>(n) * p;
    precision_ = cfg_.ridge * Mat::Identity(d, d);
    if (m0) {
        if (m0->rows() != n || m0->cols() != d)
            throw ConfigError("initial predictor must be n x (n*p)");
        if (spectral_norm(*m0) > cfg_.spectral_bound)
            throw ConfigError("initial predictor lies outside the spectral ball");
        predictor_ = *m0;
    } else {
        predictor_ = Mat::Zero(n, d);
    }
}

Vec RlsLearner::predict(const Vec& z) const {
    if (z.size() != predictor_.cols())
        throw DataError("rls predict: regressor has length " + std::to_string(z.size()) +
                        ", expected " + std::to_string(predictor_.cols()));
    return predictor_ * z;
}

void RlsLearner::update(const Vec& e, const Vec& z_used) {
    if (e.size() != n_) throw DataError("rls update: feedback has wrong dimension");
    if (z_used.size() != precision_.rows())
        throw DataError("rls update: regressor has wrong length");

    precision_ = cfg_.forgetting * precision_ + z_used * z_used.transpose();

    // P^{-1} z. With forgetting < 1 and regressors confined to a subspace the
    // ridge seed gamma^t * epsilon can underflow, leaving P numerically
    // singular; fall back to a clamped-spectrum pseudo-solve so the gain
    // stays finite (the projection bounds the predictor either way).
    Eigen::LDLT<Mat> ldlt(precision_);
    Vec gain;
    if (ldlt.info() == Eigen::Success) gain = ldlt.solve(z_used);
    if (ldlt.info() != Eigen::Success || !gain.allFinite()) {
        Eigen::SelfAdjointEigenSolver<Mat> es(precision_);
        if (es.info() != Eigen::Success)
            throw InternalError("precision matrix eigendecomposition failed");
        const double floor = std::max(es.eigenvalues().maxCoeff(), cfg_.ridge) * 1e-14;
        Vec inv = es.eigenvalues().unaryExpr(
            [floor](double lam) { return 1.0 / std::max(lam, floor); });
        gain = es.eigenvectors() * (inv.asDiagonal() * (es.eigenvectors().transpose() * z_used));
    }

    Vec innovation = e - predictor_ * z_used;
    Mat candidate = predictor_ + innovation * gain.transpose();
    predictor_ = project_to_spectral_ball(candidate, precision_, cfg_.spectral_bound,
                                          cfg_.projection);
    ++updates_;
}

double RlsLearner::precision_floor() const {
    return std::pow(cfg_.forgetting, static_cast<double>(updates_)) * cfg_.ridge;
}

KStepLearnerBank::KStepLearnerBank(int k, int n, int p, const RlsConfig& cfg) : k_(k), next_t_(k) {
    if (k < 1) throw ConfigError("prediction horizon k must be >= 1");
    learners_.reserve(static_cast<std::size_t>(k));
    for (int j = 0; j < k; ++j) learners_.emplace_back(n, p, cfg);
}

int KStepLearnerBank::learner_index(long t, int k) {
    if (k < 1) throw ConfigError("prediction horizon k must be >= 1");
    if (t < 0) throw DataError("learner_index: time must be >= 0");
    return static_cast<int>(t % k);
}

Vec KStepLearnerBank::step(long t, const Vec& feedback, const Vec& z_feedback,
                           const Vec& z_current) {
    if (t < k_)
        throw DataError("bank step: no feedback can exist before t = k (got t=" +
                        std::to_string(t) + ", k=" + std::to_string(k_) + ")");
    if (t != next_t_)
        throw DataError("bank step: expected feedback for t=" + std::to_string(next_t_) +
                        ", got t=" + std::to_string(t));
    next_t_ = t + 1;

    RlsLearner& active = learners_[static_cast<std::size_t>(learner_index(t, k_))];
    active.update(feedback, z_feedback);
    return active.predict(z_current);
}

Vec KStepLearnerBank::predict_at(long t, const Vec& z_current) const {
    const RlsLearner& active = learners_[static_cast<std::size_t>(learner_index(t, k_))];
    return active.predict(z_current);
}

const RlsLearner& KStepLearnerBank::learner(int j) const {
    if (j < 0 || j >= k_) throw DataError("bank learner index out of range");
    return learners_[static_cast<std::size_t>(j)];
}

std::vector<long> KStepLearnerBank::update_counts() const {
    std::vector<long> counts;
    counts.reserve(learners_.size());
    for (const auto& l : learners_) counts.push_back(l.updates());
    return counts;
}

}  // namespace orl
