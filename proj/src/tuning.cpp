#include "orl/tuning.hpp"

#include <algorithm>
#include <cmath>

namespace orl {
namespace tuning {

double lambda_max(double residual_bound, double spectral_bound) {
    if (!(residual_bound > 0.0))
        throw ConfigError("residual bound must be > 0, got " + fmt_g17(residual_bound));
    if (spectral_bound < 0.0)
        throw ConfigError("spectral bound must be >= 0, got " + fmt_g17(spectral_bound));
    const double dr2 = residual_bound * residual_bound;
    return 1.0 / (4.0 * (dr2 + spectral_bound * spectral_bound * dr2));
}

double exp_concavity_alpha(double residual_bound, double spectral_bound) {
    return lambda_max(residual_bound, spectral_bound);
}

double forgetting_factor(double path_length_budget, long horizon, double spectral_bound,
                         double min_gamma, bool* clamped) {
    if (horizon < 2) throw ConfigError("horizon must be >= 2 for the forgetting schedule");
    if (!(spectral_bound > 0.0))
        throw ConfigError("spectral bound must be > 0 for the forgetting schedule");
    if (path_length_budget < 0.0)
        throw ConfigError("path-length budget must be >= 0");
    if (!(min_gamma > 0.0) || min_gamma >= 1.0)
        throw ConfigError("min_gamma must lie in (0, 1)");

    const double t = static_cast<double>(horizon);
    const double log_t = std::log(t);
    const double drive = std::max(path_length_budget, log_t * log_t / t);
    const double gamma = 1.0 - 0.5 * std::sqrt(drive / (2.0 * spectral_bound * t));
    if (gamma <= min_gamma) {
        if (clamped) *clamped = true;
        return min_gamma;
    }
    if (clamped) *clamped = false;
    return gamma;
}

double expert_regret_term(int num_experts, double alpha) {
    if (num_experts < 1) throw ConfigError("expert count must be >= 1");
    if (!(alpha > 0.0)) throw ConfigError("alpha must be > 0");
    return std::log(static_cast<double>(num_experts)) / alpha;
}

double path_length(std::span<const Mat> comparators) {
    return path_length_k(comparators, 1);
}

double path_length_k(std::span<const Mat> comparators, int k) {
    if (k < 1) throw ConfigError("path-length stride k must be >= 1");
    if (comparators.empty()) throw DataError("path length needs a nonempty comparator sequence");
    const auto rows = comparators.front().rows();
    const auto cols = comparators.front().cols();
    for (const auto& m : comparators) {
        if (m.rows() != rows || m.cols() != cols)
            throw DataError("path length: comparator dimensions are inconsistent");
    }
    double total = 0.0;
    for (std::size_t j = 0; j + static_cast<std::size_t>(k) < comparators.size(); ++j) {
        total += (comparators[j + static_cast<std::size_t>(k)] - comparators[j]).norm();
    }
    return total;
}

}  // namespace tuning
}  // namespace orl
