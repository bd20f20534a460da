#include "orl/core.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

namespace orl {

std::string fmt_g17(double value) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", value);
    return buf;
}

const Vec& Trajectory::at(long t) const {
    if (!contains(t)) {
        throw DataError("trajectory has no state at t=" + std::to_string(t) +
                        " (covers [" + std::to_string(start_time) + ", " +
                        std::to_string(end_time()) + "])");
    }
    return states[static_cast<std::size_t>(t - start_time)];
}

void Trajectory::validate() const {
    if (states.empty()) throw DataError("trajectory is empty");
    const auto n = states.front().size();
    if (n < 1) throw DataError("trajectory states must have dimension >= 1");
    for (const auto& s : states) {
        if (s.size() != n) throw DataError("trajectory states have inconsistent dimensions");
        if (!s.allFinite()) throw DataError("trajectory contains non-finite values");
    }
}

const Vec& OfflinePredictionSet::at(int expert, long t) const {
    if (expert < 0 || expert >= num_experts) {
        throw DataError("expert index " + std::to_string(expert + 1) + " outside [1, " +
                        std::to_string(num_experts) + "]");
    }
    if (t < 0 || t > horizon) {
        throw DataError("missing offline prediction at (expert=" + std::to_string(expert + 1) +
                        ", t=" + std::to_string(t) + ")");
    }
    return grid[static_cast<std::size_t>(expert)][static_cast<std::size_t>(t)];
}

void OfflinePredictionSet::validate() const {
    if (num_experts < 1) throw DataError("offline prediction set needs at least one expert");
    if (horizon < 0) throw DataError("offline horizon must be >= 0");
    if (dim < 1) throw DataError("offline prediction dimension must be >= 1");
    if (static_cast<int>(grid.size()) != num_experts)
        throw DataError("offline grid has wrong expert count");
    for (const auto& column : grid) {
        if (static_cast<long>(column.size()) != horizon + 1)
            throw DataError("offline grid column does not cover [0, horizon]");
        for (const auto& v : column) {
            if (v.size() != dim) throw DataError("offline prediction has wrong dimension");
            if (!v.allFinite()) throw DataError("offline prediction contains non-finite values");
        }
    }
}

Vec residual(const Vec& r, const Vec& r_off) {
    if (r.size() != r_off.size())
        throw DataError("residual: dimension mismatch (" + std::to_string(r.size()) + " vs " +
                        std::to_string(r_off.size()) + ")");
    return r - r_off;
}

Vec stack_regressors(std::span<const Vec> history, int p, int n) {
    if (p < 1) throw ConfigError("regressor memory p must be >= 1");
    if (n < 1) throw ConfigError("state dimension n must be >= 1");
    for (const auto& e : history) {
        if (e.size() != n) throw DataError("stack_regressors: residual dimension mismatch");
    }
    Vec z = Vec::Zero(static_cast<Eigen::Index>(n) * p);
    // The newest residual occupies the last block; short histories leave the
    // oldest blocks at zero.
    const int have = std::min<long>(p, static_cast<long>(history.size()));
    for (int j = 0; j < have; ++j) {
        const Vec& e = history[history.size() - 1 - static_cast<std::size_t>(j)];
        z.segment(static_cast<Eigen::Index>(n) * (p - 1 - j), n) = e;
    }
    return z;
}

Vec corrected_prediction(const Vec& e_hat, const Vec& r_off) {
    if (e_hat.size() != r_off.size())
        throw DataError("corrected_prediction: dimension mismatch");
    return e_hat + r_off;
}

double squared_loss(const Vec& r, const Vec& r_hat) {
    if (r.size() != r_hat.size()) throw DataError("squared_loss: dimension mismatch");
    return (r - r_hat).squaredNorm();
}

}  // namespace orl
