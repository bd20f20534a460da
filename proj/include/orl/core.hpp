#pragma once

#include <Eigen/Dense>
#include <span>
#include <vector>

#include "orl/common.hpp"

namespace orl {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

/// A target trajectory over contiguous integer time steps. start_time may be
/// negative: indices before 0 hold the initial history that seeds an
/// order-p recursion.
struct Trajectory {
    long start_time = 0;
    std::vector<Vec> states;

    int dim() const { return states.empty() ? 0 : static_cast<int>(states.front().size()); }
    long end_time() const { return start_time + static_cast<long>(states.size()) - 1; }
    bool contains(long t) const { return t >= start_time && t <= end_time(); }
    const Vec& at(long t) const;
    void validate() const;  // contiguity is structural; checks dimensions
};

/// N precomputed expert predictions covering every time step in [0, horizon].
/// Experts are 0-based in memory; file formats use 1-based ids.
struct OfflinePredictionSet {
    long horizon = 0;
    int num_experts = 0;
    int dim = 0;
    std::vector<std::vector<Vec>> grid;  // [expert][t], t in [0, horizon]

    const Vec& at(int expert, long t) const;
    void validate() const;
};

/// Difference between the true state and one offline prediction.
Vec residual(const Vec& r, const Vec& r_off);

/// Stack the p most recent residuals, oldest block first, into one vector of
/// length n*p. `history` is ordered oldest to newest and ends at the current
/// time; if it holds fewer than p entries the missing old blocks are zero.
Vec stack_regressors(std::span<const Vec> history, int p, int n);

/// Offline prediction plus predicted residual.
Vec corrected_prediction(const Vec& e_hat, const Vec& r_off);

/// Squared Euclidean prediction error.
double squared_loss(const Vec& r, const Vec& r_hat);

}  // namespace orl
