#pragma once

#include <span>

#include "orl/core.hpp"

namespace orl {
namespace tuning {

/// Inputs of the theoretical tuning rules.
struct TuningInputs {
    double residual_bound = 0.0;     // uniform bound on residual norms
    double spectral_bound = 0.0;     // radius of the feasible predictor set
    long horizon = 0;                // number of online steps T
    double path_length_budget = 0.0; // allowed total variation of comparators
    int num_experts = 0;
};

/// Largest learning rate for which the expert-regret guarantee applies:
/// 1 / (4 (D_r^2 + D^2 D_r^2)) for residual bound D_r and spectral bound D.
double lambda_max(double residual_bound, double spectral_bound);

/// Exp-concavity constant of the bounded squared loss; identical to
/// lambda_max by construction.
double exp_concavity_alpha(double residual_bound, double spectral_bound);

/// Forgetting-factor schedule
///   gamma = 1 - (1/2) sqrt(max{V_T, ln^2 T / T} / (2 D T)).
/// Values at or below min_gamma are clamped to min_gamma (the schedule is
/// asymptotic guidance; short horizons with large budgets would otherwise
/// drive gamma nonpositive). `clamped`, when given, reports whether the
/// clamp fired. Natural logarithm throughout.
double forgetting_factor(double path_length_budget, long horizon, double spectral_bound,
                         double min_gamma = 0.05, bool* clamped = nullptr);

/// Additive regret term paid for aggregating N experts: ln(N) / alpha.
double expert_regret_term(int num_experts, double alpha);

/// Total Frobenius variation of a comparator sequence:
/// sum_j ||M_{j+1} - M_j||_F.
double path_length(std::span<const Mat> comparators);

/// Stride-k variant: sum_j ||M_{j+k} - M_j||_F over all valid j. Reduces to
/// path_length for k = 1.
double path_length_k(std::span<const Mat> comparators, int k);

}  // namespace tuning
}  // namespace orl
