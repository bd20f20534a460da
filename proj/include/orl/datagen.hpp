#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "orl/core.hpp"

namespace orl {

enum class DynamicsKind { StaticLinear, DriftingLinear, NonlinearSine };

DynamicsKind parse_dynamics_kind(const std::string& name);
std::string dynamics_kind_name(DynamicsKind kind);
std::vector<std::string> dynamics_kind_names();

/// How one synthetic offline expert deviates from the nominal prediction.
struct ExpertCorruption {
    enum class Kind { Exact, Bias, Noise, Drift };
    Kind kind = Kind::Exact;
    Vec bias;                 // Bias: constant offset added to every prediction
    double noise_scale = 0.0; // Noise: radius of the per-step offset ball
    long drift_onset = 0;     // Drift: predictions are exact before this step
    double drift_rate = 0.0;  // Drift: offset growth per step past the onset
    Vec drift_direction;      // Drift: direction; drawn from the seed if empty

    static ExpertCorruption exact();
    static ExpertCorruption biased(Vec bias);
    static ExpertCorruption noisy(double scale);
    static ExpertCorruption drifting(long onset, double rate, Vec direction = Vec());

    bool operator==(const ExpertCorruption&) const;
};

/// What the expert corruptions are applied to. Nominal models an offline
/// predictor that never sees the realized disturbance (its error grows with
/// the distribution shift); Truth models one whose error around the realized
/// path is purely its own systematic corruption.
enum class CorruptionReference { Nominal, Truth };

/// A reproducible scenario: an autoregressive target of order p with bounded
/// disturbance, plus N offline experts formed by corrupting either the
/// noise-free nominal rollout or the realized trajectory.
struct SyntheticScenario {
    int n = 2;
    int p = 2;
    long horizon = 0;  // T
    int k = 1;
    int num_experts = 0;
    DynamicsKind kind = DynamicsKind::StaticLinear;
    double disturbance_bound = 0.0;  // d_max
    double spectral_radius = 0.85;   // target spectral radius of the companion form
    double sine_amp = 0.2;           // nonlinear kind: amplitude of the sine term
    double sine_freq = 1.0;          // nonlinear kind: frequency of the sine term
    CorruptionReference reference = CorruptionReference::Nominal;
    std::vector<ExpertCorruption> experts;
    std::uint64_t seed = 0;

    void validate() const;
    bool operator==(const SyntheticScenario&) const;
};

struct GenerationMeta {
    double realized_residual_bound = 0.0;  // max residual norm over all (t, expert)
    std::vector<double> per_expert_max_residual;
    Mat dynamics_matrix;    // n x (n*p) block row [A_1 ... A_p], oldest block first
    Trajectory nominal;     // noise-free rollout the experts are built from
};

struct GeneratedData {
    Trajectory trajectory;  // states for t in [-p, T]
    OfflinePredictionSet offline;
    GenerationMeta meta;
};

/// Roll out the scenario. The truth follows
///   r_{t+1} = A * [r_{t-p+1}; ...; r_t] (+ sine term) (+ drift input) + d_t
/// with d_t uniform in the d_max-ball; experts are corrupted copies of the
/// nominal rollout (same dynamics, no disturbance, no drift input).
GeneratedData generate(const SyntheticScenario& scenario);

/// Trajectory CSV: header "t,x0,...,x{n-1}", one row per contiguous time
/// step; t may be negative for initial history.
Trajectory load_trajectory(const std::string& path);
void save_trajectory(const Trajectory& trajectory, const std::string& path);

/// Offline prediction CSV: header "expert,t,x0,...,x{n-1}" with expert ids in
/// 1..N and a complete grid over [0, T] x [1, N].
OfflinePredictionSet load_offline_predictions(const std::string& path, int num_experts,
                                              long horizon, int dim);
void save_offline_predictions(const OfflinePredictionSet& offline, const std::string& path);

}  // namespace orl
