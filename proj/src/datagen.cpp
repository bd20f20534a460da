#include "orl/datagen.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include "orl/rng.hpp"

namespace orl {

namespace {

constexpr double kDriftInputNorm = 1.0;   // terminal magnitude of the drifting input
constexpr double kDriftRampFraction = 0.1;  // fraction of the horizon the ramp spans

// Substream tags so each consumer of randomness is decoupled from the others.
enum : std::uint64_t {
    kTagDynamics = 1,
    kTagInitialHistory = 2,
    kTagDisturbance = 3,
    kTagDriftInput = 4,
    kTagExpertBase = 100,
};

}  // namespace

DynamicsKind parse_dynamics_kind(const std::string& name) {
    if (name == "static-linear") return DynamicsKind::StaticLinear;
    if (name == "drifting-linear") return DynamicsKind::DriftingLinear;
    if (name == "nonlinear-sine") return DynamicsKind::NonlinearSine;
    std::string valid;
    for (const auto& v : dynamics_kind_names()) valid += (valid.empty() ? "" : ", ") + v;
    throw ConfigError("unknown dynamics kind '" + name + "' (valid: " + valid + ")");
}

std::string dynamics_kind_name(DynamicsKind kind) {
    switch (kind) {
        case DynamicsKind::StaticLinear: return "static-linear";
        case DynamicsKind::DriftingLinear: return "drifting-linear";
        case DynamicsKind::NonlinearSine: return "nonlinear-sine";
    }
    throw InternalError("unhandled dynamics kind");
}

std::vector<std::string> dynamics_kind_names() {
    return {"static-linear", "drifting-linear", "nonlinear-sine"};
}

ExpertCorruption ExpertCorruption::exact() { return {}; }

ExpertCorruption ExpertCorruption::biased(Vec bias) {
    ExpertCorruption c;
    c.kind = Kind::Bias;
    c.bias = std::move(bias);
    return c;
}

ExpertCorruption ExpertCorruption::noisy(double scale) {
    ExpertCorruption c;
    c.kind = Kind::Noise;
    c.noise_scale = scale;
    return c;
}

ExpertCorruption ExpertCorruption::drifting(long onset, double rate, Vec direction) {
    ExpertCorruption c;
    c.kind = Kind::Drift;
    c.drift_onset = onset;
    c.drift_rate = rate;
    c.drift_direction = std::move(direction);
    return c;
}

bool ExpertCorruption::operator==(const ExpertCorruption& o) const {
    auto veq = [](const Vec& a, const Vec& b) { return a.size() == b.size() && a == b; };
    return kind == o.kind && veq(bias, o.bias) && noise_scale == o.noise_scale &&
           drift_onset == o.drift_onset && drift_rate == o.drift_rate &&
           veq(drift_direction, o.drift_direction);
}

void SyntheticScenario::validate() const {
    if (n < 1) throw ConfigError("scenario: n must be >= 1");
    if (p < 1) throw ConfigError("scenario: p must be >= 1");
    if (horizon < 1) throw ConfigError("scenario: horizon T must be >= 1");
    if (k < 1) throw ConfigError("scenario: k must be >= 1");
    if (num_experts < 1) throw ConfigError("scenario: need at least one expert");
    if (disturbance_bound < 0.0)
        throw ConfigError("scenario: disturbance bound d_max must be >= 0");
    if (!(spectral_radius > 0.0) || spectral_radius >= 1.0)
        throw ConfigError("scenario: spectral radius must lie in (0, 1); values >= 1 imply "
                          "unbounded states");
    if (static_cast<int>(experts.size()) != num_experts)
        throw ConfigError("scenario: need exactly one corruption spec per expert");
    for (const auto& c : experts) {
        switch (c.kind) {
            case ExpertCorruption::Kind::Exact: break;
            case ExpertCorruption::Kind::Bias:
                if (c.bias.size() != n) throw ConfigError("scenario: bias vector must have length n");
                break;
            case ExpertCorruption::Kind::Noise:
                if (c.noise_scale < 0.0) throw ConfigError("scenario: noise scale must be >= 0");
                break;
            case ExpertCorruption::Kind::Drift:
                if (c.drift_onset < 0 || c.drift_onset > horizon)
                    throw ConfigError("scenario: drift onset must lie in [0, T]");
                if (c.drift_rate < 0.0) throw ConfigError("scenario: drift rate must be >= 0");
                if (c.drift_direction.size() != 0 && c.drift_direction.size() != n)
                    throw ConfigError("scenario: drift direction must have length n");
                break;
        }
    }
}

bool SyntheticScenario::operator==(const SyntheticScenario& o) const {
    return n == o.n && p == o.p && horizon == o.horizon && k == o.k &&
           num_experts == o.num_experts && kind == o.kind &&
           disturbance_bound == o.disturbance_bound && spectral_radius == o.spectral_radius &&
           sine_amp == o.sine_amp && sine_freq == o.sine_freq && reference == o.reference &&
           experts == o.experts && seed == o.seed;
}

namespace {

// Companion form of the order-p block row [A_1 ... A_p] (oldest block first).
Mat companion(const Mat& a, int n, int p) {
    const Eigen::Index d = static_cast<Eigen::Index>(n) * p;
    Mat c = Mat::Zero(d, d);
    if (p > 1) c.topRightCorner(d - n, d - n) = Mat::Identity(d - n, d - n);
    c.bottomRows(n) = a;
    return c;
}

double spectral_radius_of(const Mat& m) {
    Eigen::EigenSolver<Mat> es(m, /*computeEigenvectors=*/false);
    return es.eigenvalues().cwiseAbs().maxCoeff();
}

// Scale a raw coefficient block until its companion form has the requested
// spectral radius. Bisection on the scale; the radius is continuous in it and
// zero at scale zero.
Mat scale_to_radius(Mat a, int n, int p, double target) {
    const double raw = spectral_radius_of(companion(a, n, p));
    if (raw == 0.0) throw InternalError("degenerate dynamics draw (zero spectral radius)");
    double lo = 0.0;
    double hi = target / raw;
    while (spectral_radius_of(companion(hi * a, n, p)) < target) hi *= 2.0;
    for (int i = 0; i < 80; ++i) {
        const double mid = 0.5 * (lo + hi);
        if (spectral_radius_of(companion(mid * a, n, p)) < target)
            lo = mid;
        else
            hi = mid;
    }
    return 0.5 * (lo + hi) * a;
}

Vec stack_states(const std::vector<Vec>& states, std::size_t upto, int n, int p) {
    Vec z(static_cast<Eigen::Index>(n) * p);
    for (int j = 0; j < p; ++j)
        z.segment(static_cast<Eigen::Index>(n) * j, n) = states[upto - static_cast<std::size_t>(p - 1 - j)];
    return z;
}

}  // namespace

GeneratedData generate(const SyntheticScenario& sc) {
    sc.validate();

    SplitMix64 dyn_rng(SplitMix64::derive(sc.seed, kTagDynamics));
    Mat a_raw(sc.n, static_cast<Eigen::Index>(sc.n) * sc.p);
    for (Eigen::Index i = 0; i < a_raw.rows(); ++i)
        for (Eigen::Index j = 0; j < a_raw.cols(); ++j) a_raw(i, j) = dyn_rng.uniform(-1.0, 1.0);
    const Mat a = scale_to_radius(a_raw, sc.n, sc.p, sc.spectral_radius);

    // Drifting input: zero before the onset (fixed at T/2), then a linear
    // ramp over T/10 steps up to a constant vector. The nominal model never
    // sees it, which is the distribution shift the experts fail to predict.
    const long drift_onset = sc.horizon / 2;
    const long drift_ramp = std::max<long>(1, static_cast<long>(
        kDriftRampFraction * static_cast<double>(sc.horizon)));
    Vec drift_input = Vec::Zero(sc.n);
    if (sc.kind == DynamicsKind::DriftingLinear) {
        SplitMix64 drift_rng(SplitMix64::derive(sc.seed, kTagDriftInput));
        Vec dir = drift_rng.ball(sc.n, 1.0);
        while (dir.norm() < 1e-9) dir = drift_rng.ball(sc.n, 1.0);
        drift_input = kDriftInputNorm * dir / dir.norm();
    }
    auto drift_at = [&](long t) -> double {
        if (sc.kind != DynamicsKind::DriftingLinear || t < drift_onset) return 0.0;
        return std::min(1.0, static_cast<double>(t - drift_onset) / static_cast<double>(drift_ramp));
    };

    SplitMix64 init_rng(SplitMix64::derive(sc.seed, kTagInitialHistory));
    std::vector<Vec> truth;   // index 0 corresponds to t = -p
    std::vector<Vec> nominal;
    truth.reserve(static_cast<std::size_t>(sc.horizon + sc.p + 1));
    for (int j = 0; j < sc.p; ++j) truth.push_back(init_rng.vector_uniform(sc.n, -1.0, 1.0));
    nominal = truth;

    SplitMix64 dist_rng(SplitMix64::derive(sc.seed, kTagDisturbance));
    auto advance = [&](const std::vector<Vec>& states, long target_t, bool with_noise) {
        Vec z = stack_states(states, states.size() - 1, sc.n, sc.p);
        Vec next = a * z;
        if (sc.kind == DynamicsKind::NonlinearSine)
            next += sc.sine_amp * (sc.sine_freq * states.back()).array().sin().matrix();
        if (with_noise) {
            next += drift_at(target_t) * drift_input;
            next += dist_rng.ball(sc.n, sc.disturbance_bound);
        }
        return next;
    };

    for (long t = 0; t <= sc.horizon; ++t) {
        truth.push_back(advance(truth, t, true));
        nominal.push_back(advance(nominal, t, false));
        if (!truth.back().allFinite())
            throw DataError("synthetic trajectory diverged at t=" + std::to_string(t));
    }

    GeneratedData out;
    out.trajectory.start_time = -sc.p;
    out.trajectory.states = truth;
    out.meta.dynamics_matrix = a;
    out.meta.nominal.start_time = -sc.p;
    out.meta.nominal.states = nominal;

    out.offline.horizon = sc.horizon;
    out.offline.num_experts = sc.num_experts;
    out.offline.dim = sc.n;
    out.offline.grid.assign(static_cast<std::size_t>(sc.num_experts), {});
    out.meta.per_expert_max_residual.assign(static_cast<std::size_t>(sc.num_experts), 0.0);

    for (int i = 0; i < sc.num_experts; ++i) {
        const auto& c = sc.experts[static_cast<std::size_t>(i)];
        SplitMix64 expert_rng(SplitMix64::derive(sc.seed, kTagExpertBase + static_cast<std::uint64_t>(i)));
        Vec drift_dir = Vec::Zero(sc.n);
        if (c.kind == ExpertCorruption::Kind::Drift) {
            if (c.drift_direction.size() == sc.n && c.drift_direction.norm() > 0.0)
                drift_dir = c.drift_direction / c.drift_direction.norm();
            else {
                Vec d = expert_rng.ball(sc.n, 1.0);
                while (d.norm() < 1e-9) d = expert_rng.ball(sc.n, 1.0);
                drift_dir = d / d.norm();
            }
        }

        auto& column = out.offline.grid[static_cast<std::size_t>(i)];
        column.reserve(static_cast<std::size_t>(sc.horizon + 1));
        double max_res = 0.0;
        for (long t = 0; t <= sc.horizon; ++t) {
            Vec pred = sc.reference == CorruptionReference::Truth
                           ? truth[static_cast<std::size_t>(t + sc.p)]
                           : nominal[static_cast<std::size_t>(t + sc.p)];
            switch (c.kind) {
                case ExpertCorruption::Kind::Exact: break;
                case ExpertCorruption::Kind::Bias: pred += c.bias; break;
                case ExpertCorruption::Kind::Noise:
                    pred += expert_rng.ball(sc.n, c.noise_scale);
                    break;
                case ExpertCorruption::Kind::Drift:
                    if (t >= c.drift_onset)
                        pred += c.drift_rate * static_cast<double>(t - c.drift_onset) * drift_dir;
                    break;
            }
            max_res = std::max(max_res,
                               (truth[static_cast<std::size_t>(t + sc.p)] - pred).norm());
            column.push_back(std::move(pred));
        }
        out.meta.per_expert_max_residual[static_cast<std::size_t>(i)] = max_res;
        out.meta.realized_residual_bound = std::max(out.meta.realized_residual_bound, max_res);
    }

    return out;
}

// ---------------------------------------------------------------------------
// CSV I/O
// ---------------------------------------------------------------------------

namespace {

std::vector<std::string> split_line(const std::string& line) {
    std::vector<std::string> cells;
    std::string cell;
    std::stringstream ss(line);
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    if (!line.empty() && line.back() == ',') cells.emplace_back();
    return cells;
}

double parse_double(const std::string& cell, const std::string& path, std::size_t line_no) {
    double v = 0.0;
    const char* first = cell.data();
    const char* last = cell.data() + cell.size();
    auto [ptr, ec] = std::from_chars(first, last, v);
    if (ec != std::errc() || ptr != last)
        throw DataError(path + ":" + std::to_string(line_no) + ": non-numeric cell '" + cell + "'");
    if (!std::isfinite(v))
        throw DataError(path + ":" + std::to_string(line_no) + ": non-finite value '" + cell + "'");
    return v;
}

long parse_long(const std::string& cell, const std::string& path, std::size_t line_no) {
    long v = 0;
    const char* first = cell.data();
    const char* last = cell.data() + cell.size();
    auto [ptr, ec] = std::from_chars(first, last, v);
    if (ec != std::errc() || ptr != last)
        throw DataError(path + ":" + std::to_string(line_no) + ": non-integer cell '" + cell + "'");
    return v;
}

std::string state_header(int n, const std::string& prefix) {
    std::string h = prefix;
    for (int j = 0; j < n; ++j) h += ",x" + std::to_string(j);
    return h;
}

std::ifstream open_for_read(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open '" + path + "' for reading");
    return in;
}

std::ofstream open_for_write(const std::string& path) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw IoError("cannot open '" + path + "' for writing");
    return out;
}

}  // namespace

Trajectory load_trajectory(const std::string& path) {
    std::ifstream in = open_for_read(path);
    std::string line;
    std::size_t line_no = 0;

    if (!std::getline(in, line)) throw DataError(path + ": empty file");
    ++line_no;
    auto header = split_line(line);
    if (header.size() < 2 || header[0] != "t")
        throw DataError(path + ":1: expected header 't,x0,...'");
    const int n = static_cast<int>(header.size()) - 1;
    for (int j = 0; j < n; ++j) {
        if (header[static_cast<std::size_t>(j) + 1] != "x" + std::to_string(j))
            throw DataError(path + ":1: expected column 'x" + std::to_string(j) + "'");
    }

    Trajectory traj;
    bool first = true;
    long prev_t = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        auto cells = split_line(line);
        if (static_cast<int>(cells.size()) != n + 1)
            throw DataError(path + ":" + std::to_string(line_no) + ": expected " +
                            std::to_string(n + 1) + " cells, got " + std::to_string(cells.size()));
        const long t = parse_long(cells[0], path, line_no);
        if (first) {
            traj.start_time = t;
            first = false;
        } else if (t == prev_t) {
            throw DataError(path + ":" + std::to_string(line_no) + ": duplicate time step t=" +
                            std::to_string(t));
        } else if (t != prev_t + 1) {
            throw DataError(path + ":" + std::to_string(line_no) + ": gap in time steps (" +
                            std::to_string(prev_t) + " -> " + std::to_string(t) + ")");
        }
        prev_t = t;
        Vec v(n);
        for (int j = 0; j < n; ++j) v(j) = parse_double(cells[static_cast<std::size_t>(j) + 1], path, line_no);
        traj.states.push_back(std::move(v));
    }
    if (traj.states.empty()) throw DataError(path + ": no data rows");
    traj.validate();
    return traj;
}

void save_trajectory(const Trajectory& trajectory, const std::string& path) {
    trajectory.validate();
    std::ofstream out = open_for_write(path);
    out << state_header(trajectory.dim(), "t") << "\n";
    for (long t = trajectory.start_time; t <= trajectory.end_time(); ++t) {
        out << t;
        const Vec& v = trajectory.at(t);
        for (Eigen::Index j = 0; j < v.size(); ++j) out << "," << fmt_g17(v(j));
        out << "\n";
    }
    if (!out) throw IoError("failed writing '" + path + "'");
}

OfflinePredictionSet load_offline_predictions(const std::string& path, int num_experts,
                                              long horizon, int dim) {
    if (num_experts < 1 || horizon < 0 || dim < 1)
        throw ConfigError("offline loader: invalid grid shape");
    std::ifstream in = open_for_read(path);
    std::string line;
    std::size_t line_no = 0;

    if (!std::getline(in, line)) throw DataError(path + ": empty file");
    ++line_no;
    auto header = split_line(line);
    if (header.size() != static_cast<std::size_t>(dim) + 2 || header[0] != "expert" ||
        header[1] != "t")
        throw DataError(path + ":1: expected header 'expert,t,x0,...,x" + std::to_string(dim - 1) +
                        "'");

    OfflinePredictionSet set;
    set.horizon = horizon;
    set.num_experts = num_experts;
    set.dim = dim;
    set.grid.assign(static_cast<std::size_t>(num_experts),
                    std::vector<Vec>(static_cast<std::size_t>(horizon + 1)));
    std::vector<std::vector<bool>> seen(static_cast<std::size_t>(num_experts),
                                        std::vector<bool>(static_cast<std::size_t>(horizon + 1), false));

    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        auto cells = split_line(line);
        if (static_cast<int>(cells.size()) != dim + 2)
            throw DataError(path + ":" + std::to_string(line_no) + ": expected " +
                            std::to_string(dim + 2) + " cells, got " + std::to_string(cells.size()));
        const long expert = parse_long(cells[0], path, line_no);
        if (expert < 1 || expert > num_experts)
            throw DataError(path + ":" + std::to_string(line_no) + ": unknown expert id " +
                            std::to_string(expert) + " (valid: 1.." + std::to_string(num_experts) +
                            ")");
        const long t = parse_long(cells[1], path, line_no);
        if (t < 0 || t > horizon)
            throw DataError(path + ":" + std::to_string(line_no) + ": time step " +
                            std::to_string(t) + " outside the grid [0, " + std::to_string(horizon) +
                            "]");
        if (seen[static_cast<std::size_t>(expert - 1)][static_cast<std::size_t>(t)])
            throw DataError(path + ":" + std::to_string(line_no) + ": duplicate cell (expert=" +
                            std::to_string(expert) + ", t=" + std::to_string(t) + ")");
        seen[static_cast<std::size_t>(expert - 1)][static_cast<std::size_t>(t)] = true;
        Vec v(dim);
        for (int j = 0; j < dim; ++j)
            v(j) = parse_double(cells[static_cast<std::size_t>(j) + 2], path, line_no);
        set.grid[static_cast<std::size_t>(expert - 1)][static_cast<std::size_t>(t)] = std::move(v);
    }

    for (int i = 0; i < num_experts; ++i) {
        for (long t = 0; t <= horizon; ++t) {
            if (!seen[static_cast<std::size_t>(i)][static_cast<std::size_t>(t)])
                throw DataError(path + ": incomplete grid; first missing cell (expert=" +
                                std::to_string(i + 1) + ", t=" + std::to_string(t) + ")");
        }
    }
    set.validate();
    return set;
}

void save_offline_predictions(const OfflinePredictionSet& offline, const std::string& path) {
    offline.validate();
    std::ofstream out = open_for_write(path);
    out << state_header(offline.dim, "expert,t") << "\n";
    for (int i = 0; i < offline.num_experts; ++i) {
        for (long t = 0; t <= offline.horizon; ++t) {
            out << (i + 1) << "," << t;
            const Vec& v = offline.at(i, t);
            for (Eigen::Index j = 0; j < v.size(); ++j) out << "," << fmt_g17(v(j));
            out << "\n";
        }
    }
    if (!out) throw IoError("failed writing '" + path + "'");
}

}  // namespace orl
