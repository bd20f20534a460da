#include "orl/bench.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>

#include "orl/rls.hpp"
#include "orl/tuning.hpp"

namespace orl {
namespace bench {

Method parse_method(const std::string& name) {
    if (name == "orl") return Method::Orl;
    if (name == "online") return Method::Online;
    if (name == "offline_experts") return Method::OfflineExperts;
    if (name == "best_offline") return Method::BestOffline;
    std::string valid;
    for (const auto& v : method_names()) valid += (valid.empty() ? "" : ", ") + v;
    throw ConfigError("unknown method '" + name + "' (valid: " + valid + ")");
}

std::string method_name(Method m) {
    switch (m) {
        case Method::Orl: return "orl";
        case Method::Online: return "online";
        case Method::OfflineExperts: return "offline_experts";
        case Method::BestOffline: return "best_offline";
    }
    throw InternalError("unhandled method");
}

std::vector<std::string> method_names() {
    return {"orl", "online", "offline_experts", "best_offline"};
}

namespace {

void check_data(const Trajectory& trajectory, const OfflinePredictionSet& offline,
                const PipelineConfig& cfg, bool needs_state_history) {
    trajectory.validate();
    offline.validate();
    if (trajectory.dim() != cfg.n) throw DataError("trajectory dimension does not match config");
    if (!trajectory.contains(0) || !trajectory.contains(cfg.horizon))
        throw DataError("trajectory must cover [0, T]");
    if (needs_state_history && trajectory.start_time > -(static_cast<long>(cfg.p) - 1))
        throw DataError("the online method needs initial history back to t=" +
                        std::to_string(1 - cfg.p) + ", trajectory starts at t=" +
                        std::to_string(trajectory.start_time));
    if (offline.horizon < cfg.horizon)
        throw DataError("offline predictions do not cover the horizon");
    if (offline.num_experts != cfg.num_experts)
        throw DataError("offline prediction set has " + std::to_string(offline.num_experts) +
                        " experts, config expects " + std::to_string(cfg.num_experts));
    if (offline.dim != cfg.n) throw DataError("offline prediction dimension does not match config");
}

void append_loss(RunTrace& trace, double loss) {
    trace.inst.push_back(loss);
    trace.cum.push_back(trace.cum.empty() ? loss : trace.cum.back() + loss);
}

/// Aggregated-loss guarantee of the exponential-weights layer: when the
/// learning rate does not exceed the exp-concavity constant of the realized
/// losses, the ensemble's cumulative loss can trail the best expert by at
/// most ln(N)/rate. Violations under those hypotheses indicate a bug.
void check_expert_regret_bound(const RunTrace& trace, const PipelineConfig& cfg) {
    if (trace.expert_losses.empty()) return;
    const double bound_sq = cfg.residual_bound * cfg.residual_bound;
    const double loss_cap = 2.0 * bound_sq + 2.0 * cfg.spectral_bound * cfg.spectral_bound * bound_sq;
    if (cfg.learning_rate > tuning::lambda_max(cfg.residual_bound, cfg.spectral_bound)) return;

    Vec expert_cum = Vec::Zero(trace.num_experts);
    double max_expert_loss = 0.0;
    for (const auto& l : trace.expert_losses) {
        expert_cum += l;
        max_expert_loss = std::max(max_expert_loss, l.maxCoeff());
    }
    if (max_expert_loss > loss_cap) return;  // hypothesis of the bound violated by the data

    const double slack = std::log(static_cast<double>(trace.num_experts)) / cfg.learning_rate;
    if (trace.total() > expert_cum.minCoeff() + slack * (1.0 + 1e-12) + 1e-9)
        throw InternalError("ensemble loss exceeded the expert-regret bound (" +
                            fmt_g17(trace.total()) + " > " +
                            fmt_g17(expert_cum.minCoeff() + slack) + ")");
}

RunTrace run_ensemble(Method method, const Trajectory& trajectory,
                      const OfflinePredictionSet& offline, PipelineConfig cfg) {
    cfg.residual_learning = (method == Method::Orl);
    ExpertEnsemble ensemble(cfg, offline);

    RunTrace trace;
    trace.method = method_name(method);
    trace.first_t = cfg.k;
    trace.num_experts = cfg.num_experts;
    for (long t = 0; t <= cfg.horizon; ++t) {
        StepOutput out = ensemble.step(t, trajectory.at(t));
        if (out.scored) {
            append_loss(trace, out.scored->aggregate_loss);
            trace.predictions.push_back(std::move(out.scored->aggregate_prediction));
            trace.expert_predictions.push_back(std::move(out.scored->expert_predictions));
            trace.expert_losses.push_back(std::move(out.scored->expert_losses));
            trace.weights.push_back(std::move(out.scored->weights));
        }
    }
    trace.max_residual_norm = ensemble.max_residual_norm();
    trace.residual_bound_violations = ensemble.residual_bound_violations();
    check_expert_regret_bound(trace, cfg);
    return trace;
}

RunTrace run_online(const Trajectory& trajectory, const PipelineConfig& cfg) {
    // Pure online regression on the raw state stream: the same delayed-RLS
    // machinery, with past states as regressors and no expert layer.
    KStepLearnerBank bank(cfg.k, cfg.n, cfg.p, cfg.rls_config(0));

    std::vector<Vec> zs(static_cast<std::size_t>(cfg.horizon) + 1);
    for (long t = 0; t <= cfg.horizon; ++t) {
        Vec z(static_cast<Eigen::Index>(cfg.n) * cfg.p);
        for (int j = 0; j < cfg.p; ++j)
            z.segment(static_cast<Eigen::Index>(cfg.n) * j, cfg.n) =
                trajectory.at(t - cfg.p + 1 + j);
        zs[static_cast<std::size_t>(t)] = std::move(z);
    }

    RunTrace trace;
    trace.method = method_name(Method::Online);
    trace.first_t = cfg.k;
    std::vector<Vec> pending;  // prediction for time t stored at index t - k
    for (long t = 0; t <= cfg.horizon; ++t) {
        const Vec& truth = trajectory.at(t);
        Vec next;
        if (t >= cfg.k) {
            const Vec& scored = pending[static_cast<std::size_t>(t - cfg.k)];
            append_loss(trace, squared_loss(truth, scored));
            trace.predictions.push_back(scored);
            next = bank.step(t, truth, zs[static_cast<std::size_t>(t - cfg.k)],
                             zs[static_cast<std::size_t>(t)]);
        } else {
            next = bank.predict_at(t, zs[static_cast<std::size_t>(t)]);
        }
        pending.push_back(std::move(next));
    }
    return trace;
}

RunTrace run_best_offline(const Trajectory& trajectory, const OfflinePredictionSet& offline,
                          const PipelineConfig& cfg) {
    // Hindsight selection: the raw expert with the smallest mean squared loss
    // over the scored window. Ties break toward the lower index.
    int best = 0;
    double best_ade = std::numeric_limits<double>::infinity();
    for (int i = 0; i < cfg.num_experts; ++i) {
        double sum = 0.0;
        for (long t = cfg.k; t <= cfg.horizon; ++t)
            sum += squared_loss(trajectory.at(t), offline.at(i, t));
        const double ade = sum / static_cast<double>(cfg.horizon - cfg.k + 1);
        if (ade < best_ade) {
            best_ade = ade;
            best = i;
        }
    }

    RunTrace trace;
    trace.method = method_name(Method::BestOffline);
    trace.first_t = cfg.k;
    trace.best_offline_expert = best;
    for (long t = cfg.k; t <= cfg.horizon; ++t) {
        const Vec& pred = offline.at(best, t);
        append_loss(trace, squared_loss(trajectory.at(t), pred));
        trace.predictions.push_back(pred);
    }
    return trace;
}

}  // namespace

RunTrace run_method(Method method, const Trajectory& trajectory,
                    const OfflinePredictionSet& offline, const PipelineConfig& cfg) {
    cfg.validate();
    check_data(trajectory, offline, cfg, method == Method::Online);
    switch (method) {
        case Method::Orl:
        case Method::OfflineExperts:
            return run_ensemble(method, trajectory, offline, cfg);
        case Method::Online:
            return run_online(trajectory, cfg);
        case Method::BestOffline:
            return run_best_offline(trajectory, offline, cfg);
    }
    throw InternalError("unhandled method");
}

double ade_sq(const RunTrace& trace) {
    if (trace.inst.empty()) throw DataError("ade: empty trace");
    return trace.total() / static_cast<double>(trace.steps());
}

double ade_l2(const RunTrace& trace) {
    if (trace.inst.empty()) throw DataError("ade: empty trace");
    double sum = 0.0;
    for (double l : trace.inst) sum += std::sqrt(l);
    return sum / static_cast<double>(trace.steps());
}

std::vector<std::vector<Vec>> residual_streams(const Trajectory& trajectory,
                                               const OfflinePredictionSet& offline, long horizon) {
    if (!trajectory.contains(0) || !trajectory.contains(horizon))
        throw DataError("residual streams need truth over [0, T]");
    std::vector<std::vector<Vec>> streams(static_cast<std::size_t>(offline.num_experts));
    for (int i = 0; i < offline.num_experts; ++i) {
        auto& s = streams[static_cast<std::size_t>(i)];
        s.reserve(static_cast<std::size_t>(horizon) + 1);
        for (long t = 0; t <= horizon; ++t) s.push_back(residual(trajectory.at(t), offline.at(i, t)));
    }
    return streams;
}

double StaticComparator::best_loss() const {
    if (losses.empty()) throw DataError("comparator has no experts");
    return *std::min_element(losses.begin(), losses.end());
}

namespace {

double comparator_loss(const Mat& m, const std::vector<Vec>& es, const std::vector<Vec>& zs) {
    double sum = 0.0;
    for (std::size_t j = 0; j < es.size(); ++j) sum += (es[j] - m * zs[j]).squaredNorm();
    return sum;
}

// Projected gradient on the ridge objective over the spectral ball.
Mat constrained_ridge(const Mat& unconstrained, const Mat& gram, const Mat& cross, double bound) {
    Eigen::SelfAdjointEigenSolver<Mat> es(gram, Eigen::EigenvaluesOnly);
    const double lam_max = es.eigenvalues().maxCoeff();
    Mat m = clip_spectral(unconstrained, bound);
    auto objective = [&](const Mat& x) {
        return (x * gram).cwiseProduct(x).sum() - 2.0 * x.cwiseProduct(cross).sum();
    };
    double obj = objective(m);
    for (int it = 0; it < 20000; ++it) {
        Mat candidate = clip_spectral(m - (m * gram - cross) / lam_max, bound);
        const double candidate_obj = objective(candidate);
        if (candidate_obj >= obj) break;
        const bool converged = obj - candidate_obj < 1e-8 * std::max(1.0, std::abs(obj));
        m = std::move(candidate);
        obj = candidate_obj;
        if (converged) break;
    }
    return m;
}

}  // namespace

StaticComparator hindsight_static_comparator(const std::vector<std::vector<Vec>>& residuals,
                                             int p, int k, long horizon, double spectral_bound) {
    if (residuals.empty()) throw DataError("comparator needs at least one residual stream");
    if (p < 1) throw ConfigError("comparator: p must be >= 1");
    if (k < 1) throw ConfigError("comparator: k must be >= 1");
    const int n = static_cast<int>(residuals.front().front().size());
    const Eigen::Index d = static_cast<Eigen::Index>(n) * p;

    StaticComparator out;
    for (const auto& stream : residuals) {
        if (static_cast<long>(stream.size()) < horizon + 1)
            throw DataError("comparator: residual stream shorter than horizon");
        std::vector<Vec> es, zs;
        es.reserve(static_cast<std::size_t>(horizon - k + 1));
        zs.reserve(es.capacity());
        for (long t = k; t <= horizon; ++t) {
            es.push_back(stream[static_cast<std::size_t>(t)]);
            zs.push_back(stack_regressors(
                std::span<const Vec>(stream.data(), static_cast<std::size_t>(t - k + 1)), p, n));
        }

        Mat gram = Mat::Identity(d, d);
        Mat cross = Mat::Zero(n, d);
        for (std::size_t j = 0; j < es.size(); ++j) {
            gram += zs[j] * zs[j].transpose();
            cross += es[j] * zs[j].transpose();
        }
        // M Gram = Cross  =>  Gram M^T = Cross^T (Gram symmetric).
        Mat unconstrained = gram.ldlt().solve(cross.transpose()).transpose();

        Mat feasible = unconstrained;
        bool active = false;
        if (spectral_norm(unconstrained) > spectral_bound) {
            active = true;
            feasible = constrained_ridge(unconstrained, gram, cross, spectral_bound);
        }

        out.predictors.push_back(feasible);
        out.losses.push_back(comparator_loss(feasible, es, zs));
        out.unconstrained_losses.push_back(comparator_loss(unconstrained, es, zs));
        out.constrained.push_back(active ? 1 : 0);
        out.gram.push_back(std::move(gram));
        out.cross.push_back(std::move(cross));
    }
    return out;
}

RegretReport empirical_regret(const RunTrace& trace, const StaticComparator& comparator) {
    RegretReport report;
    report.comparator = "best static predictor in hindsight (spectral ball, zero path length)";
    report.comparator_loss = comparator.best_loss();
    report.regret = trace.total() - report.comparator_loss;
    report.comparator_path_length = 0.0;
    return report;
}

ComparatorEvaluation evaluate_comparator_sequence(const std::vector<Vec>& residual_stream,
                                                  std::span<const Mat> predictors, int p, int k,
                                                  long horizon) {
    if (static_cast<long>(residual_stream.size()) < horizon + 1)
        throw DataError("comparator evaluation: residual stream shorter than horizon");
    if (static_cast<long>(predictors.size()) != horizon - k + 1)
        throw DataError("comparator evaluation: need one predictor per scored step");
    const int n = static_cast<int>(residual_stream.front().size());

    ComparatorEvaluation eval;
    for (long t = k; t <= horizon; ++t) {
        const Mat& m = predictors[static_cast<std::size_t>(t - k)];
        Vec z = stack_regressors(
            std::span<const Vec>(residual_stream.data(), static_cast<std::size_t>(t - k + 1)), p, n);
        eval.loss += (residual_stream[static_cast<std::size_t>(t)] - m * z).squaredNorm();
    }
    eval.path_length = tuning::path_length(predictors);
    eval.path_length_k = tuning::path_length_k(predictors, k);
    return eval;
}

MethodResult summarize(const RunTrace& trace, const StaticComparator& comparator) {
    MethodResult r;
    r.method = trace.method;
    r.cumulative_loss = trace.total();
    r.ade_sq = ade_sq(trace);
    r.ade_l2 = ade_l2(trace);
    r.regret_static = empirical_regret(trace, comparator).regret;
    return r;
}

namespace {

std::ofstream open_out(const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
    return out;
}

}  // namespace

void emit_plot_data(const std::vector<RunTrace>& traces, const std::string& out_dir) {
    if (traces.empty()) throw DataError("emit_plot_data: no traces");
    std::error_code ec;
    std::filesystem::create_directories(out_dir, ec);
    if (ec) throw IoError("cannot create output directory '" + out_dir + "': " + ec.message());
    const std::filesystem::path dir(out_dir);

    for (const auto& trace : traces) {
        std::ofstream out = open_out(dir / ("loss_" + trace.method + ".csv"));
        out << "t,loss,cumloss\n";
        for (std::size_t i = 0; i < trace.steps(); ++i) {
            out << (trace.first_t + static_cast<long>(i)) << "," << fmt_g17(trace.inst[i]) << ","
                << fmt_g17(trace.cum[i]) << "\n";
        }
        if (!out) throw IoError("failed writing loss series for " + trace.method);
    }

    for (const auto& trace : traces) {
        if (!trace.has_weights()) continue;
        std::ofstream out = open_out(dir / "weights.csv");
        out << "t";
        for (int i = 1; i <= trace.num_experts; ++i) out << ",w_" << i;
        out << "\n";
        for (std::size_t row = 0; row < trace.weights.size(); ++row) {
            out << (trace.first_t + static_cast<long>(row));
            const Vec& w = trace.weights[row];
            for (Eigen::Index i = 0; i < w.size(); ++i) out << "," << fmt_g17(w(i));
            out << "\n";
        }
        if (!out) throw IoError("failed writing weights.csv");
        break;  // one weights file, from the first trace that has them
    }
}

void write_summary(const std::vector<MethodResult>& results, const std::string& out_dir) {
    if (results.empty()) throw DataError("write_summary: no results");
    std::error_code ec;
    std::filesystem::create_directories(out_dir, ec);
    if (ec) throw IoError("cannot create output directory '" + out_dir + "': " + ec.message());
    std::ofstream out = open_out(std::filesystem::path(out_dir) / "summary.csv");
    out << "method,cumloss,ade_sq,ade_l2,regret_static\n";
    for (const auto& r : results) {
        out << r.method << "," << fmt_g17(r.cumulative_loss) << "," << fmt_g17(r.ade_sq) << ","
            << fmt_g17(r.ade_l2) << "," << fmt_g17(r.regret_static) << "\n";
    }
    if (!out) throw IoError("failed writing summary.csv");
}

}  // namespace bench
}  // namespace orl
