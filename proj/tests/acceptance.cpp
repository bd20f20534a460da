// Acceptance suite: one self-contained check per release criterion, each
// printed as a PASS/FAIL line. Exits nonzero if any criterion fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <random>
#include <sstream>
#include <vector>

#include "orl/bench.hpp"
#include "orl/cli.hpp"
#include "orl/datagen.hpp"
#include "orl/ensemble.hpp"
#include "orl/rls.hpp"
#include "orl/tuning.hpp"
#include "test_util.hpp"

using namespace orl;
using testutil::random_in_ball;
using testutil::random_mat;
using testutil::random_spd;
using testutil::random_vec;

namespace {

struct Check {
    bool pass = true;
    std::ostringstream detail;

    void require(bool ok, const std::string& what) {
        if (!ok) {
            pass = false;
            if (detail.tellp() > 0) detail << "; ";
            detail << what;
        }
    }
    void note(const std::string& text) {
        if (detail.tellp() > 0) detail << "; ";
        detail << text;
    }
};

std::string fmt(double x) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.3g", x);
    return buf;
}

RlsConfig rls_cfg(double gamma, double ridge, double bound) {
    RlsConfig c;
    c.forgetting = gamma;
    c.ridge = ridge;
    c.spectral_bound = bound;
    return c;
}

// --------------------------------------------------------------- criterion 1

void criterion_rls_batch_oracle(Check& c) {
    std::mt19937_64 rng(1001);
    const double gammas[] = {0.7, 0.9, 1.0};
    double max_rel = 0.0;
    int instances = 0;
    for (int trial = 0; trial < 210; ++trial) {
        const double gamma = gammas[trial % 3];
        const int n = 1 + static_cast<int>(rng() % 3);
        const int p = 1 + static_cast<int>(rng() % 3);
        const int steps = 20 + static_cast<int>(rng() % 181);  // up to 200

        RlsLearner learner(n, p, rls_cfg(gamma, 1.0, 1e12));
        std::vector<Vec> es, zs;
        for (int t = 0; t < steps; ++t) {
            es.push_back(random_vec(rng, n, -2, 2));
            zs.push_back(random_vec(rng, n * p, -2, 2));
            learner.update(es.back(), zs.back());
        }
        const Mat oracle = testutil::batch_ridge(es, zs, gamma, 1.0);
        const double rel =
            (learner.predictor() - oracle).norm() / std::max(oracle.norm(), 1e-30);
        max_rel = std::max(max_rel, rel);
        ++instances;
    }
    c.require(instances >= 200, "fewer than 200 instances");
    c.require(max_rel <= 1e-8, "max relative error " + fmt(max_rel) + " > 1e-8");
    c.note("max rel err " + fmt(max_rel) + " over " + std::to_string(instances) + " instances");
}

// --------------------------------------------------------------- criterion 2

void criterion_k_bank_reduction(Check& c) {
    std::mt19937_64 rng(1002);

    // k = 1 must be bitwise identical to the plain recursive learner.
    bool bitwise = true;
    for (int stream = 0; stream < 50 && bitwise; ++stream) {
        const int n = 1 + static_cast<int>(rng() % 2);
        const int p = 1 + static_cast<int>(rng() % 3);
        const int steps = 30 + static_cast<int>(rng() % 50);
        RlsConfig cfg = rls_cfg(0.8 + 0.2 * (stream % 2), 1.0, 0.9);

        std::vector<Vec> es, zs;
        for (int t = 0; t <= steps; ++t) {
            es.push_back(random_vec(rng, n));
            zs.push_back(random_vec(rng, n * p));
        }

        RlsLearner direct(n, p, cfg);
        KStepLearnerBank bank(1, n, p, cfg);
        Vec first_direct = direct.predict(zs[0]);
        Vec first_bank = bank.predict_at(0, zs[0]);
        if (!(first_direct == first_bank)) bitwise = false;
        for (int t = 1; t <= steps && bitwise; ++t) {
            Vec pred_direct = direct.predict(zs[static_cast<std::size_t>(t - 1)]);
            direct.update(es[static_cast<std::size_t>(t)], zs[static_cast<std::size_t>(t - 1)]);
            Vec next_direct = direct.predict(zs[static_cast<std::size_t>(t)]);
            Vec next_bank = bank.step(t, es[static_cast<std::size_t>(t)],
                                      zs[static_cast<std::size_t>(t - 1)],
                                      zs[static_cast<std::size_t>(t)]);
            (void)pred_direct;
            if (!(next_direct == next_bank)) bitwise = false;
            if (!(direct.predictor() == bank.learner(0).predictor())) bitwise = false;
        }
    }
    c.require(bitwise, "k=1 bank diverged bitwise from the plain learner");

    // k = 7, T = 100: per-learner update counts match direct counting.
    const int k = 7, n = 2, p = 2;
    const long horizon = 100;
    KStepLearnerBank bank(k, n, p, rls_cfg(0.9, 1.0, 1.0));
    for (long t = k; t <= horizon; ++t)
        bank.step(t, random_vec(rng, n), random_vec(rng, n * p), random_vec(rng, n * p));
    auto counts = bank.update_counts();
    bool counts_ok = true;
    for (int j = 0; j < k; ++j) {
        long expected = 0;
        for (long t = k; t <= horizon; ++t)
            if (t % k == j) ++expected;
        if (counts[static_cast<std::size_t>(j)] != expected) counts_ok = false;
    }
    c.require(counts_ok, "k=7 learner update counts disagree with the counting oracle");
    c.note("50 bitwise streams; k=7 counts exact");
}

// --------------------------------------------------------------- criterion 3

void criterion_hedge_bound(Check& c) {
    std::mt19937_64 rng(1003);
    std::uniform_real_distribution<double> u01(0.0, 1.0);
    double worst_margin = std::numeric_limits<double>::infinity();
    for (int stream = 0; stream < 100; ++stream) {
        const int num_experts = 2 + static_cast<int>(rng() % 7);
        const int dim = 1 + static_cast<int>(rng() % 3);
        const int steps = 50 + static_cast<int>(rng() % 251);
        const double residual_bound = 0.3 + 2.7 * u01(rng);
        const double spectral_bound = 2.0 * u01(rng);
        const double rate = tuning::lambda_max(residual_bound, spectral_bound);

        Vec w = uniform_weights(num_experts);
        double ensemble_loss = 0.0;
        Vec expert_loss = Vec::Zero(num_experts);
        for (int t = 0; t < steps; ++t) {
            std::vector<Vec> deltas;
            Vec losses(num_experts);
            for (int i = 0; i < num_experts; ++i) {
                Vec e = random_in_ball(rng, dim, residual_bound);
                Vec e_hat = random_in_ball(rng, dim, spectral_bound * residual_bound);
                deltas.push_back(e - e_hat);
                losses(i) = deltas.back().squaredNorm();
            }
            ensemble_loss += aggregate(w, deltas).squaredNorm();
            expert_loss += losses;
            w = update_weights(w, losses, rate);
        }
        const double bound =
            expert_loss.minCoeff() + std::log(static_cast<double>(num_experts)) / rate;
        worst_margin = std::min(worst_margin, bound - ensemble_loss);
        if (ensemble_loss > bound) {
            c.require(false, "stream " + std::to_string(stream) + " violated the bound by " +
                                 fmt(ensemble_loss - bound));
            return;
        }
    }
    c.note("smallest slack to the bound " + fmt(worst_margin) + " over 100 streams");
}

// --------------------------------------------------------------- criterion 4

void criterion_simplex_invariant(Check& c) {
    std::mt19937_64 rng(1004);
    std::uniform_real_distribution<double> u01(0.0, 1.0);
    long updates = 0;
    double worst_sum_err = 0.0;
    for (int chain = 0; chain < 10; ++chain) {
        const int num_experts = 2 + static_cast<int>(rng() % 9);
        Vec w = uniform_weights(num_experts);
        for (int t = 0; t < 10000; ++t) {
            Vec losses(num_experts);
            for (int i = 0; i < num_experts; ++i) {
                const double r = u01(rng);
                if (r < 0.25)
                    losses(i) = 1e6 * u01(rng);  // extreme
                else if (r < 0.5)
                    losses(i) = 0.0;
                else
                    losses(i) = 10.0 * u01(rng);
            }
            w = update_weights(w, losses, 1.0);
            ++updates;
            if (!w.allFinite() || w.minCoeff() < 0.0) {
                c.require(false, "non-finite or negative weight after " +
                                     std::to_string(updates) + " updates");
                return;
            }
            worst_sum_err = std::max(worst_sum_err, std::abs(w.sum() - 1.0));
        }
    }
    c.require(updates == 100000, "expected 1e5 updates");
    c.require(worst_sum_err <= 1e-12,
              "simplex sum drifted by " + fmt(worst_sum_err) + " > 1e-12");
    c.note("1e5 updates, worst |sum-1| " + fmt(worst_sum_err));
}

// --------------------------------------------------------------- criterion 5

void criterion_tuning_formulas(Check& c) {
    c.require(tuning::lambda_max(1.0, 1.0) == 0.125, "lambda_max(1,1) != 0.125");

    // Independent evaluation of the schedule at V_T = 0, T = 100, D = 1:
    // gamma = 1 - ln(T) / (2 T sqrt(2 D)).
    const double independent = 1.0 - std::log(100.0) / (2.0 * 100.0 * std::sqrt(2.0));
    const double gamma = tuning::forgetting_factor(0.0, 100, 1.0);
    c.require(std::abs(gamma - independent) <= 1e-9,
              "forgetting_factor(0,100,1) off by " + fmt(std::abs(gamma - independent)));

    std::mt19937_64 rng(1005);
    std::uniform_real_distribution<double> u(0.01, 25.0);
    bool identical = true;
    for (int i = 0; i < 1000; ++i) {
        const double dr = u(rng), d = u(rng);
        if (tuning::lambda_max(dr, d) != tuning::exp_concavity_alpha(dr, d)) identical = false;
    }
    c.require(identical, "lambda_max and exp_concavity_alpha disagree");
    c.note("gamma(0,100,1)=" + fmt_g17(gamma));
}

// --------------------------------------------------------------- criterion 6

void criterion_sublinear_regret(Check& c) {
    SyntheticScenario sc;
    sc.n = 2;
    sc.p = 2;
    sc.horizon = 10000;
    sc.k = 1;
    sc.num_experts = 3;
    sc.kind = DynamicsKind::StaticLinear;
    sc.disturbance_bound = 0.05;
    sc.spectral_radius = 0.85;
    sc.seed = 2024;
    Vec bias(2);
    bias << 0.6, -0.3;
    sc.experts = {ExpertCorruption::exact(), ExpertCorruption::biased(bias),
                  ExpertCorruption::noisy(0.25)};
    GeneratedData data = generate(sc);

    const double spectral_bound = 2.0;
    const double residual_bound = data.meta.realized_residual_bound * 1.05;

    PipelineConfig cfg;
    cfg.n = sc.n;
    cfg.p = sc.p;
    cfg.k = sc.k;
    cfg.num_experts = sc.num_experts;
    cfg.horizon = sc.horizon;
    cfg.forgetting.assign(3, tuning::forgetting_factor(0.0, sc.horizon, spectral_bound));
    cfg.spectral_bound = spectral_bound;
    cfg.residual_bound = residual_bound;
    cfg.learning_rate = tuning::lambda_max(residual_bound, spectral_bound);
    bench::RunTrace trace = bench::run_method(bench::Method::Orl, data.trajectory, data.offline, cfg);

    const auto streams = bench::residual_streams(data.trajectory, data.offline, sc.horizon);
    auto regret_at = [&](long horizon) {
        const auto comp =
            bench::hindsight_static_comparator(streams, sc.p, sc.k, horizon, spectral_bound);
        return trace.cum[static_cast<std::size_t>(horizon - sc.k)] - comp.best_loss();
    };

    const double r100 = regret_at(100);
    const double r1000 = regret_at(1000);
    const double r10000 = regret_at(10000);
    c.note("regret at T=1e2/1e3/1e4: " + fmt(r100) + "/" + fmt(r1000) + "/" + fmt(r10000));

    c.require(r100 > 0.0, "regret at T=100 not positive");
    c.require(r10000 > 0.0, "regret at T=10000 not positive");

    const double avg_early = r100 / 100.0;
    const double avg_late = r10000 / 10000.0;
    c.require(avg_late <= 0.2 * avg_early,
              "average regret shrank only from " + fmt(avg_early) + " to " + fmt(avg_late));

    const double q3 = r1000 / std::log(1000.0);
    const double q4 = r10000 / std::log(10000.0);
    const double ratio = std::max(q3, q4) / std::min(q3, q4);
    c.require(q3 > 0.0 && q4 > 0.0 && ratio < 3.0,
              "regret/log(T) varied by " + fmt(ratio) + "x over T in {1e3, 1e4}");
}

// --------------------------------------------------------------- criterion 7

void criterion_best_of_both_worlds(Check& c) {
    int wins = 0;
    const int seeds = 50;
    double worst_ratio = 0.0;
    for (int s = 0; s < seeds; ++s) {
        SyntheticScenario sc;
        sc.n = 2;
        sc.p = 2;
        sc.horizon = 5000;
        sc.k = 4;
        sc.num_experts = 3;
        sc.kind = DynamicsKind::StaticLinear;
        sc.disturbance_bound = 0.05;
        sc.reference = CorruptionReference::Truth;
        sc.seed = 31000 + static_cast<std::uint64_t>(s);
        Vec bias(2);
        bias << 1.5, -0.75;
        sc.experts = {ExpertCorruption::drifting(sc.horizon / 2, 0.001),
                      ExpertCorruption::biased(bias), ExpertCorruption::noisy(0.4)};
        GeneratedData data = generate(sc);

        PipelineConfig cfg;
        cfg.n = sc.n;
        cfg.p = sc.p;
        cfg.k = sc.k;
        cfg.num_experts = sc.num_experts;
        cfg.horizon = sc.horizon;
        cfg.forgetting.assign(3, 0.8);
        cfg.spectral_bound = 1.5;
        cfg.residual_bound = data.meta.realized_residual_bound * 1.05;
        cfg.learning_rate =
            tuning::lambda_max(cfg.residual_bound, cfg.spectral_bound);

        const double orl =
            bench::run_method(bench::Method::Orl, data.trajectory, data.offline, cfg).total();
        const double online =
            bench::run_method(bench::Method::Online, data.trajectory, data.offline, cfg).total();
        const double raw = bench::run_method(bench::Method::OfflineExperts, data.trajectory,
                                             data.offline, cfg)
                               .total();
        const double best_baseline = std::min(online, raw);
        worst_ratio = std::max(worst_ratio, orl / best_baseline);
        if (orl <= 1.05 * best_baseline) ++wins;
    }
    c.require(wins >= 45, "only " + std::to_string(wins) + "/50 seeds within 1.05x");
    c.note(std::to_string(wins) + "/50 seeds; worst orl/min(baselines) ratio " +
           fmt(worst_ratio));
}

// --------------------------------------------------------------- criterion 8

void criterion_projection_contract(Check& c) {
    std::mt19937_64 rng(1008);
    std::uniform_real_distribution<double> u01(0.0, 1.0);

    double worst_identity = 0.0;
    for (int trial = 0; trial < 1000; ++trial) {
        const int n = 1 + static_cast<int>(rng() % 3);
        const int d = n * (1 + static_cast<int>(rng() % 3));
        const Mat m_star = random_mat(rng, n, d, -3, 3);
        const double bound = 0.2 + 2.0 * u01(rng);
        const Mat projected = project_weighted(m_star, Mat::Identity(d, d), bound);
        const Mat oracle = testutil::clip_singular_values(m_star, bound);
        const double err = (projected - oracle).norm() / std::max(1.0, oracle.norm());
        worst_identity = std::max(worst_identity, err);
    }
    c.require(worst_identity <= 1e-8,
              "identity-weight projection off the clipping oracle by " + fmt(worst_identity));

    double worst_feasibility = 0.0;
    bool never_worse = true;
    for (int trial = 0; trial < 100; ++trial) {
        const int n = 1 + static_cast<int>(rng() % 2);
        const int d = n * (1 + static_cast<int>(rng() % 3));
        const Mat m_star = random_mat(rng, n, d, -3, 3);
        const Mat p = random_spd(rng, d, 0.05, 20.0);
        const double bound = 0.2 + 1.0 * u01(rng);
        if (testutil::spectral_norm_ref(m_star) <= bound) continue;

        const Mat projected = project_weighted(m_star, p, bound);
        worst_feasibility =
            std::max(worst_feasibility, testutil::spectral_norm_ref(projected) - bound);

        auto wdist = [&](const Mat& x) {
            const Mat diff = x - m_star;
            return (diff * p).cwiseProduct(diff).sum();
        };
        const Mat scaled = m_star * (bound / testutil::spectral_norm_ref(m_star));
        if (wdist(projected) > wdist(scaled) + 1e-12) never_worse = false;
    }
    c.require(worst_feasibility <= 1e-10,
              "projection infeasible by " + fmt(worst_feasibility));
    c.require(never_worse, "projection lost to the scaling fallback in weighted distance");
    c.note("identity err " + fmt(worst_identity) + "; feasibility slack " +
           fmt(worst_feasibility));
}

// --------------------------------------------------------------- criterion 9

void criterion_determinism(Check& c) {
    namespace fs = std::filesystem;
    const fs::path base = fs::temp_directory_path() / "orl_acceptance_determinism";
    fs::remove_all(base);
    fs::create_directories(base);

    const std::string config_text = R"({
      "n": 2, "p": 2, "k": 3, "N": 3, "T": 300,
      "gamma": 0.9, "D": 1.0, "D_r": 8.0, "lambda": 0.001,
      "scenario": {
        "kind": "drifting-linear", "d_max": 0.05,
        "experts": [
          {"kind": "exact"},
          {"kind": "bias", "bias": [1.0, -0.5]},
          {"kind": "noise", "scale": 0.4}
        ]
      },
      "out": "placeholder", "seed": 77
    })";

    cli::RunConfig cfg = cli::parse_run_config(config_text);
    std::ostringstream err;
    cfg.out_dir = (base / "a").string();
    cli::cmd_run(cfg, err);
    cfg.out_dir = (base / "b").string();
    cli::cmd_run(cfg, err);

    auto slurp = [](const fs::path& p) {
        std::ifstream in(p, std::ios::binary);
        return std::string(std::istreambuf_iterator<char>(in), {});
    };

    int files = 0;
    bool identical = true;
    for (const auto& entry : fs::directory_iterator(base / "a")) {
        ++files;
        const auto name = entry.path().filename();
        const std::string a = slurp(entry.path());
        const std::string b = slurp(base / "b" / name);
        if (a.empty() || a != b) identical = false;
    }
    c.require(files == 6, "expected 6 output files, saw " + std::to_string(files));
    c.require(identical, "outputs differ between identical runs");
    c.note(std::to_string(files) + " files byte-identical");
}

// ---------------------------------------------------------------------------

struct Criterion {
    int id;
    std::string name;
    std::function<void(Check&)> fn;
    double time_limit_s;  // 0 = unlimited
};

}  // namespace

int main() {
    const std::vector<Criterion> criteria = {
        {1, "rls batch-oracle equivalence", criterion_rls_batch_oracle, 10.0},
        {2, "k-bank reduction", criterion_k_bank_reduction, 0.0},
        {3, "hedge bound", criterion_hedge_bound, 0.0},
        {4, "simplex invariant", criterion_simplex_invariant, 0.0},
        {5, "tuning formulas", criterion_tuning_formulas, 0.0},
        {6, "sublinear regret on a static system", criterion_sublinear_regret, 30.0},
        {7, "best-of-both-worlds", criterion_best_of_both_worlds, 60.0},
        {8, "projection contract", criterion_projection_contract, 0.0},
        {9, "determinism", criterion_determinism, 0.0},
    };

    int passed = 0;
    for (const auto& criterion : criteria) {
        Check check;
        const auto start = std::chrono::steady_clock::now();
        try {
            criterion.fn(check);
        } catch (const std::exception& e) {
            check.require(false, std::string("exception: ") + e.what());
        }
        const double seconds =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        if (criterion.time_limit_s > 0.0 && seconds >= criterion.time_limit_s)
            check.require(false, "runtime " + fmt(seconds) + "s exceeded " +
                                     fmt(criterion.time_limit_s) + "s");

        std::printf("[%s] criterion %d: %s (%s%.2fs)\n", check.pass ? "PASS" : "FAIL",
                    criterion.id, criterion.name.c_str(),
                    check.detail.tellp() > 0 ? (check.detail.str() + "; ").c_str() : "",
                    seconds);
        if (check.pass) ++passed;
    }
    std::printf("acceptance: %d/9 criteria passed\n", passed);
    return passed == 9 ? 0 : 1;
}
