#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "orl/core.hpp"
#include "test_util.hpp"

using orl::Vec;

namespace {
Vec make(std::initializer_list<double> xs) {
    Vec v(static_cast<Eigen::Index>(xs.size()));
    Eigen::Index i = 0;
    for (double x : xs) v(i++) = x;
    return v;
}
}  // namespace

TEST_CASE("residual is elementwise subtraction") {
    CHECK(orl::residual(make({3, 4}), make({1, 1})) == make({2, 3}));
    CHECK(orl::residual(make({2, -1}), make({2, -1})).isZero(0.0));
    CHECK(orl::residual(make({0.5}), make({-0.5}))(0) == doctest::Approx(1.0));
    CHECK_THROWS_AS(orl::residual(make({1, 2}), make({1})), orl::DataError);
}

TEST_CASE("stack_regressors keeps the oldest block first") {
    std::vector<Vec> h1 = {make({1}), make({2})};
    CHECK(orl::stack_regressors(h1, 2, 1) == make({1, 2}));

    // p = 1 selects only the most recent residual.
    CHECK(orl::stack_regressors(h1, 1, 1) == make({2}));

    std::vector<Vec> h2 = {make({1, 0}), make({0, 1})};
    CHECK(orl::stack_regressors(h2, 2, 2) == make({1, 0, 0, 1}));
}

TEST_CASE("stack_regressors zero-pads short histories") {
    std::vector<Vec> h = {make({7, 8})};
    CHECK(orl::stack_regressors(h, 3, 2) == make({0, 0, 0, 0, 7, 8}));
    CHECK(orl::stack_regressors(std::vector<Vec>{}, 2, 2) == make({0, 0, 0, 0}));
}

TEST_CASE("stack_regressors rejects bad configuration") {
    std::vector<Vec> h = {make({1})};
    CHECK_THROWS_AS(orl::stack_regressors(h, 0, 1), orl::ConfigError);
    CHECK_THROWS_AS(orl::stack_regressors(h, 2, 2), orl::DataError);  // wrong residual dim
}

TEST_CASE("stack_regressors output length is always n*p") {
    std::mt19937_64 rng(7);
    for (int trial = 0; trial < 50; ++trial) {
        const int n = 1 + static_cast<int>(rng() % 4);
        const int p = 1 + static_cast<int>(rng() % 5);
        const int len = static_cast<int>(rng() % 8);
        std::vector<Vec> h;
        for (int i = 0; i < len; ++i) h.push_back(testutil::random_vec(rng, n));
        CHECK(orl::stack_regressors(h, p, n).size() == static_cast<Eigen::Index>(n) * p);
    }
}

TEST_CASE("corrected_prediction adds the residual forecast to the offline guess") {
    const Vec off = make({2.0, -3.0});
    CHECK(orl::corrected_prediction(Vec::Zero(2), off) == off);  // zero forecast passes through
    CHECK(orl::corrected_prediction(make({1}), make({2}))(0) == doctest::Approx(3.0));
    CHECK(orl::corrected_prediction(-off, off).isZero(0.0));
    CHECK_THROWS_AS(orl::corrected_prediction(make({1}), make({1, 2})), orl::DataError);
}

TEST_CASE("squared_loss basics") {
    CHECK(orl::squared_loss(make({1, 2}), make({1, 2})) == 0.0);
    CHECK(orl::squared_loss(make({3, 4}), make({0, 0})) == doctest::Approx(25.0));
    CHECK(orl::squared_loss(make({1}), make({-1})) == doctest::Approx(4.0));
    CHECK_THROWS_AS(orl::squared_loss(make({1}), make({1, 2})), orl::DataError);
}

TEST_CASE("squared_loss is symmetric, nonnegative, zero iff equal") {
    std::mt19937_64 rng(11);
    for (int trial = 0; trial < 200; ++trial) {
        const int n = 1 + static_cast<int>(rng() % 4);
        const Vec a = testutil::random_vec(rng, n, -10, 10);
        const Vec b = testutil::random_vec(rng, n, -10, 10);
        const double ab = orl::squared_loss(a, b);
        CHECK(ab == orl::squared_loss(b, a));
        CHECK(ab >= 0.0);
        if (a != b) CHECK(ab > 0.0);
    }
}

TEST_CASE("state-space loss equals residual-space loss") {
    // ||r - (e_hat + r_off)||^2 == ||(r - r_off) - e_hat||^2
    std::mt19937_64 rng(13);
    for (int trial = 0; trial < 200; ++trial) {
        const int n = 1 + static_cast<int>(rng() % 5);
        const Vec r = testutil::random_vec(rng, n, -5, 5);
        const Vec r_off = testutil::random_vec(rng, n, -5, 5);
        const Vec e_hat = testutil::random_vec(rng, n, -5, 5);
        const double direct = orl::squared_loss(r, orl::corrected_prediction(e_hat, r_off));
        const double residual_space = (orl::residual(r, r_off) - e_hat).squaredNorm();
        CHECK(direct == doctest::Approx(residual_space).epsilon(1e-12));
    }
}

TEST_CASE("trajectory indexing and validation") {
    orl::Trajectory traj;
    traj.start_time = -2;
    traj.states = {make({0, 0}), make({1, 1}), make({2, 2}), make({3, 3})};
    traj.validate();
    CHECK(traj.dim() == 2);
    CHECK(traj.end_time() == 1);
    CHECK(traj.contains(-2));
    CHECK(!traj.contains(2));
    CHECK(traj.at(0) == make({2, 2}));
    CHECK_THROWS_AS(traj.at(5), orl::DataError);

    traj.states.push_back(make({1}));
    CHECK_THROWS_AS(traj.validate(), orl::DataError);
}

TEST_CASE("offline prediction set validation") {
    orl::OfflinePredictionSet set;
    set.horizon = 1;
    set.num_experts = 2;
    set.dim = 1;
    set.grid = {{make({0.0}), make({0.1})}, {make({1.0}), make({1.1})}};
    set.validate();
    CHECK(set.at(1, 1) == make({1.1}));
    CHECK_THROWS_AS(set.at(2, 0), orl::DataError);
    CHECK_THROWS_AS(set.at(0, 2), orl::DataError);

    set.grid[0].pop_back();
    CHECK_THROWS_AS(set.validate(), orl::DataError);
}
