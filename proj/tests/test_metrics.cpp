#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstdlib>
#include <random>

#include "qdra/metrics.hpp"

using namespace qdra;

namespace {

Eigen::VectorXd random_vec(int n, std::mt19937_64& rng) {
    std::normal_distribution<double> gauss(0.0, 1.0);
    Eigen::VectorXd v(n);
    for (int r = 0; r < n; ++r) v[r] = gauss(rng);
    return v;
}

}  // namespace

TEST_CASE("lyapunov vanishes exactly at the optimum") {
    std::mt19937_64 rng(1);
    const Eigen::VectorXd z_star = random_vec(4, rng);
    const std::vector<Eigen::VectorXd> lambda_star = {random_vec(4, rng),
                                                      random_vec(4, rng)};
    CHECK(lyapunov(z_star, lambda_star, z_star, lambda_star, 2.0) == 0.0);
}

TEST_CASE("lyapunov unit deviation") {
    const Eigen::VectorXd zero = Eigen::VectorXd::Zero(3);
    Eigen::VectorXd e1 = Eigen::VectorXd::Zero(3);
    e1[0] = 1.0;
    CHECK(lyapunov(zero, {e1}, zero, {zero}, 1.0) == doctest::Approx(1.0));
}

TEST_CASE("lyapunov matches an independently coded sum") {
    std::mt19937_64 rng(5);
    for (int trial = 0; trial < 50; ++trial) {
        const int n_nodes = 2 + static_cast<int>(rng() % 5);
        const int dim = 1 + static_cast<int>(rng() % 6);
        const double rho = 0.25 * static_cast<double>(1 + rng() % 8);
        const Eigen::VectorXd z = random_vec(dim, rng), z_star = random_vec(dim, rng);
        std::vector<Eigen::VectorXd> lambda, lambda_star;
        for (int i = 0; i < n_nodes; ++i) {
            lambda.push_back(random_vec(dim, rng));
            lambda_star.push_back(random_vec(dim, rng));
        }

        double expected = 0.0;
        for (int i = 0; i < n_nodes; ++i)
            for (int c = 0; c < dim; ++c) {
                const double d = lambda[static_cast<std::size_t>(i)][c] -
                                 lambda_star[static_cast<std::size_t>(i)][c];
                expected += d * d / rho;
            }
        for (int c = 0; c < dim; ++c)
            expected += rho * n_nodes * (z[c] - z_star[c]) * (z[c] - z_star[c]);

        const double got = lyapunov(z, lambda, z_star, lambda_star, rho);
        CHECK(got == doctest::Approx(expected).epsilon(1e-12));
    }
    CHECK_THROWS_AS(lyapunov(Eigen::VectorXd::Zero(2), {}, Eigen::VectorXd::Zero(3),
                             {}, 1.0),
                    DimensionMismatch);
}

TEST_CASE("contraction estimate recovers a geometric rate") {
    std::vector<double> series;
    for (int k = 0; k < 40; ++k) series.push_back(std::pow(0.5, k));
    const auto est = contraction_estimate(series, 0.0);
    CHECK(est.factor == doctest::Approx(0.5).epsilon(1e-6));
    CHECK(est.first == 0);
    CHECK(est.last == 40);
}

TEST_CASE("contraction estimate needs a pre-plateau segment") {
    CHECK_THROWS_AS(contraction_estimate({1.0, 1.0, 1.0}, 1.0), InsufficientData);
    const std::vector<double> flat(30, 2.5);
    CHECK_THROWS_AS(contraction_estimate(flat, 2.5), InsufficientData);
}

TEST_CASE("contraction estimate uses only the pre-plateau prefix") {
    std::vector<double> series;
    for (int k = 0; k < 25; ++k) series.push_back(std::pow(0.25, k) + 1e-6);
    const auto est = contraction_estimate(series, 1e-6);
    CHECK(est.factor == doctest::Approx(0.25).epsilon(1e-3));
    CHECK(est.last < 25);  // tail at the floor is excluded
}

TEST_CASE("plateau floor is the median of the tail") {
    std::vector<double> series(100, 1.0);
    for (int k = 90; k < 100; ++k) series[static_cast<std::size_t>(k)] = k % 2 ? 3.0 : 5.0;
    CHECK(plateau_floor(series) == 5.0);  // upper median of {3,5} pairs
    CHECK_THROWS_AS(plateau_floor({}), InsufficientData);
}

TEST_CASE("bound checks flag a violated primal-dual identity") {
    std::mt19937_64 rng(9);
    const int dim = 3;
    std::vector<NodeState> nodes(2);
    IterationSnapshot snapshot;
    for (auto& node : nodes) {
        node.x = random_vec(dim, rng);
        node.z_hat = random_vec(dim, rng);
        node.lambda_hat = random_vec(dim, rng);
        node.g = random_vec(dim, rng);
        snapshot.z_hat_before.push_back(random_vec(dim, rng));
        snapshot.lambda_hat_before.push_back(random_vec(dim, rng));
    }
    snapshot.nodes_after = &nodes;
    snapshot.y_bar = random_vec(dim, rng);
    const std::vector<Eigen::VectorXd> y = {random_vec(dim, rng), random_vec(dim, rng)};
    snapshot.y = &y;

    const auto checks = bound_check_iteration(snapshot, 1.0, std::nullopt);
    CHECK(!checks.identity_ok);
    CHECK(checks.identity_residual > 1e-3);
}

TEST_CASE("bound checks pass on a consistent exact-average iteration") {
    std::mt19937_64 rng(11);
    const int dim = 3;
    const double rho = 2.0;
    std::vector<NodeState> nodes(3);
    IterationSnapshot snapshot;
    std::vector<Eigen::VectorXd> y;

    // Forward-construct a consistent iteration by replaying the update rules.
    Eigen::VectorXd y_sum = Eigen::VectorXd::Zero(dim);
    for (auto& node : nodes) {
        const Eigen::VectorXd z_prev = random_vec(dim, rng);
        const Eigen::VectorXd lambda_prev = random_vec(dim, rng);
        node.x = random_vec(dim, rng);
        node.g = rho * (z_prev - node.x) - lambda_prev;
        y.push_back(node.x - node.g / rho);
        y_sum += y.back();
        snapshot.z_hat_before.push_back(z_prev);
        snapshot.lambda_hat_before.push_back(lambda_prev);
    }
    snapshot.y_bar = y_sum / 3.0;
    for (auto& node : nodes) {
        node.z_hat = snapshot.y_bar;
        node.lambda_hat = rho * (node.x - node.z_hat) - node.g;
    }
    snapshot.nodes_after = &nodes;
    snapshot.y = &y;

    const auto checks = bound_check_iteration(snapshot, rho, std::nullopt);
    CHECK(checks.consensus_bounds_ok);
    CHECK(checks.dual_sum_ok);
    CHECK(checks.identity_ok);
    CHECK(checks.zhat_spread <= 1e-15);
}

TEST_CASE("run record enforces increasing iterations and formats stably") {
    RunRecord record;
    record.set_meta("seed", "7");
    RunRow row;
    row.k = 1;
    row.solution_error = 0.1;
    record.append(row);
    CHECK_THROWS_AS(record.append(row), std::invalid_argument);
    row.k = 2;
    record.append(row);

    const std::string csv = record.to_csv();
    CHECK(csv.find("# seed = 7\n") != std::string::npos);
    CHECK(csv.find("iteration,solution_error,lyapunov,") != std::string::npos);
    CHECK(csv.find("\n1,0.1,0,") != std::string::npos);
}

TEST_CASE("doubles round-trip through their formatted text") {
    std::mt19937_64 rng(13);
    std::uniform_real_distribution<double> unif(-1e6, 1e6);
    for (int trial = 0; trial < 1000; ++trial) {
        const double v = unif(rng) * std::pow(10.0, static_cast<int>(rng() % 20) - 10);
        CHECK(std::strtod(format_double(v).c_str(), nullptr) == v);
    }
    CHECK(format_double(0.0) == "0");
    CHECK(format_double(1.0) == "1");
}
