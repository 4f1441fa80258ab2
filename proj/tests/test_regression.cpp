#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <Eigen/Dense>
#include <random>

#include "ddsindy/regression.hpp"

using namespace ddsindy;

namespace {

// Well-conditioned random design + planted sparse truth; the construction
// itself is the oracle for the recovery tests.
struct Planted {
    Eigen::MatrixXd design;
    Eigen::VectorXd truth;
    Eigen::VectorXd target;
    std::vector<int> support;
};

Planted make_planted(int rows, int cols, std::uint64_t seed, double noise_std = 0.0) {
    std::mt19937_64 gen(seed);
    std::normal_distribution<double> gauss(0.0, 1.0);
    Planted p;
    p.design.resize(rows, cols);
    for (int i = 0; i < rows; ++i)
        for (int j = 0; j < cols; ++j) p.design(i, j) = gauss(gen);
    p.truth = Eigen::VectorXd::Zero(cols);
    p.support = {0, cols / 2, cols - 1};
    const double vals[] = {1.5, -0.8, 0.6};
    for (int k = 0; k < 3; ++k) p.truth[p.support[static_cast<std::size_t>(k)]] = vals[k];
    p.target = p.design * p.truth;
    if (noise_std > 0.0)
        for (int i = 0; i < rows; ++i) p.target[i] += noise_std * gauss(gen);
    return p;
}

Eigen::MatrixXd orthonormal_design(int rows, int cols, std::uint64_t seed) {
    std::mt19937_64 gen(seed);
    std::normal_distribution<double> gauss(0.0, 1.0);
    Eigen::MatrixXd A(rows, cols);
    for (int i = 0; i < rows; ++i)
        for (int j = 0; j < cols; ++j) A(i, j) = gauss(gen);
    const Eigen::HouseholderQR<Eigen::MatrixXd> qr(A);
    return Eigen::MatrixXd(qr.householderQ()).leftCols(cols);
}

RegressionProblem problem(const Eigen::MatrixXd& design, const Eigen::VectorXd& target,
                          double lambda) {
    RegressionProblem p;
    p.design = design;
    p.target = target;
    p.lambda = lambda;
    return p;
}

} // namespace

TEST_CASE("stls on an identity design is pure thresholding") {
    Eigen::MatrixXd theta = Eigen::MatrixXd::Identity(3, 3);
    Eigen::VectorXd y(3);
    y << 1.0, 0.001, 2.0;
    const auto sol = stls(problem(theta, y, 0.01));
    CHECK(sol.xi[0] == doctest::Approx(1.0));
    CHECK(sol.xi[1] == 0.0);
    CHECK(sol.xi[2] == doctest::Approx(2.0));
    CHECK(sol.support == std::vector<int>{0, 2});
}

TEST_CASE("lambda zero reduces stls to ordinary least squares") {
    const auto p = make_planted(40, 6, 11);
    const auto sol = stls(problem(p.design, p.target, 0.0));
    const Eigen::VectorXd ols = p.design.colPivHouseholderQr().solve(p.target);
    CHECK(sol.xi.isApprox(ols, 1e-10));
    CHECK(sol.support.size() == 6);
}

TEST_CASE("planted model: exact support recovery and tiny coefficient error") {
    const auto p = make_planted(200, 10, 2024);
    const auto sol = stls(problem(p.design, p.target, 0.1));
    CHECK(sol.support == p.support);
    CHECK((sol.xi - p.truth).cwiseAbs().maxCoeff() <= 1e-8);
}

TEST_CASE("planted model survives a 1e-3 noise floor") {
    const auto p = make_planted(200, 10, 77, 1e-3);
    const auto sol = stls(problem(p.design, p.target, 0.1));
    CHECK(sol.support == p.support);
}

TEST_CASE("stls is idempotent on its own support") {
    const auto p = make_planted(120, 8, 5);
    const auto sol = stls(problem(p.design, p.target, 0.1));
    Eigen::MatrixXd sub(p.design.rows(), static_cast<Eigen::Index>(sol.support.size()));
    for (std::size_t j = 0; j < sol.support.size(); ++j)
        sub.col(static_cast<Eigen::Index>(j)) = p.design.col(sol.support[j]);
    const auto again = stls(problem(sub, p.target, 0.1));
    CHECK(again.support.size() == sol.support.size());
    for (std::size_t j = 0; j < sol.support.size(); ++j)
        CHECK(again.xi[static_cast<Eigen::Index>(j)] ==
              doctest::Approx(sol.xi[sol.support[j]]).epsilon(1e-10));
}

TEST_CASE("every surviving coefficient clears the threshold") {
    for (std::uint64_t seed : {1ull, 2ull, 3ull, 4ull}) {
        const auto p = make_planted(100, 10, seed, 0.05);
        for (double lambda : {0.01, 0.05, 0.3}) {
            const auto sol = stls(problem(p.design, p.target, lambda));
            for (int k : sol.support) CHECK(std::abs(sol.xi[k]) >= lambda);
        }
    }
}

TEST_CASE("support shrinks monotonically in lambda on an orthonormal design") {
    const Eigen::MatrixXd Q = orthonormal_design(50, 8, 31);
    Eigen::VectorXd truth = Eigen::VectorXd::Zero(8);
    truth << 1.0, -0.6, 0.3, 0.12, -0.05, 0.02, 0.0, 0.0;
    const Eigen::VectorXd y = Q * truth;
    std::vector<int> prev;
    bool first = true;
    for (double lambda : {0.01, 0.04, 0.1, 0.2, 0.5}) {
        const auto sol = stls(problem(Q, y, lambda));
        if (!first)
            for (int k : sol.support)
                CHECK(std::find(prev.begin(), prev.end(), k) != prev.end());
        prev = sol.support;
        first = false;
    }
}

TEST_CASE("scale equivariance") {
    const auto p = make_planted(80, 6, 9);
    const double c = 3.7;
    SUBCASE("lambda zero solution scales with the target") {
        const auto base = stls(problem(p.design, p.target, 0.0));
        const auto scaled = stls(problem(p.design, c * p.target, 0.0));
        CHECK(scaled.xi.isApprox(c * base.xi, 1e-10));
    }
    SUBCASE("support at lambda on y equals support at c*lambda on c*y") {
        const Eigen::MatrixXd Q = orthonormal_design(60, 6, 13);
        Eigen::VectorXd truth = Eigen::VectorXd::Zero(6);
        truth << 0.9, -0.4, 0.15, 0.0, 0.0, 0.05;
        const Eigen::VectorXd y = Q * truth;
        const auto base = stls(problem(Q, y, 0.1));
        const auto scaled = stls(problem(Q, c * y, c * 0.1));
        CHECK(base.support == scaled.support);
    }
}

TEST_CASE("rank-deficient support falls back to minimum norm with a warning") {
    Eigen::MatrixXd theta(20, 3);
    std::mt19937_64 gen(8);
    std::normal_distribution<double> gauss(0.0, 1.0);
    for (int i = 0; i < 20; ++i) {
        theta(i, 0) = gauss(gen);
        theta(i, 1) = theta(i, 0);  // exact duplicate column
        theta(i, 2) = gauss(gen);
    }
    const Eigen::VectorXd y = theta.col(0) * 2.0 + theta.col(2);
    const auto sol = stls(problem(theta, y, 1e-6));
    CHECK(sol.rank_warning);
    // minimum-norm splits the duplicate weight evenly
    CHECK(sol.xi[0] == doctest::Approx(1.0).epsilon(1e-8));
    CHECK(sol.xi[1] == doctest::Approx(1.0).epsilon(1e-8));
    CHECK(sol.xi[2] == doctest::Approx(1.0).epsilon(1e-8));
}

TEST_CASE("empty final support is a warning, not an error") {
    Eigen::MatrixXd theta = Eigen::MatrixXd::Identity(4, 4);
    Eigen::VectorXd y = Eigen::VectorXd::Constant(4, 1e-4);
    const auto sol = stls(problem(theta, y, 10.0));
    CHECK(sol.support.empty());
    CHECK(sol.empty_support_warning);
    CHECK(sol.xi.cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("lasso") {
    SUBCASE("lambda zero recovers least squares") {
        const auto p = make_planted(60, 5, 21);
        const auto sol = lasso(problem(p.design, p.target, 0.0));
        const Eigen::VectorXd ols = p.design.colPivHouseholderQr().solve(p.target);
        CHECK(sol.xi.isApprox(ols, 1e-6));
    }
    SUBCASE("orthonormal design soft-thresholds the projections") {
        const Eigen::MatrixXd Q = orthonormal_design(40, 5, 17);
        Eigen::VectorXd truth(5);
        truth << 1.0, -0.5, 0.2, 0.05, 0.0;
        const Eigen::VectorXd y = Q * truth;
        const double lambda = 0.1;
        RegressionProblem prob = problem(Q, y, lambda);
        prob.normalize_columns = false;  // orthonormal already
        const auto sol = lasso(prob);
        const Eigen::VectorXd proj = Q.transpose() * y;
        for (int k = 0; k < 5; ++k) {
            const double want =
                std::abs(proj[k]) > lambda
                    ? (proj[k] > 0 ? proj[k] - lambda : proj[k] + lambda)
                    : 0.0;
            CHECK(sol.xi[k] == doctest::Approx(want).epsilon(1e-7));
        }
    }
    SUBCASE("small lambda keeps the planted support with coefficients within 2 lambda") {
        const Eigen::MatrixXd Q = orthonormal_design(80, 8, 23);
        Eigen::VectorXd truth = Eigen::VectorXd::Zero(8);
        truth[1] = 1.2;
        truth[4] = -0.9;
        truth[6] = 0.7;
        const Eigen::VectorXd y = Q * truth;
        const double lambda = 0.05;
        RegressionProblem prob = problem(Q, y, lambda);
        prob.normalize_columns = false;
        const auto sol = lasso(prob);
        for (int k : {1, 4, 6}) {
            CHECK(std::find(sol.support.begin(), sol.support.end(), k) != sol.support.end());
            CHECK(std::abs(sol.xi[k] - truth[k]) <= 2.0 * lambda);
        }
    }
}

TEST_CASE("fit_all stacks per-column solves") {
    const auto p = make_planted(100, 7, 33);
    SUBCASE("single column matches the scalar path") {
        const auto stacked = fit_all(p.design, p.target, 0.1);
        const auto single = stls(problem(p.design, p.target, 0.1));
        CHECK(stacked.xi.col(0).isApprox(single.xi));
    }
    SUBCASE("identical targets give identical coefficient columns") {
        Eigen::MatrixXd targets(p.target.size(), 2);
        targets.col(0) = p.target;
        targets.col(1) = p.target;
        const auto stacked = fit_all(p.design, targets, 0.1);
        CHECK(stacked.xi.col(0) == stacked.xi.col(1));
    }
    SUBCASE("column masks zero out excluded coefficients") {
        Eigen::MatrixXd targets(p.target.size(), 1);
        targets.col(0) = p.target;
        std::vector<std::vector<int>> masks{{1, 2, 4, 5, 6}};  // excludes 0 and 3
        const auto stacked = fit_all(p.design, targets, 0.0, SolverKind::stls, 25, true, &masks);
        CHECK(stacked.xi(0, 0) == 0.0);
        CHECK(stacked.xi(3, 0) == 0.0);
    }
}
