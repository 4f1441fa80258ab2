#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <Eigen/Dense>
#include <cmath>

#include "ddsindy/quadrature.hpp"

using namespace ddsindy;

namespace {

// Closed-form monomial integral over [a, b].
double monomial_integral(int p, double a, double b) {
    return (std::pow(b, p + 1) - std::pow(a, p + 1)) / (p + 1);
}

Eigen::VectorXd sample(const QuadratureRule& rule, double (*f)(double)) {
    Eigen::VectorXd s(rule.size());
    for (Eigen::Index k = 0; k < rule.size(); ++k) s[k] = f(rule.nodes[k]);
    return s;
}

} // namespace

TEST_CASE("trapezoid nodes and weights on [0,1]") {
    const auto rule = make_rule(QuadKind::trapezoid, 3, 0.0, 1.0);
    CHECK(rule.nodes[0] == doctest::Approx(0.0));
    CHECK(rule.nodes[1] == doctest::Approx(0.5));
    CHECK(rule.nodes[2] == doctest::Approx(1.0));
    CHECK(rule.weights[0] == doctest::Approx(0.25));
    CHECK(rule.weights[1] == doctest::Approx(0.5));
    CHECK(rule.weights[2] == doctest::Approx(0.25));
}

TEST_CASE("left rectangles on [-3,-1]") {
    const auto rule = make_rule(QuadKind::rectangles, 2, -3.0, -1.0);
    CHECK(rule.nodes[0] == doctest::Approx(-3.0));
    CHECK(rule.nodes[1] == doctest::Approx(-2.0));
    CHECK(rule.weights[0] == doctest::Approx(1.0));
    CHECK(rule.weights[1] == doctest::Approx(1.0));
}

TEST_CASE("clenshaw-curtis 3-point rule matches the exactness conditions") {
    // Independent oracle: solve the 3-point exactness conditions on the
    // monomials 1, sigma, sigma^2 for nodes (-1, 0, 1).
    Eigen::Matrix3d V;
    V << 1, 1, 1, -1, 0, 1, 1, 0, 1;
    Eigen::Vector3d rhs(2.0, 0.0, 2.0 / 3.0);
    const Eigen::Vector3d w = V.colPivHouseholderQr().solve(rhs);

    const auto rule = make_rule(QuadKind::clenshaw_curtis, 3, -1.0, 1.0);
    CHECK(rule.nodes[0] == doctest::Approx(-1.0));
    CHECK(rule.nodes[1] == doctest::Approx(0.0).epsilon(1e-12));
    CHECK(rule.nodes[2] == doctest::Approx(1.0));
    for (int k = 0; k < 3; ++k) CHECK(rule.weights[k] == doctest::Approx(w[k]).epsilon(1e-12));
    CHECK(rule.weights[0] == doctest::Approx(1.0 / 3.0));
    CHECK(rule.weights[1] == doctest::Approx(4.0 / 3.0));
}

TEST_CASE("integrate spot values") {
    SUBCASE("trapezoid exact on affine integrands") {
        const auto rule = make_rule(QuadKind::trapezoid, 3, 0.0, 1.0);
        CHECK(integrate(rule, sample(rule, +[](double s) { return s; })) ==
              doctest::Approx(0.5).epsilon(1e-14));
    }
    SUBCASE("clenshaw-curtis K=5 integrates sigma^4 exactly") {
        const auto rule = make_rule(QuadKind::clenshaw_curtis, 5, -1.0, 1.0);
        CHECK(integrate(rule, sample(rule, +[](double s) { return s * s * s * s; })) ==
              doctest::Approx(0.4).epsilon(1e-13));
    }
    SUBCASE("unit integrand gives the window length for every kind") {
        for (auto kind : {QuadKind::rectangles, QuadKind::trapezoid, QuadKind::clenshaw_curtis}) {
            const auto rule = make_rule(kind, 8, -2.5, -0.5);
            const Eigen::VectorXd ones = Eigen::VectorXd::Ones(rule.size());
            CHECK(integrate(rule, ones) == doctest::Approx(2.0).epsilon(1e-13));
        }
    }
}

TEST_CASE("weight sums equal the window length, nodes ascend inside it") {
    for (auto kind : {QuadKind::rectangles, QuadKind::trapezoid, QuadKind::clenshaw_curtis})
        for (int K : {2, 3, 5, 17, 64, 128}) {
            const auto rule = make_rule(kind, K, -3.0, -1.0);
            CHECK(std::abs(rule.weights.sum() - 2.0) <= 1e-12 * 2.0);
            for (Eigen::Index k = 1; k < rule.size(); ++k)
                CHECK(rule.nodes[k] > rule.nodes[k - 1]);
            CHECK(rule.nodes[0] >= rule.a);
            CHECK(rule.nodes[rule.size() - 1] <= rule.b);
        }
}

TEST_CASE("polynomial exactness per rule order") {
    const double a = -3.0, b = -1.0;
    auto check_exact = [&](QuadKind kind, int K, int degree) {
        const auto rule = make_rule(kind, K, a, b);
        for (int p = 0; p <= degree; ++p) {
            Eigen::VectorXd s(rule.size());
            for (Eigen::Index k = 0; k < rule.size(); ++k) s[k] = std::pow(rule.nodes[k], p);
            const double want = monomial_integral(p, a, b);
            CHECK(std::abs(integrate(rule, s) - want) <= 1e-10 * std::abs(want));
        }
    };
    check_exact(QuadKind::rectangles, 7, 0);
    check_exact(QuadKind::trapezoid, 7, 1);
    for (int K : {2, 3, 5, 8, 9, 12}) check_exact(QuadKind::clenshaw_curtis, K, K - 1);
}

TEST_CASE("error decreases monotonically for e^sigma as K doubles") {
    const double exact = std::exp(-1.0) - std::exp(-3.0);
    for (auto kind : {QuadKind::trapezoid, QuadKind::clenshaw_curtis}) {
        double prev = 1e100;
        for (int K = 4; K <= 128; K *= 2) {
            const auto rule = make_rule(kind, K, -3.0, -1.0);
            const double err =
                std::abs(integrate(rule, sample(rule, +[](double s) { return std::exp(s); })) -
                         exact);
            // strictly decreasing until the rounding floor
            CHECK((err < prev || err <= 1e-14));
            prev = err;
        }
    }
}

TEST_CASE("affine-map covariance") {
    const double a = -7.0, b = -2.0;
    for (auto kind : {QuadKind::rectangles, QuadKind::trapezoid, QuadKind::clenshaw_curtis}) {
        const auto mapped = make_rule(kind, 16, a, b);
        const auto ref = make_rule(kind, 16, -1.0, 1.0);
        Eigen::VectorXd fm(16), fr(16);
        for (int k = 0; k < 16; ++k) {
            fm[k] = std::exp(mapped.nodes[k]);
            fr[k] = std::exp(a + 0.5 * (b - a) * (ref.nodes[k] + 1.0));
        }
        CHECK(integrate(mapped, fm) ==
              doctest::Approx(0.5 * (b - a) * integrate(ref, fr)).epsilon(1e-13));
    }
}

TEST_CASE("invalid construction and mismatched samples throw") {
    CHECK_THROWS_AS(make_rule(QuadKind::trapezoid, 1, 0.0, 1.0), Error);
    CHECK_THROWS_AS(make_rule(QuadKind::clenshaw_curtis, 1, 0.0, 1.0), Error);
    CHECK_THROWS_AS(make_rule(QuadKind::rectangles, 0, 0.0, 1.0), Error);
    CHECK_THROWS_AS(make_rule(QuadKind::trapezoid, 4, 1.0, 1.0), Error);
    CHECK_THROWS_AS(make_rule(QuadKind::trapezoid, 4, 2.0, 1.0), Error);
    const auto rule = make_rule(QuadKind::trapezoid, 4, 0.0, 1.0);
    const Eigen::VectorXd three = Eigen::VectorXd::Ones(3);
    CHECK_THROWS_AS(integrate(rule, three), Error);
}

TEST_CASE("kind names round-trip through the config spelling") {
    for (auto kind : {QuadKind::rectangles, QuadKind::trapezoid, QuadKind::clenshaw_curtis})
        CHECK(quad_kind_from_string(to_string(kind)) == kind);
    CHECK_THROWS_AS(quad_kind_from_string("gauss"), Error);
}
