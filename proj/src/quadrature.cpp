#include "ddsindy/quadrature.hpp"

#include <cmath>
#include <numbers>

namespace ddsindy {

std::string to_string(QuadKind kind) {
    switch (kind) {
        case QuadKind::rectangles: return "rectangles";
        case QuadKind::trapezoid: return "trapezoid";
        case QuadKind::clenshaw_curtis: return "clenshaw-curtis";
    }
    return "?";
}

QuadKind quad_kind_from_string(const std::string& name) {
    if (name == "rectangles") return QuadKind::rectangles;
    if (name == "trapezoid") return QuadKind::trapezoid;
    if (name == "clenshaw-curtis" || name == "clenshaw_curtis") return QuadKind::clenshaw_curtis;
    throw Error("quadrature: unknown rule '" + name +
                "' (expected rectangles|trapezoid|clenshaw-curtis)");
}

QuadratureRule make_rule(QuadKind kind, int K, double a, double b) {
    require(a < b, "quadrature: window requires a < b");
    QuadratureRule rule;
    rule.kind = kind;
    rule.a = a;
    rule.b = b;
    const double len = b - a;

    switch (kind) {
        case QuadKind::rectangles: {
            require(K >= 1, "quadrature: rectangles needs K >= 1");
            const double h = len / K;
            rule.nodes.resize(K);
            rule.weights = Eigen::VectorXd::Constant(K, h);
            for (int k = 0; k < K; ++k) rule.nodes[k] = a + k * h;
            break;
        }
        case QuadKind::trapezoid: {
            require(K >= 2, "quadrature: trapezoid needs K >= 2");
            const double h = len / (K - 1);
            rule.nodes.resize(K);
            rule.weights = Eigen::VectorXd::Constant(K, h);
            rule.weights[0] = rule.weights[K - 1] = 0.5 * h;
            for (int k = 0; k < K; ++k) rule.nodes[k] = a + k * h;
            rule.nodes[K - 1] = b;  // avoid rounding drift at the right endpoint
            break;
        }
        case QuadKind::clenshaw_curtis: {
            require(K >= 2, "quadrature: clenshaw-curtis needs K >= 2");
            const int n = K - 1;
            rule.nodes.resize(K);
            rule.weights.resize(K);
            // Weights on [-1,1] for Lobatto angles theta_j = j*pi/n:
            //   w_j = (c_j/n) * (1 - sum_{k=1}^{floor(n/2)} b_k/(4k^2-1) * cos(2k theta_j))
            // with b_k = 1 when 2k = n, else 2; c_j = 1 at the endpoints, 2 inside.
            for (int j = 0; j <= n; ++j) {
                const double theta = j * std::numbers::pi / n;
                double s = 0.0;
                for (int k = 1; k <= n / 2; ++k) {
                    const double bk = (2 * k == n) ? 1.0 : 2.0;
                    s += bk / (4.0 * k * k - 1.0) * std::cos(2.0 * k * theta);
                }
                const double cj = (j == 0 || j == n) ? 1.0 : 2.0;
                const double w = cj / n * (1.0 - s);
                // cos(theta_j) descends from 1 to -1; store ascending in [a,b].
                const double x = std::cos(theta);
                rule.nodes[n - j] = a + 0.5 * len * (x + 1.0);
                rule.weights[n - j] = 0.5 * len * w;
            }
            rule.nodes[0] = a;
            rule.nodes[n] = b;
            break;
        }
    }
    return rule;
}

double integrate(const QuadratureRule& rule, const Eigen::VectorXd& samples) {
    require(samples.size() == rule.size(), "quadrature: sample count must equal node count");
    return rule.weights.dot(samples);
}

Eigen::VectorXd integrate(const QuadratureRule& rule, const Eigen::MatrixXd& samples) {
    require(samples.rows() == rule.size(), "quadrature: sample rows must equal node count");
    return samples.transpose() * rule.weights;
}

} // namespace ddsindy
