#pragma once

#include <Eigen/Dense>
#include <string>

#include "ddsindy/error.hpp"

namespace ddsindy {

enum class QuadKind { rectangles, trapezoid, clenshaw_curtis };

/// Config-facing names: rectangles | trapezoid | clenshaw-curtis.
std::string to_string(QuadKind kind);
QuadKind quad_kind_from_string(const std::string& name);

/// Nodes and weights on a window [a, b]. Nodes ascend; weights sum to b-a.
struct QuadratureRule {
    QuadKind kind = QuadKind::trapezoid;
    double a = 0.0, b = 0.0;
    Eigen::VectorXd nodes;    // K, ascending in [a, b]
    Eigen::VectorXd weights;  // K

    Eigen::Index size() const { return nodes.size(); }
};

/// rectangles: left endpoints a + k*h (h = (b-a)/K), all weights h.
/// trapezoid:  K uniform nodes including endpoints, weights h*(1/2,1,...,1,1/2).
/// clenshaw_curtis: Chebyshev-Lobatto points mapped to [a,b] with the
/// classical cosine-series weights (direct O(K^2) evaluation).
QuadratureRule make_rule(QuadKind kind, int K, double a, double b);

/// Sum_k w_k * samples[k]; the matrix overload integrates each column.
double integrate(const QuadratureRule& rule, const Eigen::VectorXd& samples);
Eigen::VectorXd integrate(const QuadratureRule& rule, const Eigen::MatrixXd& samples);

} // namespace ddsindy
