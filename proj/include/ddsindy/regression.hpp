#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

#include "ddsindy/error.hpp"

namespace ddsindy {

enum class SolverKind { stls, lasso };

std::string to_string(SolverKind kind);
SolverKind solver_kind_from_string(const std::string& name);

/// One sparsity-promoting regression instance. For STLS, lambda is the hard
/// threshold applied to raw-scale coefficients; for LASSO it is the l1
/// weight. The two roles are related but not equivalent.
struct RegressionProblem {
    Eigen::MatrixXd design;  // m_eff x p
    Eigen::VectorXd target;  // m_eff
    double lambda = 0.0;
    int max_iters = 25;
    bool normalize_columns = true;

    void validate() const;
};

struct SparseCoefficients {
    Eigen::VectorXd xi;
    std::vector<int> support;  // indices of nonzeros, ascending
    bool rank_warning = false;
    bool empty_support_warning = false;
    bool converged = true;
    int iterations = 0;
};

/// Sequential thresholded least squares. The inner solve runs in
/// column-RMS-normalized space for conditioning; thresholding happens on
/// raw-scale coefficients (|xi| >= lambda survives, ties kept). Rank
/// deficiency falls back to the minimum-norm solution with a warning.
SparseCoefficients stls(const RegressionProblem& problem);

/// Coordinate-descent l1-penalized least squares: minimizes
/// 0.5*||y - Theta xi||^2 + lambda*||xi||_1, tolerance 1e-8 on the
/// coefficient change per sweep.
SparseCoefficients lasso(const RegressionProblem& problem);

SparseCoefficients solve_sparse(SolverKind kind, const RegressionProblem& problem);

/// Per-column solves against a shared design; column index attached to any
/// propagated error. An optional per-target column mask restricts which
/// design columns each equation may use (excluded columns get coefficient 0).
struct StackedFit {
    Eigen::MatrixXd xi;  // p x n
    std::vector<SparseCoefficients> per_column;
};
StackedFit fit_all(const Eigen::MatrixXd& design, const Eigen::MatrixXd& targets, double lambda,
                   SolverKind kind = SolverKind::stls, int max_iters = 25,
                   bool normalize_columns = true,
                   const std::vector<std::vector<int>>* allowed_columns = nullptr);

} // namespace ddsindy
