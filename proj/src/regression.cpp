#include "ddsindy/regression.hpp"

#include <algorithm>
#include <cmath>

namespace ddsindy {

std::string to_string(SolverKind kind) {
    return kind == SolverKind::stls ? "stls" : "lasso";
}

SolverKind solver_kind_from_string(const std::string& name) {
    if (name == "stls") return SolverKind::stls;
    if (name == "lasso") return SolverKind::lasso;
    throw Error("regression: unknown solver '" + name + "' (expected stls|lasso)");
}

void RegressionProblem::validate() const {
    require(design.rows() == target.size(), "regression: design/target row mismatch");
    require(design.cols() >= 1, "regression: empty design");
    require(lambda >= 0.0, "regression: lambda must be >= 0");
    require(design.allFinite(), "regression: non-finite design entries");
    require(target.allFinite(), "regression: non-finite target entries");
}

namespace {

Eigen::VectorXd column_scales(const Eigen::MatrixXd& design, bool normalize) {
    const Eigen::Index p = design.cols();
    Eigen::VectorXd s = Eigen::VectorXd::Ones(p);
    if (!normalize) return s;
    const double m = static_cast<double>(design.rows());
    for (Eigen::Index j = 0; j < p; ++j) {
        const double rms = std::sqrt(design.col(j).squaredNorm() / m);
        s[j] = (rms > 0.0) ? rms : 1.0;
    }
    return s;
}

// Least squares on the selected columns in normalized space; minimum-norm
// when the submatrix is rank deficient.
Eigen::VectorXd solve_subset(const Eigen::MatrixXd& design, const Eigen::VectorXd& scales,
                             const Eigen::VectorXd& target, const std::vector<int>& cols,
                             bool* rank_deficient) {
    const Eigen::Index k = static_cast<Eigen::Index>(cols.size());
    Eigen::MatrixXd sub(design.rows(), k);
    for (Eigen::Index j = 0; j < k; ++j)
        sub.col(j) = design.col(cols[static_cast<std::size_t>(j)]) /
                     scales[cols[static_cast<std::size_t>(j)]];
    Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> cod;
    // Rank-reveal threshold well above roundoff: redundant libraries produce
    // near-collinear (sometimes exactly constant) columns, and the minimum-
    // norm solution on the detected rank keeps coefficients bounded.
    cod.setThreshold(1e-10);
    cod.compute(sub);
    if (cod.rank() < std::min(sub.rows(), sub.cols())) *rank_deficient = true;
    Eigen::VectorXd beta = cod.solve(target);
    // map back to raw scale
    for (Eigen::Index j = 0; j < k; ++j) beta[j] /= scales[cols[static_cast<std::size_t>(j)]];
    return beta;
}

} // namespace

SparseCoefficients stls(const RegressionProblem& problem) {
    problem.validate();
    const Eigen::Index p = problem.design.cols();
    const Eigen::VectorXd scales = column_scales(problem.design, problem.normalize_columns);

    SparseCoefficients out;
    out.xi = Eigen::VectorXd::Zero(p);

    std::vector<int> support(static_cast<std::size_t>(p));
    for (Eigen::Index j = 0; j < p; ++j) support[static_cast<std::size_t>(j)] = static_cast<int>(j);

    for (int it = 0; it < problem.max_iters; ++it) {
        out.iterations = it + 1;
        if (support.empty()) break;
        bool rank_deficient = false;
        const Eigen::VectorXd beta =
            solve_subset(problem.design, scales, problem.target, support, &rank_deficient);
        if (rank_deficient) out.rank_warning = true;

        std::vector<int> kept;
        kept.reserve(support.size());
        for (std::size_t j = 0; j < support.size(); ++j)
            if (std::abs(beta[static_cast<Eigen::Index>(j)]) >= problem.lambda)
                kept.push_back(support[j]);

        if (kept.size() == support.size()) {
            out.xi.setZero();
            for (std::size_t j = 0; j < support.size(); ++j)
                out.xi[support[j]] = beta[static_cast<Eigen::Index>(j)];
            out.support = support;
            out.converged = true;
            if (support.empty()) out.empty_support_warning = true;
            return out;
        }
        support = std::move(kept);
    }

    // Final solve on whatever support remains (possibly after hitting the
    // iteration cap, or the empty set).
    out.xi.setZero();
    if (!support.empty()) {
        bool rank_deficient = false;
        const Eigen::VectorXd beta =
            solve_subset(problem.design, scales, problem.target, support, &rank_deficient);
        if (rank_deficient) out.rank_warning = true;
        for (std::size_t j = 0; j < support.size(); ++j)
            out.xi[support[j]] = beta[static_cast<Eigen::Index>(j)];
        // drop entries the final solve pushed below threshold, if any
        std::vector<int> kept;
        for (int c : support)
            if (std::abs(out.xi[c]) >= problem.lambda)
                kept.push_back(c);
            else
                out.xi[c] = 0.0;
        support = std::move(kept);
        out.converged = false;
    }
    out.support = support;
    out.empty_support_warning = support.empty();
    return out;
}

SparseCoefficients lasso(const RegressionProblem& problem) {
    problem.validate();
    const Eigen::Index p = problem.design.cols();
    const Eigen::VectorXd scales = column_scales(problem.design, problem.normalize_columns);

    Eigen::MatrixXd X = problem.design;
    for (Eigen::Index j = 0; j < p; ++j) X.col(j) /= scales[j];
    const Eigen::VectorXd& y = problem.target;

    Eigen::VectorXd col_sq(p);
    for (Eigen::Index j = 0; j < p; ++j) col_sq[j] = X.col(j).squaredNorm();

    Eigen::VectorXd beta = Eigen::VectorXd::Zero(p);
    Eigen::VectorXd resid = y;
    const double tol = 1e-8;
    const int cap = std::max(problem.max_iters, 1) * 200;  // sweeps, not single updates

    SparseCoefficients out;
    out.converged = false;
    for (int sweep = 0; sweep < cap; ++sweep) {
        out.iterations = sweep + 1;
        double max_change = 0.0;
        for (Eigen::Index j = 0; j < p; ++j) {
            if (col_sq[j] == 0.0) continue;
            const double old = beta[j];
            const double rho = X.col(j).dot(resid) + col_sq[j] * old;
            const double soft = std::abs(rho) > problem.lambda
                                    ? (rho > 0 ? rho - problem.lambda : rho + problem.lambda)
                                    : 0.0;
            const double next = soft / col_sq[j];
            if (next != old) {
                resid -= (next - old) * X.col(j);
                beta[j] = next;
                max_change = std::max(max_change, std::abs(next - old));
            }
        }
        if (max_change < tol) {
            out.converged = true;
            break;
        }
    }

    out.xi = Eigen::VectorXd::Zero(p);
    for (Eigen::Index j = 0; j < p; ++j) {
        const double raw = beta[j] / scales[j];
        if (raw != 0.0) {
            out.xi[j] = raw;
            out.support.push_back(static_cast<int>(j));
        }
    }
    out.empty_support_warning = out.support.empty();
    return out;
}

SparseCoefficients solve_sparse(SolverKind kind, const RegressionProblem& problem) {
    return kind == SolverKind::stls ? stls(problem) : lasso(problem);
}

StackedFit fit_all(const Eigen::MatrixXd& design, const Eigen::MatrixXd& targets, double lambda,
                   SolverKind kind, int max_iters, bool normalize_columns,
                   const std::vector<std::vector<int>>* allowed_columns) {
    require(design.rows() == targets.rows(), "fit_all: design/target row mismatch");
    const Eigen::Index n = targets.cols();
    const Eigen::Index p = design.cols();
    if (allowed_columns)
        require(static_cast<Eigen::Index>(allowed_columns->size()) == n,
                "fit_all: column-mask count must match target count");

    StackedFit out;
    out.xi = Eigen::MatrixXd::Zero(p, n);
    for (Eigen::Index j = 0; j < n; ++j) {
        try {
            RegressionProblem prob;
            prob.lambda = lambda;
            prob.max_iters = max_iters;
            prob.normalize_columns = normalize_columns;
            prob.target = targets.col(j);
            if (allowed_columns) {
                const auto& cols = (*allowed_columns)[static_cast<std::size_t>(j)];
                prob.design.resize(design.rows(), static_cast<Eigen::Index>(cols.size()));
                for (std::size_t c = 0; c < cols.size(); ++c)
                    prob.design.col(static_cast<Eigen::Index>(c)) = design.col(cols[c]);
                SparseCoefficients sc = solve_sparse(kind, prob);
                SparseCoefficients full = sc;
                full.xi = Eigen::VectorXd::Zero(p);
                full.support.clear();
                for (std::size_t c = 0; c < cols.size(); ++c) {
                    full.xi[cols[c]] = sc.xi[static_cast<Eigen::Index>(c)];
                    if (sc.xi[static_cast<Eigen::Index>(c)] != 0.0) full.support.push_back(cols[c]);
                }
                std::sort(full.support.begin(), full.support.end());
                out.xi.col(j) = full.xi;
                out.per_column.push_back(std::move(full));
            } else {
                prob.design = design;
                SparseCoefficients sc = solve_sparse(kind, prob);
                out.xi.col(j) = sc.xi;
                out.per_column.push_back(std::move(sc));
            }
        } catch (const Error& e) {
            throw Error("fit_all: component " + std::to_string(j + 1) + ": " + e.what());
        }
    }
    return out;
}

} // namespace ddsindy
