#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

#include "ddsindy/library.hpp"
#include "ddsindy/quadrature.hpp"
#include "ddsindy/regression.hpp"
#include "ddsindy/trajectory.hpp"
#include "ddsindy/types.hpp"

namespace ddsindy {

struct FitOptions {
    double train_fraction = 0.8;
    SolverKind solver = SolverKind::stls;
    double lambda = 1e-2;
    int max_iters = 25;
    bool normalize_columns = true;
    /// RE equations never see columns containing their own current state
    /// (such columns reproduce the regression target tautologically).
    bool exclude_self_columns = true;
};

/// Identified sparse model: concrete candidate atoms, the delay window and
/// quadrature used at fit time, and the stacked coefficient matrix.
struct SparseModel {
    LibrarySpec spec;
    double win_a = 0.0, win_b = 0.0;
    QuadKind qkind = QuadKind::trapezoid;
    int K = 0;
    std::vector<EquationKind> kinds;
    Eigen::MatrixXd xi;               // p x n, rows ordered distributed then instantaneous
    std::vector<std::string> labels;  // p
    int distributed_cols = 0;
    bool black_box = false;           // lag-library model with no kernel interpretation

    Eigen::Index components() const { return xi.cols(); }
    void validate() const;
};

struct FitReport {
    std::vector<int> rows;  // retained trajectory rows
    int train_count = 0;    // how many retained rows fall in the training prefix
    double rmse_train = 0.0, rmse_val = 0.0, rmse_combined = 0.0;
    Eigen::MatrixXd residuals;  // retained rows x n
    std::string deriv_source;   // "exact" | "measured" | "estimated" | "states"
    bool rank_warning = false;
    bool empty_support = false;
};

/// Regression targets for every trajectory row (states for RE components,
/// derivatives for DIDE components, with the usual derivative preference).
Eigen::MatrixXd full_targets(const SampledTrajectory& traj,
                             const std::vector<EquationKind>& kinds);

struct FitResult {
    SparseModel model;
    FitReport report;
};

/// DD-SINDy (Algorithm 1): quadrature setup, shifted-data interpolation,
/// two-block weighted library, per-component sparse regression.
FitResult dd_sindy(const SampledTrajectory& traj, const std::vector<EquationKind>& kinds,
                   double win_a, double win_b, QuadKind qkind, int K, const LibrarySpec& spec,
                   const FitOptions& opts);

/// Black-box baseline: polynomial library over current and lagged state
/// values, no quadrature weighting and no sigma atoms. Usable only for
/// prediction; carries no kernel interpretation.
FitResult bb_sindy(const SampledTrajectory& traj, const Eigen::VectorXd& lag_nodes, int degree,
                   const FitOptions& opts);

/// Integral-form baseline for ODEs: regresses x_j(t_i) - x_j(0) against
/// cumulative left-rectangle sums of the library columns. Requires a uniform
/// grid (non-uniform inputs are resampled by linear interpolation).
FitResult integral_sindy_ode(const SampledTrajectory& traj, int degree, const FitOptions& opts);

/// Root-mean-square residuals of the model on a trajectory split into a
/// training prefix and validation remainder. The combined value aggregates
/// both row sets (row-count weighted).
struct ReconstructionError {
    double train = 0.0, val = 0.0, combined = 0.0;
};
ReconstructionError reconstruction_error(const SparseModel& model, const SampledTrajectory& traj,
                                         double train_fraction);

/// Printable equations with the recovered kernel under an explicit integral
/// sign; zero terms omitted. parse_rendered() inverts it (to printing
/// precision).
std::string render_model(const SparseModel& model, int precision = 6);
struct RenderedEquation {
    EquationKind kind;
    std::vector<std::pair<std::string, double>> distributed;    // canonical label -> coeff
    std::vector<std::pair<std::string, double>> instantaneous;  // canonical label -> coeff
};
std::vector<RenderedEquation> parse_rendered(const std::string& text);

/// Pointwise values of the recovered kernel g(sigma, x) on a sigma grid.
/// x_shift supplies the shifted-state entries, x_current the current-state
/// entries of the atoms.
Eigen::MatrixXd evaluate_kernel(const SparseModel& model, const Eigen::VectorXd& sigmas,
                                const Eigen::VectorXd& x_shift, const Eigen::VectorXd& x_current);

/// Lossless model file (structured text; see README for the grammar).
void write_model_file(const std::string& path, const SparseModel& model);
SparseModel read_model_file(const std::string& path);

/// Re-simulate an identified (non-black-box) model from a history segment,
/// using the model's own quadrature discretization.
SampledTrajectory simulate_identified(const SparseModel& model, const HistorySegment& history,
                                      double t0, double T, double h);

/// Design matrix + targets shared by the fitting and evaluation paths.
struct DesignBundle {
    AssembledLibrary lib;
    Eigen::MatrixXd targets;   // retained rows x n
    std::string deriv_source;
};
DesignBundle build_design(const SampledTrajectory& traj, const std::vector<EquationKind>& kinds,
                          const LibrarySpec& spec, double win_a, double win_b, QuadKind qkind,
                          int K);

} // namespace ddsindy
