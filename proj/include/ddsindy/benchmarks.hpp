#pragma once

#include <string>
#include <vector>

#include "ddsindy/library.hpp"
#include "ddsindy/optimize.hpp"
#include "ddsindy/simulate.hpp"
#include "ddsindy/types.hpp"

namespace ddsindy {

/// Per-equation ground-truth coefficients, keyed by canonical atom label.
/// Atoms absent from the map have true coefficient 0.
struct EquationTruth {
    std::vector<std::pair<std::string, double>> coeffs;
    double lookup(const std::string& lbl) const;
};

/// A fully parameterized benchmark model together with its sampling recipe
/// and default identification settings.
struct BenchmarkRecipe {
    std::string name;
    ModelDef model;
    std::vector<EquationKind> kinds;

    // sampling recipe
    int m = 100;
    double t_end = 20.0;
    double train_fraction = 0.8;
    bool nonuniform = false;
    double jitter = 0.0;
    std::uint64_t grid_seed = 0;

    // internal accurate solve used to produce the trajectory
    double h_solve = 0.02;
    int K_solve = 50;

    // reference discretization embedded in the emitted targets
    QuadKind gen_kind = QuadKind::trapezoid;
    int gen_K = 0;

    // default identification settings
    QuadKind fit_kind = QuadKind::trapezoid;
    int fit_K = 0;
    double win_a = 0.0, win_b = 0.0;
    double lambda = 1e-2;
    LibrarySpec library;
    std::vector<EquationTruth> truth;

    // black-box baseline defaults (ricker comparison)
    int bb_degree = 1;

    // external optimization setup, when the benchmark uses one
    bool has_optimization = false;
    LibrarySpec library_template;  // atoms with open slots
    ParamSpace space;
    SwarmConfig swarm;
    Eigen::VectorXd truth_rho;
    bool ricker_post = false;
};

std::vector<std::string> benchmark_names();

/// Throws with the list of valid names on an unknown benchmark.
BenchmarkRecipe benchmark(const std::string& name);

struct GenerateOptions {
    double noise_level = 0.0;
    std::uint64_t noise_seed = 0;
    /// When > 0, derivative columns of a noisy dataset are re-estimated by a
    /// local polynomial filter of this half-width instead of plain finite
    /// differences (noise-robust differentiation).
    int smooth_half_width = 0;
    int smooth_degree = 3;
    /// Also replace the states used downstream by their smoothed version.
    bool smooth_states = false;
};

/// Synthesizes the benchmark dataset. The emitted targets are evaluated with
/// the recipe's reference rule on the emitted sample record itself, so the
/// generating model is exactly representable in the identification library
/// at matched discretization (closure property).
SampledTrajectory generate_dataset(const BenchmarkRecipe& recipe,
                                   const GenerateOptions& options = {});

} // namespace ddsindy
