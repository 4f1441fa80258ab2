#pragma once

#include <Eigen/Dense>
#include <functional>
#include <string>
#include <vector>

#include "ddsindy/identify.hpp"

namespace ddsindy {

struct ParamDef {
    std::string name;
    double lower = 0.0, upper = 1.0;
    bool integer = false;  // searched continuously, rounded at read-out
};

/// How a search parameter feeds the model: window endpoints or custom-atom
/// parameter slots, each through an affine map value = scale*p + offset.
struct WindowBinding {
    bool lower = true;  // false: upper endpoint
    std::string param;
    double scale = 1.0, offset = 0.0;
};
struct SlotBinding {
    int slot = 0;
    std::string param;
    double scale = 1.0, offset = 0.0;
};

struct ParamSpace {
    std::vector<ParamDef> params;
    std::vector<WindowBinding> window_bindings;
    std::vector<SlotBinding> slot_bindings;
    /// Candidate windows shorter than this are infeasible (penalized).
    double min_window_length = 1e-6;

    int index_of(const std::string& name) const;
    void validate() const;
};

struct SwarmConfig {
    int particles = 25;
    double inertia = 0.729;
    double cognitive = 1.49445;
    double social = 1.49445;
    double vmax_fraction = 0.25;  // velocity clamp as a fraction of each range
    int max_evals = 2000;
    double stall_tol = 1e-4;
    int stall_iters = 15;
    std::uint64_t seed = 0;

    void validate() const;
};

struct OptTrace {
    struct Row {
        int iter = 0;
        int evals = 0;
        double best = 0.0;
        Eigen::VectorXd rho;
    };
    std::vector<Row> rows;
};

struct PsoResult {
    Eigen::VectorXd rho;
    double value = 0.0;
    OptTrace trace;
    int evals = 0;
};

/// Global-best particle swarm with seeded uniform initialization, velocity
/// update v <- w v + c1 r1 (pbest - x) + c2 r2 (gbest - x), positions clamped
/// to bounds with velocity reflection. Stops at the evaluation budget or
/// after stall_iters consecutive iterations improving by less than
/// stall_tol. Deterministic for a fixed seed.
PsoResult particle_swarm(const std::vector<ParamDef>& params, const SwarmConfig& config,
                         const std::function<double(const Eigen::VectorXd&)>& objective);

/// Everything needed to evaluate the reconstruction error at a parameter
/// vector: the data, the equation kinds, the quadrature/window template and
/// the library template with open slots.
struct ObjectiveContext {
    SampledTrajectory traj;
    std::vector<EquationKind> kinds;
    QuadKind qkind = QuadKind::trapezoid;
    int K = 0;
    double win_a = 0.0, win_b = 0.0;  // defaults where not bound
    LibrarySpec library;              // may contain unresolved slots
    ParamSpace space;
    FitOptions fit;
};

inline constexpr double kInfeasiblePenalty = 1e6;

/// Binds rho into a concrete window + library. Returns false when the bound
/// window is infeasible (the objective then returns the penalty value).
bool bind_parameters(const ObjectiveContext& ctx, const Eigen::VectorXd& rho,
                     bool round_integers, double* win_a, double* win_b, LibrarySpec* spec);

/// eps(rho): combined train+validation reconstruction RMSE of the DD-SINDy
/// fit at the bound parameters; infeasible windows score kInfeasiblePenalty.
double objective(const ObjectiveContext& ctx, const Eigen::VectorXd& rho);

struct OptimizeResult {
    Eigen::VectorXd rho;
    SparseModel model;
    FitReport report;
    OptTrace trace;
    int evals = 0;  // internal dd_sindy calls
};

/// Algorithm 2: PSO over the objective, then one final fit at the optimum
/// (integer parameters rounded at this read-out).
OptimizeResult optimize_and_identify(const ObjectiveContext& ctx, const SwarmConfig& config);

/// Post-processing of the Ricker parameter vector (n, tau, alpha+d1, a):
/// n rounds to the nearest integer, alpha = n/tau, d1 = (alpha+d1) - alpha.
struct RickerParams {
    int n = 0;
    double tau = 0.0, alpha = 0.0, d1 = 0.0, a = 0.0;
    bool negative_d1_warning = false;
};
RickerParams ricker_postprocess(const Eigen::VectorXd& rho);

void write_trace_csv(const std::string& path, const OptTrace& trace,
                     const std::vector<ParamDef>& params);

} // namespace ddsindy
