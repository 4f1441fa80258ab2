#pragma once

#include <Eigen/Dense>
#include <functional>
#include <vector>

#include "ddsindy/quadrature.hpp"
#include "ddsindy/trajectory.hpp"
#include "ddsindy/types.hpp"

namespace ddsindy {

/// Forward model: per-component instantaneous part plus additive distributed
/// terms, each an integral of a kernel g(sigma, x(t+sigma), x(t)) over a
/// strictly non-positive window.
struct ModelDef {
    Eigen::Index n = 1;
    std::vector<EquationKind> kinds;

    /// Instantaneous right-hand side f(x(t)); empty means zero.
    std::function<Eigen::VectorXd(const Eigen::VectorXd&)> f_inst;

    struct Term {
        double a = 0.0, b = 0.0;  // window, a < b <= 0
        /// Kernel density, one entry per component.
        std::function<Eigen::VectorXd(double sigma, const Eigen::VectorXd& x_shift,
                                      const Eigen::VectorXd& x_current)>
            kernel;
    };
    std::vector<Term> terms;

    HistorySegment history;  // must cover [t0 - tau_max, t0]
    double t0 = 0.0;

    void validate() const;
};

/// Gamma (Erlang) delay density alpha^n (-sigma)^(n-1) e^(alpha sigma) / (n-1)!
/// on sigma <= 0, with mean n/alpha.
double gamma_density(int n, double alpha, double sigma);

/// Explicit fixed-step march for renewal equations with strictly lagged
/// windows (b <= -h): x(t_i) is a quadrature sum (K_sim-node trapezoid per
/// window) over the piecewise-linear record of earlier values.
SampledTrajectory solve_re(const ModelDef& model, double T, double h, int K_sim);

/// Method of steps for DIDEs: each integral is replaced by a K_sim-node
/// uniform rectangles sum (turning the DIDE into a multi-delay DDE), then
/// integrated with classical RK4. Delayed states are read from a
/// piecewise-cubic Hermite interpolant of the computed solution
/// (piecewise-linear over the history). The evaluated right-hand side is
/// stored as exact derivative columns.
SampledTrajectory solve_dide(const ModelDef& model, double T, double h, int K_sim);

/// Mixed RE/DIDE systems: per step the RE components are evaluated
/// explicitly from past values (also at RK4 stage times), the DIDE
/// components advance by RK4. Quadrature: K_sim-node trapezoid. Delayed
/// lookups go through the piecewise-linear record.
SampledTrajectory solve_coupled(const ModelDef& model, double T, double h, int K_sim);

} // namespace ddsindy
