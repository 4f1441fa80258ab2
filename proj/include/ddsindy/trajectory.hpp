#pragma once

#include <Eigen/Dense>
#include <optional>
#include <string>
#include <vector>

#include "ddsindy/error.hpp"

namespace ddsindy {

/// Pre-initial data segment: values of the state on times <= t0.
struct HistorySegment {
    Eigen::VectorXd times;   // strictly increasing, all <= trajectory t0
    Eigen::MatrixXd values;  // times.size() x n
};

/// Time-series record: a time grid, state samples, optional derivative
/// samples and an optional history segment for pre-t0 lookups.
struct SampledTrajectory {
    Eigen::VectorXd times;                  // m, strictly increasing
    Eigen::MatrixXd states;                 // m x n
    std::optional<Eigen::MatrixXd> derivs;  // m x n when present
    std::optional<HistorySegment> history;
    /// Set by the forward solvers when the derivative columns are the exact
    /// evaluated right-hand side (not persisted through CSV files).
    bool derivs_exact = false;

    Eigen::Index rows() const { return times.size(); }
    Eigen::Index cols() const { return states.cols(); }

    /// Throws Error on any violated invariant (monotone times, shapes,
    /// history ordering).
    void validate() const;
};

struct SplitSpec {
    double train_fraction = 0.8;  // in (0, 1]; train = contiguous prefix
};

/// Piecewise-linear interpolant over history + sample record. Queries below
/// the first history time (or below t0 when there is no history) are out of
/// coverage. Used both for library assembly and inside the forward solvers,
/// so the two sides see bit-identical shifted values.
class LinearRecord {
public:
    LinearRecord(std::optional<HistorySegment> history, Eigen::Index n);

    /// Build directly from a trajectory's history + samples.
    explicit LinearRecord(const SampledTrajectory& traj);

    void append(double t, const Eigen::VectorXd& x);

    double min_time() const;
    double max_time() const;
    bool covers(double t) const { return t >= min_time() && t <= max_time(); }

    /// Interpolated value; throws Error when t is outside coverage.
    Eigen::VectorXd at(double t) const;
    double at(double t, Eigen::Index component) const;

    Eigen::Index components() const { return n_; }
    Eigen::Index sample_count() const { return static_cast<Eigen::Index>(ts_.size()); }

private:
    Eigen::Index n_;
    std::vector<double> hist_t_;
    std::vector<Eigen::VectorXd> hist_x_;
    std::vector<double> ts_;
    std::vector<Eigen::VectorXd> xs_;
};

/// Result of a shifted lookup: full-size value matrix plus a per-row
/// validity mask. Rows whose shifted time precedes all available data are
/// invalid (zero-filled), never extrapolated.
struct ShiftedValues {
    Eigen::MatrixXd values;   // m x n
    std::vector<bool> valid;  // m
};

/// CSV dataset I/O. Schema: header `t,x1,...,xn[,dx1,...,dxn]`, `#` comment
/// lines, history rows precede a `# --- t0 ---` marker line.
SampledTrajectory load_trajectory(const std::string& path);
void save_trajectory(const std::string& path, const SampledTrajectory& traj);

/// Piecewise-linear interpolation of the state at times[i] + sigma for each
/// row i, using the history segment where needed. sigma <= 0.
ShiftedValues shifted_values(const SampledTrajectory& traj, double sigma);
ShiftedValues shifted_values(const LinearRecord& record, const Eigen::VectorXd& times,
                             double sigma);

/// Second-order finite differences on a (possibly non-uniform) grid:
/// three-point central formulas inside, one-sided at the two endpoints.
Eigen::MatrixXd estimate_derivatives(const SampledTrajectory& traj);
Eigen::MatrixXd estimate_derivatives(const Eigen::VectorXd& times, const Eigen::MatrixXd& states);

/// Local least-squares polynomial (Savitzky-Golay style) smoothing of the
/// states and their first derivative on a possibly non-uniform grid.
/// half_width is the number of neighbours taken on each side (shrunk near
/// the edges), degree the local polynomial degree.
struct SmoothedSignal {
    Eigen::MatrixXd states;
    Eigen::MatrixXd derivs;
};
SmoothedSignal smooth_local_poly(const Eigen::VectorXd& times, const Eigen::MatrixXd& states,
                                 int half_width, int degree);

/// Additive Gaussian noise with per-component std = level * RMS(column),
/// using a seeded generator. Derivative columns, when present, are
/// re-estimated from the noisy states rather than perturbed independently.
SampledTrajectory add_noise(const SampledTrajectory& traj, double level, std::uint64_t seed);

/// Prefix split: train = first ceil(fraction*m) rows, val = rest. Both keep
/// the original history segment. Throws when either subset is empty.
std::pair<SampledTrajectory, SampledTrajectory> split(const SampledTrajectory& traj,
                                                      const SplitSpec& spec);

} // namespace ddsindy
