#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

#include "ddsindy/quadrature.hpp"
#include "ddsindy/trajectory.hpp"

namespace ddsindy {

/// One multiplicative factor of a candidate atom.
///
/// Polynomial kinds carry an integer power; the custom kinds carry a real
/// parameter theta, either a literal value or a slot bound to an external
/// optimization parameter (slot >= 0 means unresolved until binding).
enum class FactorKind {
    delay_power,    // sigma^p
    shifted_state,  // x_j(t+sigma)^p, or x_j(t+lag)^p when lag is fixed
    current_state,  // x_j(t)^p
    exp_sigma,      // exp(theta * sigma)
    exp_neg_state,  // exp(-theta * x_j(t+sigma))
    pow_neg_sigma,  // (-sigma)^theta, theta real > 0
};

struct Factor {
    FactorKind kind;
    int component = 0;  // state index j (0-based) where applicable
    int power = 1;      // polynomial kinds
    double theta = 0.0; // custom kinds
    int slot = -1;      // >= 0: theta comes from an optimization slot
    bool has_fixed_lag = false;
    double fixed_lag = 0.0;  // shifted_state evaluated at a fixed lag (black-box libraries)
};

/// Product of factors; empty factor list is the constant atom 1.
struct Atom {
    std::vector<Factor> factors;

    bool is_constant() const { return factors.empty(); }
    /// Total polynomial degree (sum of integer powers; custom factors count 0).
    int poly_degree() const;
    bool depends_on_sigma() const;
    bool has_shifted_state() const;
    bool has_unresolved_slot() const;
    /// True when every factor is a current_state power (or the atom is 1).
    bool is_instantaneous() const;
    /// Fixed lags referenced by this atom (for black-box libraries).
    std::vector<double> fixed_lags() const;

    double eval(double sigma, const Eigen::VectorXd& x_shift,
                const Eigen::VectorXd& x_current) const;
    /// Evaluation for instantaneous/black-box atoms; lag values are looked up
    /// through the record at time t.
    double eval_instantaneous(const Eigen::VectorXd& x_current, const LinearRecord* record,
                              double t) const;
};

/// Canonical printable name, e.g. `sig^3*exp(4.5*sig)*exp(-0.3142*x1d)*x1d`.
std::string label(const Atom& atom, int precision = 12);
/// Inverse of label(); also accepts the pretty spellings used by
/// render_model (s, x(t+s), x_j(t), ...).
Atom parse_label(const std::string& text);

/// Base symbols for the monomial generator.
struct Symbol {
    enum Kind { sigma, shifted, current } kind;
    int component = 0;
};

/// All monomials of total degree <= d over the given symbols, including the
/// constant 1, in graded lexicographic order.
std::vector<Atom> enumerate_monomials(const std::vector<Symbol>& symbols, int degree);

/// Candidate-atom specification: a distributed block (integrated against the
/// quadrature weights) and an instantaneous block (evaluated once per row).
struct LibrarySpec {
    std::vector<Atom> distributed;
    std::vector<Atom> instantaneous;
    int degree = 0;

    void validate() const;
    bool has_unresolved_slot() const;
};

/// Evaluated design block: matrix restricted to retained rows, column
/// labels, and the retained row indices of the source trajectory.
struct AssembledLibrary {
    Eigen::MatrixXd matrix;
    std::vector<std::string> labels;
    std::vector<int> rows;  // retained trajectory row indices, ascending
};

/// Distributed block: entry(i, a) = sum_k w_k * a(sigma_k, X(t_i+sigma_k), X(t_i)).
/// Rows masked by any node are dropped (mask = intersection over nodes).
AssembledLibrary assemble_distributed(const SampledTrajectory& traj, const QuadratureRule& rule,
                                      const std::vector<Atom>& atoms);
AssembledLibrary assemble_distributed(const LinearRecord& record, const Eigen::VectorXd& times,
                                      const Eigen::MatrixXd& states, const QuadratureRule& rule,
                                      const std::vector<Atom>& atoms);

/// Instantaneous block: entry(i, a) = a(X(t_i)); no quadrature weighting.
/// Atoms with fixed lags read shifted values through the record (rows
/// without coverage are dropped).
AssembledLibrary assemble_instantaneous(const SampledTrajectory& traj,
                                        const std::vector<Atom>& atoms);

/// Horizontal concatenation on the intersection of row masks.
AssembledLibrary concat(const std::vector<AssembledLibrary>& blocks);

} // namespace ddsindy
