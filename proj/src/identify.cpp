#include "ddsindy/identify.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>

#include "ddsindy/simulate.hpp"

namespace ddsindy {

void SparseModel::validate() const {
    spec.validate();
    const Eigen::Index p =
        static_cast<Eigen::Index>(spec.distributed.size() + spec.instantaneous.size());
    require(xi.rows() == p, "model: coefficient rows must match atom count");
    require(xi.cols() == static_cast<Eigen::Index>(kinds.size()),
            "model: coefficient columns must match equation kinds");
    require(static_cast<int>(spec.distributed.size()) == distributed_cols,
            "model: distributed column count mismatch");
    if (!spec.distributed.empty()) require(win_a < win_b, "model: invalid window");
    require(win_b <= 0.0 || spec.distributed.empty(), "model: window must satisfy b <= 0");
}

namespace {

std::string fmt_g(double v, int precision) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.*g", precision, v);
    return buf;
}

bool atom_uses_current(const Atom& atom, Eigen::Index j) {
    for (const auto& f : atom.factors)
        if (f.kind == FactorKind::current_state && f.component == static_cast<int>(j)) return true;
    return false;
}

std::vector<Atom> all_atoms(const LibrarySpec& spec) {
    std::vector<Atom> atoms = spec.distributed;
    atoms.insert(atoms.end(), spec.instantaneous.begin(), spec.instantaneous.end());
    return atoms;
}

// Column subsets per equation: RE components drop every column whose atom
// contains their own current state (those columns reproduce the target).
std::vector<std::vector<int>> column_masks(const LibrarySpec& spec,
                                           const std::vector<EquationKind>& kinds,
                                           bool exclude_self) {
    const auto atoms = all_atoms(spec);
    std::vector<std::vector<int>> masks(kinds.size());
    for (std::size_t j = 0; j < kinds.size(); ++j) {
        for (std::size_t c = 0; c < atoms.size(); ++c) {
            if (exclude_self && kinds[j] == EquationKind::RE &&
                atom_uses_current(atoms[c], static_cast<Eigen::Index>(j)))
                continue;
            masks[j].push_back(static_cast<int>(c));
        }
    }
    return masks;
}

struct SplitCounts {
    int train = 0, val = 0;
};

SplitCounts count_split(const std::vector<int>& rows, Eigen::Index m, double fraction) {
    const int threshold = static_cast<int>(std::ceil(fraction * static_cast<double>(m)));
    SplitCounts c;
    for (int r : rows)
        (r < threshold) ? ++c.train : ++c.val;
    return c;
}

struct RmseTriple {
    double train, val, combined;
};

RmseTriple residual_rmse(const Eigen::MatrixXd& resid, const std::vector<int>& rows,
                         Eigen::Index m, double fraction) {
    const int threshold = static_cast<int>(std::ceil(fraction * static_cast<double>(m)));
    double sse_t = 0.0, sse_v = 0.0;
    Eigen::Index n_t = 0, n_v = 0;
    for (std::size_t r = 0; r < rows.size(); ++r) {
        const double s = resid.row(static_cast<Eigen::Index>(r)).squaredNorm();
        if (rows[r] < threshold) {
            sse_t += s;
            ++n_t;
        } else {
            sse_v += s;
            ++n_v;
        }
    }
    const Eigen::Index ncols = resid.cols();
    RmseTriple out{0.0, 0.0, 0.0};
    if (n_t > 0) out.train = std::sqrt(sse_t / static_cast<double>(n_t * ncols));
    if (n_v > 0) out.val = std::sqrt(sse_v / static_cast<double>(n_v * ncols));
    if (n_t + n_v > 0)
        out.combined = std::sqrt((sse_t + sse_v) / static_cast<double>((n_t + n_v) * ncols));
    return out;
}

} // namespace

DesignBundle build_design(const SampledTrajectory& traj, const std::vector<EquationKind>& kinds,
                          const LibrarySpec& spec, double win_a, double win_b, QuadKind qkind,
                          int K) {
    traj.validate();
    spec.validate();
    require(static_cast<Eigen::Index>(kinds.size()) == traj.cols(),
            "identify: one equation kind per state component required");
    require(!spec.has_unresolved_slot(), "identify: library has unbound parameter slots");

    std::vector<AssembledLibrary> blocks;
    if (!spec.distributed.empty()) {
        require(win_a < win_b, "identify: invalid window (need a < b)");
        const QuadratureRule rule = make_rule(qkind, K, win_a, win_b);
        blocks.push_back(assemble_distributed(traj, rule, spec.distributed));
    }
    if (!spec.instantaneous.empty())
        blocks.push_back(assemble_instantaneous(traj, spec.instantaneous));
    require(!blocks.empty(), "identify: empty library");

    DesignBundle out;
    out.lib = concat(blocks);

    bool needs_derivs = false;
    for (auto k : kinds)
        if (k == EquationKind::DIDE) needs_derivs = true;

    Eigen::MatrixXd derivs;
    if (needs_derivs) {
        if (traj.derivs) {
            derivs = *traj.derivs;
            out.deriv_source = traj.derivs_exact ? "exact" : "measured";
        } else {
            derivs = estimate_derivatives(traj);
            out.deriv_source = "estimated";
        }
    } else {
        out.deriv_source = "states";
    }

    const Eigen::Index rows = static_cast<Eigen::Index>(out.lib.rows.size());
    out.targets.resize(rows, traj.cols());
    for (Eigen::Index r = 0; r < rows; ++r) {
        const int i = out.lib.rows[static_cast<std::size_t>(r)];
        for (Eigen::Index j = 0; j < traj.cols(); ++j)
            out.targets(r, j) = (kinds[static_cast<std::size_t>(j)] == EquationKind::RE)
                                    ? traj.states(i, j)
                                    : derivs(i, j);
    }
    return out;
}

FitResult dd_sindy(const SampledTrajectory& traj, const std::vector<EquationKind>& kinds,
                   double win_a, double win_b, QuadKind qkind, int K, const LibrarySpec& spec,
                   const FitOptions& opts) {
    DesignBundle bundle = build_design(traj, kinds, spec, win_a, win_b, qkind, K);

    // Fit on the training prefix of the retained rows.
    const int threshold =
        static_cast<int>(std::ceil(opts.train_fraction * static_cast<double>(traj.rows())));
    std::vector<Eigen::Index> train_rows;
    for (std::size_t r = 0; r < bundle.lib.rows.size(); ++r)
        if (bundle.lib.rows[r] < threshold) train_rows.push_back(static_cast<Eigen::Index>(r));
    require(!train_rows.empty(), "identify: no training rows remain after masking");

    Eigen::MatrixXd design_t(static_cast<Eigen::Index>(train_rows.size()), bundle.lib.matrix.cols());
    Eigen::MatrixXd targets_t(static_cast<Eigen::Index>(train_rows.size()), bundle.targets.cols());
    for (std::size_t r = 0; r < train_rows.size(); ++r) {
        design_t.row(static_cast<Eigen::Index>(r)) = bundle.lib.matrix.row(train_rows[r]);
        targets_t.row(static_cast<Eigen::Index>(r)) = bundle.targets.row(train_rows[r]);
    }

    const auto masks = column_masks(spec, kinds, opts.exclude_self_columns);
    const StackedFit fit = fit_all(design_t, targets_t, opts.lambda, opts.solver, opts.max_iters,
                                   opts.normalize_columns, &masks);

    FitResult out;
    out.model.spec = spec;
    out.model.win_a = win_a;
    out.model.win_b = win_b;
    out.model.qkind = qkind;
    out.model.K = K;
    out.model.kinds = kinds;
    out.model.xi = fit.xi;
    out.model.labels = bundle.lib.labels;
    out.model.distributed_cols = static_cast<int>(spec.distributed.size());

    out.report.rows = bundle.lib.rows;
    const auto counts = count_split(bundle.lib.rows, traj.rows(), opts.train_fraction);
    out.report.train_count = counts.train;
    out.report.deriv_source = bundle.deriv_source;
    for (const auto& pc : fit.per_column) {
        out.report.rank_warning = out.report.rank_warning || pc.rank_warning;
        out.report.empty_support = out.report.empty_support || pc.empty_support_warning;
    }
    const Eigen::MatrixXd resid = bundle.targets - bundle.lib.matrix * fit.xi;
    const auto rmse = residual_rmse(resid, bundle.lib.rows, traj.rows(), opts.train_fraction);
    out.report.residuals = resid;
    out.report.rmse_train = rmse.train;
    out.report.rmse_val = rmse.val;
    out.report.rmse_combined = rmse.combined;
    return out;
}

Eigen::MatrixXd full_targets(const SampledTrajectory& traj,
                             const std::vector<EquationKind>& kinds) {
    traj.validate();
    require(static_cast<Eigen::Index>(kinds.size()) == traj.cols(),
            "identify: one equation kind per state component required");
    bool needs_derivs = false;
    for (auto k : kinds)
        if (k == EquationKind::DIDE) needs_derivs = true;
    Eigen::MatrixXd derivs;
    if (needs_derivs) derivs = traj.derivs ? *traj.derivs : estimate_derivatives(traj);
    Eigen::MatrixXd out(traj.rows(), traj.cols());
    for (Eigen::Index i = 0; i < traj.rows(); ++i)
        for (Eigen::Index j = 0; j < traj.cols(); ++j)
            out(i, j) = (kinds[static_cast<std::size_t>(j)] == EquationKind::RE)
                            ? traj.states(i, j)
                            : derivs(i, j);
    return out;
}

namespace {

void enumerate_factor_products(const std::vector<Factor>& bases, std::size_t idx, int remaining,
                               std::vector<int>& expo, std::vector<Atom>& out) {
    if (idx == bases.size()) {
        Atom a;
        for (std::size_t i = 0; i < bases.size(); ++i) {
            if (expo[i] == 0) continue;
            Factor f = bases[i];
            f.power = expo[i];
            a.factors.push_back(f);
        }
        out.push_back(std::move(a));
        return;
    }
    for (int p = remaining; p >= 0; --p) {
        expo[idx] = p;
        enumerate_factor_products(bases, idx + 1, remaining - p, expo, out);
    }
    expo[idx] = 0;
}

} // namespace

FitResult bb_sindy(const SampledTrajectory& traj, const Eigen::VectorXd& lag_nodes, int degree,
                   const FitOptions& opts) {
    traj.validate();
    require(lag_nodes.size() >= 1, "bb_sindy: need at least one lag node");
    require(degree >= 1, "bb_sindy: degree must be >= 1");
    for (Eigen::Index k = 0; k < lag_nodes.size(); ++k)
        require(lag_nodes[k] <= 0.0, "bb_sindy: lags must be <= 0");

    const Eigen::Index n = traj.cols();
    std::vector<Factor> bases;
    for (Eigen::Index j = 0; j < n; ++j) {
        Factor f{};
        f.kind = FactorKind::current_state;
        f.component = static_cast<int>(j);
        bases.push_back(f);
    }
    for (Eigen::Index k = 0; k < lag_nodes.size(); ++k)
        for (Eigen::Index j = 0; j < n; ++j) {
            Factor f{};
            f.kind = FactorKind::shifted_state;
            f.component = static_cast<int>(j);
            f.has_fixed_lag = true;
            f.fixed_lag = lag_nodes[k];
            bases.push_back(f);
        }

    LibrarySpec spec;
    spec.degree = degree;
    for (int g = 0; g <= degree; ++g) {
        std::vector<Atom> atoms;
        std::vector<int> expo(bases.size(), 0);
        enumerate_factor_products(bases, 0, g, expo, atoms);
        for (auto& a : atoms)
            if (a.poly_degree() == g) spec.instantaneous.push_back(std::move(a));
    }

    std::vector<EquationKind> kinds(static_cast<std::size_t>(n), EquationKind::DIDE);
    FitResult out = dd_sindy(traj, kinds, 0.0, 0.0, QuadKind::rectangles, 0, spec, opts);
    out.model.black_box = true;
    return out;
}

FitResult integral_sindy_ode(const SampledTrajectory& traj, int degree, const FitOptions& opts) {
    traj.validate();
    const Eigen::Index m = traj.rows();
    require(m >= 2, "integral_sindy_ode: need at least two samples");

    // Uniform grid required; resample by linear interpolation otherwise.
    Eigen::VectorXd times = traj.times;
    Eigen::MatrixXd states = traj.states;
    const double h0 = (times[m - 1] - times[0]) / static_cast<double>(m - 1);
    bool uniform = true;
    for (Eigen::Index i = 1; i < m; ++i)
        if (std::abs(times[i] - times[i - 1] - h0) > 1e-9 * std::max(1.0, std::abs(h0)))
            uniform = false;
    if (!uniform) {
        LinearRecord rec(traj);
        for (Eigen::Index i = 0; i < m; ++i) {
            times[i] = traj.times[0] + h0 * static_cast<double>(i);
            states.row(i) = rec.at(std::min(times[i], traj.times[m - 1])).transpose();
        }
    }

    std::vector<Symbol> symbols;
    for (Eigen::Index j = 0; j < traj.cols(); ++j)
        symbols.push_back(Symbol{Symbol::current, static_cast<int>(j)});
    LibrarySpec spec;
    spec.degree = degree;
    spec.instantaneous = enumerate_monomials(symbols, degree);

    SampledTrajectory uni;
    uni.times = times;
    uni.states = states;
    const AssembledLibrary theta = assemble_instantaneous(uni, spec.instantaneous);
    const Eigen::Index p = theta.matrix.cols();

    // Cumulative left-rectangle sums; row i regresses x(t_i) - x(0).
    Eigen::MatrixXd design(m - 1, p);
    Eigen::MatrixXd targets(m - 1, traj.cols());
    Eigen::RowVectorXd acc = Eigen::RowVectorXd::Zero(p);
    for (Eigen::Index i = 1; i < m; ++i) {
        acc += h0 * theta.matrix.row(i - 1);
        design.row(i - 1) = acc;
        targets.row(i - 1) = states.row(i) - states.row(0);
    }

    const int threshold =
        static_cast<int>(std::ceil(opts.train_fraction * static_cast<double>(m)));
    const Eigen::Index train_rows = std::min<Eigen::Index>(m - 1, std::max(1, threshold - 1));
    const StackedFit fit =
        fit_all(design.topRows(train_rows), targets.topRows(train_rows), opts.lambda, opts.solver,
                opts.max_iters, opts.normalize_columns, nullptr);

    FitResult out;
    out.model.spec = spec;
    out.model.kinds.assign(static_cast<std::size_t>(traj.cols()), EquationKind::DIDE);
    out.model.xi = fit.xi;
    out.model.labels = theta.labels;
    out.model.distributed_cols = 0;
    out.report.deriv_source = "states";
    for (Eigen::Index i = 1; i < m; ++i) out.report.rows.push_back(static_cast<int>(i));
    out.report.train_count = static_cast<int>(train_rows);
    const Eigen::MatrixXd resid = targets - design * fit.xi;
    const auto rmse = residual_rmse(resid, out.report.rows, m, opts.train_fraction);
    out.report.rmse_train = rmse.train;
    out.report.rmse_val = rmse.val;
    out.report.rmse_combined = rmse.combined;
    for (const auto& pc : fit.per_column) {
        out.report.rank_warning = out.report.rank_warning || pc.rank_warning;
        out.report.empty_support = out.report.empty_support || pc.empty_support_warning;
    }
    return out;
}

ReconstructionError reconstruction_error(const SparseModel& model, const SampledTrajectory& traj,
                                         double train_fraction) {
    model.validate();
    DesignBundle bundle = build_design(traj, model.kinds, model.spec, model.win_a, model.win_b,
                                       model.qkind, model.K);
    const Eigen::MatrixXd resid = bundle.targets - bundle.lib.matrix * model.xi;
    const auto rmse = residual_rmse(resid, bundle.lib.rows, traj.rows(), train_fraction);
    return ReconstructionError{rmse.train, rmse.val, rmse.combined};
}

// ---------------------------------------------------------------------------
// Rendering

namespace {

std::string pretty_factor(const Factor& f, Eigen::Index n, int precision) {
    const std::string comp =
        (n == 1) ? "x" : "x" + std::to_string(f.component + 1);
    switch (f.kind) {
        case FactorKind::delay_power:
            return f.power == 1 ? "s" : "s^" + std::to_string(f.power);
        case FactorKind::pow_neg_sigma: return "(-s)^" + fmt_g(f.theta, precision);
        case FactorKind::exp_sigma: return "exp(" + fmt_g(f.theta, precision) + "*s)";
        case FactorKind::shifted_state: {
            std::string base;
            if (f.has_fixed_lag)
                base = "x" + std::to_string(f.component + 1) + "[" +
                       fmt_g(f.fixed_lag, precision) + "]";
            else
                base = comp + "(t+s)";
            return f.power == 1 ? base : base + "^" + std::to_string(f.power);
        }
        case FactorKind::exp_neg_state:
            return "exp(-" + fmt_g(f.theta, precision) + "*" + comp + "(t+s))";
        case FactorKind::current_state: {
            const std::string base = comp + "(t)";
            return f.power == 1 ? base : base + "^" + std::to_string(f.power);
        }
    }
    return "?";
}

std::string pretty_atom(const Atom& atom, Eigen::Index n, int precision) {
    if (atom.factors.empty()) return "1";
    std::string out;
    for (std::size_t i = 0; i < atom.factors.size(); ++i) {
        if (i) out += "*";
        out += pretty_factor(atom.factors[i], n, precision);
    }
    return out;
}

void append_terms(std::string& line, bool& first,
                  const std::vector<std::pair<std::string, double>>& terms, int precision) {
    for (const auto& [name, coeff] : terms) {
        if (first) {
            line += (coeff < 0 ? "-" : "") + fmt_g(std::abs(coeff), precision) + "·" + name;
            first = false;
        } else {
            line += (coeff < 0 ? " - " : " + ") + fmt_g(std::abs(coeff), precision) + "·" + name;
        }
    }
}

} // namespace

std::string render_model(const SparseModel& model, int precision) {
    model.validate();
    const Eigen::Index n = model.components();
    std::ostringstream out;
    for (Eigen::Index j = 0; j < n; ++j) {
        const bool dide = model.kinds[static_cast<std::size_t>(j)] == EquationKind::DIDE;
        const std::string name = (n == 1) ? "x" : "x" + std::to_string(j + 1);
        std::string line = name + (dide ? "'(t) = " : "(t) = ");

        std::vector<std::pair<std::string, double>> inst, dist;
        for (int c = 0; c < model.distributed_cols; ++c) {
            const double v = model.xi(c, j);
            if (v != 0.0)
                dist.emplace_back(pretty_atom(model.spec.distributed[static_cast<std::size_t>(c)],
                                              n, precision),
                                  v);
        }
        for (std::size_t c = 0; c < model.spec.instantaneous.size(); ++c) {
            const double v = model.xi(model.distributed_cols + static_cast<Eigen::Index>(c), j);
            if (v != 0.0)
                inst.emplace_back(pretty_atom(model.spec.instantaneous[c], n, precision), v);
        }

        if (inst.empty() && dist.empty()) {
            out << line << "0\n";
            continue;
        }
        bool first = true;
        append_terms(line, first, inst, precision);
        if (!dist.empty()) {
            if (!first) line += " + ";
            line += "∫_{" + fmt_g(model.win_a, precision) + "}^{" +
                    fmt_g(model.win_b, precision) + "} [ ";
            bool dfirst = true;
            append_terms(line, dfirst, dist, precision);
            line += " ] ds";
        }
        out << line << "\n";
    }
    return out.str();
}

namespace {

std::vector<std::pair<std::string, double>> parse_term_sum(const std::string& text) {
    std::vector<std::pair<std::string, double>> out;
    // split on top-level " + " / " - "
    std::vector<std::pair<std::string, int>> pieces;  // text, sign
    int depth = 0;
    std::string cur;
    int sign = +1;
    for (std::size_t i = 0; i < text.size(); ++i) {
        const char c = text[i];
        if (c == '(' || c == '[' || c == '{') ++depth;
        if (c == ')' || c == ']' || c == '}') --depth;
        if (depth == 0 && i + 2 < text.size() && c == ' ' &&
            (text[i + 1] == '+' || text[i + 1] == '-') && text[i + 2] == ' ') {
            pieces.emplace_back(cur, sign);
            sign = (text[i + 1] == '+') ? +1 : -1;
            cur.clear();
            i += 2;
            continue;
        }
        cur += c;
    }
    pieces.emplace_back(cur, sign);

    for (auto& [piece, sg] : pieces) {
        std::string t = piece;
        const auto b = t.find_first_not_of(" \t");
        const auto e = t.find_last_not_of(" \t");
        require(b != std::string::npos, "render parse: empty term");
        t = t.substr(b, e - b + 1);
        int s = sg;
        if (!t.empty() && t[0] == '-') {
            s = -s;
            t = t.substr(1);
        }
        const auto dot = t.find("·");
        require(dot != std::string::npos, "render parse: missing coefficient separator in '" + t + "'");
        const double coeff = std::stod(t.substr(0, dot));
        const std::string atom_text = t.substr(dot + std::string("·").size());
        out.emplace_back(label(parse_label(atom_text)), s * coeff);
    }
    return out;
}

} // namespace

std::vector<RenderedEquation> parse_rendered(const std::string& text) {
    std::vector<RenderedEquation> out;
    std::istringstream in(text);
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        const auto eq = line.find(" = ");
        require(eq != std::string::npos, "render parse: missing '=' in '" + line + "'");
        RenderedEquation req;
        req.kind = line.substr(0, eq).find('\'') != std::string::npos ? EquationKind::DIDE
                                                                      : EquationKind::RE;
        std::string rhs = line.substr(eq + 3);
        if (rhs == "0") {
            out.push_back(std::move(req));
            continue;
        }
        const auto integral = rhs.find("∫_{");
        if (integral != std::string::npos) {
            std::string head = integral > 0 ? rhs.substr(0, integral) : "";
            // strip a trailing " + " joining instantaneous terms to the integral
            if (head.size() >= 3 && head.substr(head.size() - 3) == " + ")
                head = head.substr(0, head.size() - 3);
            const auto lb = rhs.find("[ ", integral);
            const auto rb = rhs.rfind(" ]");
            require(lb != std::string::npos && rb != std::string::npos && rb > lb,
                    "render parse: malformed integral block");
            req.distributed = parse_term_sum(rhs.substr(lb + 2, rb - lb - 2));
            if (!head.empty()) req.instantaneous = parse_term_sum(head);
        } else {
            req.instantaneous = parse_term_sum(rhs);
        }
        out.push_back(std::move(req));
    }
    return out;
}

Eigen::MatrixXd evaluate_kernel(const SparseModel& model, const Eigen::VectorXd& sigmas,
                                const Eigen::VectorXd& x_shift, const Eigen::VectorXd& x_current) {
    model.validate();
    require(!model.black_box, "evaluate_kernel: black-box models carry no kernel");
    const Eigen::Index n = model.components();
    Eigen::MatrixXd out = Eigen::MatrixXd::Zero(sigmas.size(), n);
    for (Eigen::Index r = 0; r < sigmas.size(); ++r)
        for (int c = 0; c < model.distributed_cols; ++c) {
            const double v = model.spec.distributed[static_cast<std::size_t>(c)].eval(
                sigmas[r], x_shift, x_current);
            for (Eigen::Index j = 0; j < n; ++j) out(r, j) += model.xi(c, j) * v;
        }
    return out;
}

// ---------------------------------------------------------------------------
// Model file I/O

void write_model_file(const std::string& path, const SparseModel& model) {
    model.validate();
    std::ofstream out(path);
    require(out.good(), "model file: cannot open '" + path + "' for writing");
    out << "# ddsindy model\n";
    out << "[model]\n";
    out << "components = " << model.components() << "\n";
    out << "black_box = " << (model.black_box ? 1 : 0) << "\n";
    out << "degree = " << model.spec.degree << "\n";
    if (!model.spec.distributed.empty()) {
        out << "[window]\n";
        out << "a = " << fmt_g(model.win_a, 17) << "\n";
        out << "b = " << fmt_g(model.win_b, 17) << "\n";
        out << "[quadrature]\n";
        out << "kind = " << to_string(model.qkind) << "\n";
        out << "K = " << model.K << "\n";
    }
    out << "[library]\n";
    for (const auto& a : model.spec.distributed) out << "distributed = " << label(a, 17) << "\n";
    for (const auto& a : model.spec.instantaneous)
        out << "instantaneous = " << label(a, 17) << "\n";
    for (Eigen::Index j = 0; j < model.components(); ++j) {
        out << "[equation " << (j + 1) << "]\n";
        out << "kind = " << to_string(model.kinds[static_cast<std::size_t>(j)]) << "\n";
        const auto atoms = all_atoms(model.spec);
        for (std::size_t c = 0; c < atoms.size(); ++c) {
            const double v = model.xi(static_cast<Eigen::Index>(c), j);
            if (v != 0.0) out << label(atoms[c], 17) << " = " << fmt_g(v, 17) << "\n";
        }
    }
    require(out.good(), "model file: write failure on '" + path + "'");
}

SparseModel read_model_file(const std::string& path) {
    std::ifstream in(path);
    require(in.good(), "model file: cannot open '" + path + "'");
    SparseModel model;
    std::string line, section;
    Eigen::Index components = 0;
    int equation = -1;
    std::vector<std::map<std::string, double>> coeffs;
    std::vector<EquationKind> kinds;

    auto split_kv = [](const std::string& s) -> std::pair<std::string, std::string> {
        const auto eq = s.find('=');
        require(eq != std::string::npos, "model file: expected key = value, got '" + s + "'");
        auto trim = [](std::string t) {
            const auto b = t.find_first_not_of(" \t");
            const auto e = t.find_last_not_of(" \t\r");
            return b == std::string::npos ? std::string() : t.substr(b, e - b + 1);
        };
        return {trim(s.substr(0, eq)), trim(s.substr(eq + 1))};
    };

    while (std::getline(in, line)) {
        if (line.empty() || line[0] == '#') continue;
        if (line[0] == '[') {
            const auto close = line.find(']');
            require(close != std::string::npos, "model file: malformed section '" + line + "'");
            section = line.substr(1, close - 1);
            if (section.rfind("equation", 0) == 0) {
                equation = std::stoi(section.substr(9)) - 1;
                require(equation >= 0 && equation < components,
                        "model file: equation index out of range");
            }
            continue;
        }
        const auto [key, value] = split_kv(line);
        if (section == "model") {
            if (key == "components") {
                components = std::stoll(value);
                coeffs.resize(static_cast<std::size_t>(components));
                kinds.resize(static_cast<std::size_t>(components), EquationKind::RE);
            } else if (key == "black_box") {
                model.black_box = value == "1";
            } else if (key == "degree") {
                model.spec.degree = std::stoi(value);
            }
        } else if (section == "window") {
            (key == "a" ? model.win_a : model.win_b) = std::stod(value);
        } else if (section == "quadrature") {
            if (key == "kind")
                model.qkind = quad_kind_from_string(value);
            else if (key == "K")
                model.K = std::stoi(value);
        } else if (section == "library") {
            if (key == "distributed")
                model.spec.distributed.push_back(parse_label(value));
            else if (key == "instantaneous")
                model.spec.instantaneous.push_back(parse_label(value));
        } else if (section.rfind("equation", 0) == 0) {
            if (key == "kind")
                kinds[static_cast<std::size_t>(equation)] = equation_kind_from_string(value);
            else
                coeffs[static_cast<std::size_t>(equation)][key] = std::stod(value);
        }
    }
    require(components >= 1, "model file: missing [model] components");

    model.kinds = kinds;
    model.distributed_cols = static_cast<int>(model.spec.distributed.size());
    const auto atoms = all_atoms(model.spec);
    model.xi = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(atoms.size()), components);
    model.labels.clear();
    std::map<std::string, Eigen::Index> index;
    for (std::size_t c = 0; c < atoms.size(); ++c) {
        model.labels.push_back(label(atoms[c]));
        index[label(atoms[c], 17)] = static_cast<Eigen::Index>(c);
    }
    for (Eigen::Index j = 0; j < components; ++j)
        for (const auto& [lbl, v] : coeffs[static_cast<std::size_t>(j)]) {
            const auto it = index.find(label(parse_label(lbl), 17));
            require(it != index.end(), "model file: coefficient for unknown atom '" + lbl + "'");
            model.xi(it->second, j) = v;
        }
    model.validate();
    return model;
}

SampledTrajectory simulate_identified(const SparseModel& model, const HistorySegment& history,
                                      double t0, double T, double h) {
    model.validate();
    require(!model.black_box, "simulate_identified: black-box models are not resimulated");
    const Eigen::Index n = model.components();

    ModelDef def;
    def.n = n;
    def.kinds = model.kinds;
    def.history = history;
    def.t0 = t0;
    if (!model.spec.instantaneous.empty()) {
        const LibrarySpec spec = model.spec;
        const Eigen::MatrixXd xi = model.xi;
        const int d0 = model.distributed_cols;
        def.f_inst = [spec, xi, d0, n](const Eigen::VectorXd& x) {
            Eigen::VectorXd r = Eigen::VectorXd::Zero(n);
            for (std::size_t c = 0; c < spec.instantaneous.size(); ++c) {
                const double v = spec.instantaneous[c].eval_instantaneous(x, nullptr, 0.0);
                for (Eigen::Index j = 0; j < n; ++j)
                    r[j] += xi(d0 + static_cast<Eigen::Index>(c), j) * v;
            }
            return r;
        };
    }
    if (model.distributed_cols > 0) {
        ModelDef::Term term;
        term.a = model.win_a;
        term.b = model.win_b;
        const LibrarySpec spec = model.spec;
        const Eigen::MatrixXd xi = model.xi;
        const int dcols = model.distributed_cols;
        term.kernel = [spec, xi, dcols, n](double sigma, const Eigen::VectorXd& xs,
                                           const Eigen::VectorXd& xc) {
            Eigen::VectorXd r = Eigen::VectorXd::Zero(n);
            for (int c = 0; c < dcols; ++c) {
                const double v = spec.distributed[static_cast<std::size_t>(c)].eval(sigma, xs, xc);
                for (Eigen::Index j = 0; j < n; ++j) r[j] += xi(c, j) * v;
            }
            return r;
        };
        def.terms.push_back(std::move(term));
    }

    bool any_re = false, any_dd = false;
    for (auto k : model.kinds)
        (k == EquationKind::RE ? any_re : any_dd) = true;
    const int K = std::max(model.K, 2);
    if (any_re && !any_dd) return solve_re(def, T, h, K);
    if (!any_re && any_dd) return solve_dide(def, T, h, K);
    return solve_coupled(def, T, h, K);
}

} // namespace ddsindy
