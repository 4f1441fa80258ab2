#include "ddsindy/library.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <map>
#include <numeric>
#include <set>
#include <sstream>

namespace ddsindy {

namespace {

double ipow(double base, int p) {
    double r = 1.0;
    for (int i = 0; i < p; ++i) r *= base;
    return r;
}

int kind_rank(const Factor& f) {
    switch (f.kind) {
        case FactorKind::delay_power: return 0;
        case FactorKind::pow_neg_sigma: return 1;
        case FactorKind::exp_sigma: return 2;
        case FactorKind::exp_neg_state: return 3;
        case FactorKind::shifted_state: return 4;
        case FactorKind::current_state: return 5;
    }
    return 6;
}

void canonicalize(Atom& atom) {
    std::stable_sort(atom.factors.begin(), atom.factors.end(), [](const Factor& x, const Factor& y) {
        if (kind_rank(x) != kind_rank(y)) return kind_rank(x) < kind_rank(y);
        if (x.component != y.component) return x.component < y.component;
        return x.fixed_lag < y.fixed_lag;
    });
}

std::string fmt_num(double v, int precision) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.*g", precision, v);
    return buf;
}

} // namespace

int Atom::poly_degree() const {
    int d = 0;
    for (const auto& f : factors)
        if (f.kind == FactorKind::delay_power || f.kind == FactorKind::shifted_state ||
            f.kind == FactorKind::current_state)
            d += f.power;
    return d;
}

bool Atom::depends_on_sigma() const {
    for (const auto& f : factors)
        if (f.kind == FactorKind::delay_power || f.kind == FactorKind::exp_sigma ||
            f.kind == FactorKind::pow_neg_sigma)
            return true;
    return false;
}

bool Atom::has_shifted_state() const {
    for (const auto& f : factors)
        if ((f.kind == FactorKind::shifted_state && !f.has_fixed_lag) ||
            f.kind == FactorKind::exp_neg_state)
            return true;
    return false;
}

bool Atom::has_unresolved_slot() const {
    for (const auto& f : factors)
        if (f.slot >= 0) return true;
    return false;
}

bool Atom::is_instantaneous() const {
    for (const auto& f : factors) {
        if (f.kind == FactorKind::current_state) continue;
        if (f.kind == FactorKind::shifted_state && f.has_fixed_lag) continue;
        return false;
    }
    return true;
}

std::vector<double> Atom::fixed_lags() const {
    std::vector<double> lags;
    for (const auto& f : factors)
        if (f.kind == FactorKind::shifted_state && f.has_fixed_lag) lags.push_back(f.fixed_lag);
    return lags;
}

double Atom::eval(double sigma, const Eigen::VectorXd& x_shift,
                  const Eigen::VectorXd& x_current) const {
    double v = 1.0;
    for (const auto& f : factors) {
        switch (f.kind) {
            case FactorKind::delay_power: v *= ipow(sigma, f.power); break;
            case FactorKind::pow_neg_sigma: v *= std::pow(-sigma, f.theta); break;
            case FactorKind::exp_sigma: v *= std::exp(f.theta * sigma); break;
            case FactorKind::shifted_state: v *= ipow(x_shift[f.component], f.power); break;
            case FactorKind::exp_neg_state: v *= std::exp(-f.theta * x_shift[f.component]); break;
            case FactorKind::current_state: v *= ipow(x_current[f.component], f.power); break;
        }
    }
    return v;
}

double Atom::eval_instantaneous(const Eigen::VectorXd& x_current, const LinearRecord* record,
                                double t) const {
    double v = 1.0;
    for (const auto& f : factors) {
        if (f.kind == FactorKind::current_state) {
            v *= ipow(x_current[f.component], f.power);
        } else if (f.kind == FactorKind::shifted_state && f.has_fixed_lag) {
            require(record != nullptr, "library: lagged atom needs a record");
            v *= ipow(record->at(t + f.fixed_lag, f.component), f.power);
        } else {
            throw Error("library: atom '" + label(*this) + "' is not instantaneous");
        }
    }
    return v;
}

// ---------------------------------------------------------------------------
// Labels

std::string label(const Atom& atom, int precision) {
    if (atom.factors.empty()) return "1";
    std::string out;
    for (std::size_t i = 0; i < atom.factors.size(); ++i) {
        const Factor& f = atom.factors[i];
        if (i) out += "*";
        switch (f.kind) {
            case FactorKind::delay_power:
                out += (f.power == 1) ? "sig" : "sig^" + std::to_string(f.power);
                break;
            case FactorKind::pow_neg_sigma:
                out += "(-sig)^" + fmt_num(f.theta, precision);
                break;
            case FactorKind::exp_sigma:
                out += "exp(" + fmt_num(f.theta, precision) + "*sig)";
                break;
            case FactorKind::shifted_state: {
                std::string base;
                if (f.has_fixed_lag)
                    base = "x" + std::to_string(f.component + 1) + "[" +
                           fmt_num(f.fixed_lag, precision) + "]";
                else
                    base = "x" + std::to_string(f.component + 1) + "d";
                out += base;
                if (f.power != 1) out += "^" + std::to_string(f.power);
                break;
            }
            case FactorKind::exp_neg_state:
                out += "exp(-" + fmt_num(f.theta, precision) + "*x" +
                       std::to_string(f.component + 1) + "d)";
                break;
            case FactorKind::current_state:
                out += "x" + std::to_string(f.component + 1);
                if (f.power != 1) out += "^" + std::to_string(f.power);
                break;
        }
    }
    return out;
}

namespace {

std::vector<std::string> split_top_level(const std::string& s, char sep) {
    std::vector<std::string> out;
    int depth = 0;
    std::string cur;
    for (char c : s) {
        if (c == '(' || c == '[') ++depth;
        if (c == ')' || c == ']') --depth;
        if (c == sep && depth == 0) {
            out.push_back(cur);
            cur.clear();
        } else {
            cur += c;
        }
    }
    out.push_back(cur);
    return out;
}

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t");
    const auto e = s.find_last_not_of(" \t");
    return b == std::string::npos ? "" : s.substr(b, e - b + 1);
}

double parse_num(const std::string& s) {
    std::size_t used = 0;
    double v;
    try {
        v = std::stod(s, &used);
    } catch (const std::exception&) {
        throw Error("library: cannot parse number '" + s + "'");
    }
    require(used == s.size(), "library: trailing characters in number '" + s + "'");
    return v;
}

// Variable references: sig | s | xJd | xJ | x(t+s) | xJ(t+s) | x(t) | xJ(t)
struct VarRef {
    bool is_sigma = false;
    bool shifted = false;
    int component = 0;
};

bool parse_var(const std::string& tok, VarRef& out) {
    if (tok == "sig" || tok == "s") {
        out.is_sigma = true;
        return true;
    }
    if (tok.empty() || tok[0] != 'x') return false;
    std::size_t i = 1;
    int comp = 0;
    bool has_digits = false;
    while (i < tok.size() && std::isdigit(static_cast<unsigned char>(tok[i]))) {
        comp = comp * 10 + (tok[i] - '0');
        ++i;
        has_digits = true;
    }
    out.component = has_digits ? comp - 1 : 0;
    std::string rest = tok.substr(i);
    if (rest.empty()) {  // x or xJ -> current state (canonical form requires digits)
        out.shifted = false;
        return has_digits;
    }
    if (rest == "d" || rest == "(t+s)" || rest == "(t+sig)") {
        out.shifted = true;
        return true;
    }
    if (rest == "(t)") {
        out.shifted = false;
        return true;
    }
    return false;
}

Factor parse_factor(std::string tok) {
    tok = trim(tok);
    require(!tok.empty(), "library: empty factor token");
    Factor f{};

    // Optional trailing ^power (top-level caret).
    int depth = 0;
    std::size_t caret = std::string::npos;
    for (std::size_t i = 0; i < tok.size(); ++i) {
        char c = tok[i];
        if (c == '(' || c == '[') ++depth;
        if (c == ')' || c == ']') --depth;
        if (c == '^' && depth == 0) caret = i;
    }
    std::string expo;
    if (caret != std::string::npos) {
        expo = trim(tok.substr(caret + 1));
        tok = trim(tok.substr(0, caret));
        require(!expo.empty(), "library: dangling '^' in factor");
    }

    if (tok == "(-sig)" || tok == "(-s)") {
        f.kind = FactorKind::pow_neg_sigma;
        require(!expo.empty(), "library: (-sig) needs an exponent");
        f.theta = parse_num(expo);
        return f;
    }
    if (tok.rfind("exp(", 0) == 0 && tok.back() == ')') {
        std::string arg = tok.substr(4, tok.size() - 5);
        auto parts = split_top_level(arg, '*');
        require(parts.size() == 2, "library: exp argument must look like theta*var: '" + arg + "'");
        double theta = parse_num(trim(parts[0]));
        VarRef var;
        require(parse_var(trim(parts[1]), var), "library: bad exp argument '" + arg + "'");
        require(expo.empty(), "library: exponent on exp() factor is not supported");
        if (var.is_sigma) {
            f.kind = FactorKind::exp_sigma;
            f.theta = theta;
        } else {
            require(var.shifted, "library: exp of a current state is not supported");
            f.kind = FactorKind::exp_neg_state;
            f.component = var.component;
            f.theta = -theta;  // canonical form exp(-theta*xjd) stores theta > 0
        }
        return f;
    }
    // Fixed-lag shifted state xJ[lag]
    auto lb = tok.find('[');
    if (lb != std::string::npos && tok.back() == ']') {
        VarRef var;
        require(parse_var(tok.substr(0, lb), var) && !var.is_sigma && !var.shifted,
                "library: bad lagged factor '" + tok + "'");
        f.kind = FactorKind::shifted_state;
        f.component = var.component;
        f.has_fixed_lag = true;
        f.fixed_lag = parse_num(tok.substr(lb + 1, tok.size() - lb - 2));
        f.power = expo.empty() ? 1 : static_cast<int>(parse_num(expo));
        return f;
    }
    VarRef var;
    require(parse_var(tok, var), "library: cannot parse factor '" + tok + "'");
    f.power = expo.empty() ? 1 : static_cast<int>(parse_num(expo));
    if (var.is_sigma)
        f.kind = FactorKind::delay_power;
    else if (var.shifted) {
        f.kind = FactorKind::shifted_state;
        f.component = var.component;
    } else {
        f.kind = FactorKind::current_state;
        f.component = var.component;
    }
    return f;
}

} // namespace

Atom parse_label(const std::string& text) {
    const std::string t = trim(text);
    Atom atom;
    if (t == "1") return atom;
    for (const auto& tok : split_top_level(t, '*')) atom.factors.push_back(parse_factor(tok));
    canonicalize(atom);
    return atom;
}

// ---------------------------------------------------------------------------
// Monomial enumeration

namespace {

void enumerate_rec(const std::vector<Symbol>& symbols, std::size_t idx, int remaining,
                   std::vector<int>& expo, std::vector<std::vector<int>>& out) {
    if (idx == symbols.size()) {
        out.push_back(expo);
        return;
    }
    // Graded-lex: leading symbol takes the largest power first.
    for (int p = remaining; p >= 0; --p) {
        expo[idx] = p;
        enumerate_rec(symbols, idx + 1, remaining - p, expo, out);
    }
    expo[idx] = 0;
}

} // namespace

std::vector<Atom> enumerate_monomials(const std::vector<Symbol>& symbols, int degree) {
    require(!symbols.empty(), "library: empty symbol set");
    require(degree >= 1, "library: degree must be >= 1");
    std::vector<Atom> atoms;
    for (int g = 0; g <= degree; ++g) {
        std::vector<std::vector<int>> expos;
        std::vector<int> cur(symbols.size(), 0);
        enumerate_rec(symbols, 0, g, cur, expos);
        for (auto& e : expos) {
            if (std::accumulate(e.begin(), e.end(), 0) != g) continue;
            Atom a;
            for (std::size_t i = 0; i < symbols.size(); ++i) {
                if (e[i] == 0) continue;
                Factor f{};
                f.power = e[i];
                switch (symbols[i].kind) {
                    case Symbol::sigma: f.kind = FactorKind::delay_power; break;
                    case Symbol::shifted:
                        f.kind = FactorKind::shifted_state;
                        f.component = symbols[i].component;
                        break;
                    case Symbol::current:
                        f.kind = FactorKind::current_state;
                        f.component = symbols[i].component;
                        break;
                }
                a.factors.push_back(f);
            }
            canonicalize(a);
            atoms.push_back(std::move(a));
        }
    }
    return atoms;
}

// ---------------------------------------------------------------------------
// Spec validation

void LibrarySpec::validate() const {
    std::set<std::string> seen;
    for (const auto& a : distributed) {
        const auto name = label(a);
        require(seen.insert("D:" + name).second, "library: duplicate distributed atom " + name);
    }
    seen.clear();
    for (const auto& a : instantaneous) {
        const auto name = label(a);
        require(a.is_instantaneous(),
                "library: instantaneous block contains non-instantaneous atom " + name);
        require(seen.insert("I:" + name).second, "library: duplicate instantaneous atom " + name);
    }
}

bool LibrarySpec::has_unresolved_slot() const {
    for (const auto& a : distributed)
        if (a.has_unresolved_slot()) return true;
    for (const auto& a : instantaneous)
        if (a.has_unresolved_slot()) return true;
    return false;
}

// ---------------------------------------------------------------------------
// Assembly

AssembledLibrary assemble_distributed(const LinearRecord& record, const Eigen::VectorXd& times,
                                      const Eigen::MatrixXd& states, const QuadratureRule& rule,
                                      const std::vector<Atom>& atoms) {
    require(!atoms.empty(), "library: empty distributed atom set");
    for (const auto& a : atoms)
        require(!a.has_unresolved_slot(),
                "library: atom " + label(a) + " has an unbound parameter slot");
    const Eigen::Index m = times.size();
    const Eigen::Index p = static_cast<Eigen::Index>(atoms.size());
    const Eigen::Index K = rule.size();

    std::vector<bool> valid(static_cast<std::size_t>(m), true);
    std::vector<ShiftedValues> shifted;
    shifted.reserve(static_cast<std::size_t>(K));
    for (Eigen::Index k = 0; k < K; ++k) {
        shifted.push_back(shifted_values(record, times, rule.nodes[k]));
        for (Eigen::Index i = 0; i < m; ++i)
            if (!shifted.back().valid[static_cast<std::size_t>(i)])
                valid[static_cast<std::size_t>(i)] = false;
    }

    std::vector<int> rows;
    for (Eigen::Index i = 0; i < m; ++i)
        if (valid[static_cast<std::size_t>(i)]) rows.push_back(static_cast<int>(i));
    require(!rows.empty(), "library: no rows remain after masking; the window [" +
                               std::to_string(rule.a) + ", " + std::to_string(rule.b) +
                               "] exceeds the data span");

    AssembledLibrary out;
    out.rows = rows;
    out.matrix = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(rows.size()), p);
    out.labels.reserve(static_cast<std::size_t>(p));
    for (const auto& a : atoms) out.labels.push_back(label(a));

    Eigen::VectorXd xs(states.cols()), xc(states.cols());
    for (std::size_t r = 0; r < rows.size(); ++r) {
        const Eigen::Index i = rows[r];
        xc = states.row(i).transpose();
        for (Eigen::Index k = 0; k < K; ++k) {
            xs = shifted[static_cast<std::size_t>(k)].values.row(i).transpose();
            const double w = rule.weights[k];
            const double sg = rule.nodes[k];
            for (Eigen::Index c = 0; c < p; ++c)
                out.matrix(static_cast<Eigen::Index>(r), c) +=
                    w * atoms[static_cast<std::size_t>(c)].eval(sg, xs, xc);
        }
    }
    require(out.matrix.allFinite(), "library: non-finite entries in the distributed block");
    return out;
}

AssembledLibrary assemble_distributed(const SampledTrajectory& traj, const QuadratureRule& rule,
                                      const std::vector<Atom>& atoms) {
    traj.validate();
    LinearRecord rec(traj);
    return assemble_distributed(rec, traj.times, traj.states, rule, atoms);
}

AssembledLibrary assemble_instantaneous(const SampledTrajectory& traj,
                                        const std::vector<Atom>& atoms) {
    traj.validate();
    require(!atoms.empty(), "library: empty instantaneous atom set");
    const Eigen::Index m = traj.rows();
    const Eigen::Index p = static_cast<Eigen::Index>(atoms.size());

    bool needs_record = false;
    for (const auto& a : atoms) {
        require(a.is_instantaneous(),
                "library: atom " + label(a) + " is not instantaneous");
        if (!a.fixed_lags().empty()) needs_record = true;
    }
    std::optional<LinearRecord> rec;
    if (needs_record) rec.emplace(traj);

    std::vector<int> rows;
    for (Eigen::Index i = 0; i < m; ++i) {
        bool ok = true;
        if (needs_record) {
            for (const auto& a : atoms)
                for (double lag : a.fixed_lags())
                    if (traj.times[i] + lag < rec->min_time()) ok = false;
        }
        if (ok) rows.push_back(static_cast<int>(i));
    }
    require(!rows.empty(), "library: no rows remain after lag masking");

    AssembledLibrary out;
    out.rows = rows;
    out.matrix.resize(static_cast<Eigen::Index>(rows.size()), p);
    for (const auto& a : atoms) out.labels.push_back(label(a));
    Eigen::VectorXd xc(traj.cols());
    for (std::size_t r = 0; r < rows.size(); ++r) {
        const Eigen::Index i = rows[r];
        xc = traj.states.row(i).transpose();
        for (Eigen::Index c = 0; c < p; ++c)
            out.matrix(static_cast<Eigen::Index>(r), c) =
                atoms[static_cast<std::size_t>(c)].eval_instantaneous(
                    xc, rec ? &*rec : nullptr, traj.times[i]);
    }
    require(out.matrix.allFinite(), "library: non-finite entries in the instantaneous block");
    return out;
}

AssembledLibrary concat(const std::vector<AssembledLibrary>& blocks) {
    require(!blocks.empty(), "library: nothing to concatenate");
    if (blocks.size() == 1) return blocks.front();

    std::vector<int> common = blocks.front().rows;
    for (std::size_t b = 1; b < blocks.size(); ++b) {
        std::vector<int> next;
        std::set_intersection(common.begin(), common.end(), blocks[b].rows.begin(),
                              blocks[b].rows.end(), std::back_inserter(next));
        common = std::move(next);
    }
    require(!common.empty(), "library: disjoint row masks in concatenation");

    Eigen::Index total_cols = 0;
    for (const auto& b : blocks) total_cols += b.matrix.cols();

    AssembledLibrary out;
    out.rows = common;
    out.matrix.resize(static_cast<Eigen::Index>(common.size()), total_cols);
    Eigen::Index col0 = 0;
    for (const auto& b : blocks) {
        std::map<int, Eigen::Index> where;
        for (std::size_t r = 0; r < b.rows.size(); ++r)
            where[b.rows[r]] = static_cast<Eigen::Index>(r);
        for (std::size_t r = 0; r < common.size(); ++r)
            out.matrix.block(static_cast<Eigen::Index>(r), col0, 1, b.matrix.cols()) =
                b.matrix.row(where.at(common[r]));
        col0 += b.matrix.cols();
        out.labels.insert(out.labels.end(), b.labels.begin(), b.labels.end());
    }
    return out;
}

} // namespace ddsindy
