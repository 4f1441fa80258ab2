#include "ddsindy/simulate.hpp"

#include <algorithm>
#include <cmath>

namespace ddsindy {

void ModelDef::validate() const {
    require(n >= 1, "model: need at least one component");
    require(static_cast<Eigen::Index>(kinds.size()) == n, "model: kinds size mismatch");
    require(!terms.empty() || f_inst, "model: empty right-hand side");
    double a_min = 0.0;
    for (const auto& t : terms) {
        require(t.a < t.b, "model: term window requires a < b");
        require(t.b <= 0.0, "model: term window must satisfy b <= 0");
        require(static_cast<bool>(t.kernel), "model: term without kernel");
        a_min = std::min(a_min, t.a);
    }
    require(history.times.size() >= 1, "model: history required");
    require(history.values.cols() == n, "model: history width mismatch");
    require(history.times[history.times.size() - 1] <= t0 + 1e-12,
            "model: history must end at or before t0");
    require(history.times[0] <= t0 + a_min + 1e-12,
            "model: history must cover the full delay span");
}

double gamma_density(int n, double alpha, double sigma) {
    require(n >= 1, "gamma_density: n must be a positive integer");
    require(alpha > 0.0, "gamma_density: alpha must be positive");
    require(sigma <= 0.0, "gamma_density: sigma must be <= 0");
    double fact = 1.0;
    for (int k = 2; k < n; ++k) fact *= k;
    return std::pow(alpha, n) * std::pow(-sigma, n - 1) * std::exp(alpha * sigma) / fact;
}

namespace {

Eigen::VectorXd eval_f_inst(const ModelDef& model, const Eigen::VectorXd& x) {
    if (model.f_inst) return model.f_inst(x);
    return Eigen::VectorXd::Zero(model.n);
}

// Cubic Hermite interpolant over computed (t, x, x') samples with a
// piecewise-linear history segment below t0.
class HermiteRecord {
public:
    HermiteRecord(const HistorySegment& history, Eigen::Index n) : n_(n), hist_(history) {}

    void append(double t, const Eigen::VectorXd& x, const Eigen::VectorXd& d) {
        ts_.push_back(t);
        xs_.push_back(x);
        ds_.push_back(d);
    }

    double min_time() const { return hist_.times[0]; }

    Eigen::VectorXd at(double q) const {
        require(q >= min_time() - 1e-12, "hermite record: query before coverage");
        if (ts_.empty() || q < ts_.front()) {
            // linear over the history
            const auto& ht = hist_.times;
            auto it = std::upper_bound(ht.data(), ht.data() + ht.size(), q);
            Eigen::Index hi = it - ht.data();
            if (hi <= 0) return hist_.values.row(0).transpose();
            if (hi >= ht.size()) {
                if (ts_.empty()) return hist_.values.row(ht.size() - 1).transpose();
                // bridge between history end and the first sample
                const double t0 = ht[ht.size() - 1], t1 = ts_.front();
                const double w = (q - t0) / (t1 - t0);
                return ((1.0 - w) * hist_.values.row(ht.size() - 1).transpose() +
                        w * xs_.front());
            }
            const double w = (q - ht[hi - 1]) / (ht[hi] - ht[hi - 1]);
            return ((1.0 - w) * hist_.values.row(hi - 1) + w * hist_.values.row(hi)).transpose();
        }
        auto it = std::upper_bound(ts_.begin(), ts_.end(), q);
        std::size_t hi = static_cast<std::size_t>(it - ts_.begin());
        if (hi >= ts_.size()) return xs_.back();
        if (hi == 0) return xs_.front();
        const std::size_t lo = hi - 1;
        const double dt = ts_[hi] - ts_[lo];
        const double s = (q - ts_[lo]) / dt;
        const double h00 = (1 + 2 * s) * (1 - s) * (1 - s);
        const double h10 = s * (1 - s) * (1 - s);
        const double h01 = s * s * (3 - 2 * s);
        const double h11 = s * s * (s - 1);
        return h00 * xs_[lo] + h10 * dt * ds_[lo] + h01 * xs_[hi] + h11 * dt * ds_[hi];
    }

private:
    Eigen::Index n_;
    HistorySegment hist_;
    std::vector<double> ts_;
    std::vector<Eigen::VectorXd> xs_, ds_;
};

double smallest_lag(const std::vector<QuadratureRule>& rules) {
    double s = std::numeric_limits<double>::infinity();
    for (const auto& r : rules) s = std::min(s, -r.nodes[r.size() - 1]);
    return s;
}

} // namespace

SampledTrajectory solve_re(const ModelDef& model, double T, double h, int K_sim) {
    model.validate();
    require(h > 0.0 && T > model.t0, "solve_re: need h > 0 and T > t0");
    require(!model.f_inst, "solve_re: instantaneous parts are not supported for pure REs");
    for (auto k : model.kinds)
        require(k == EquationKind::RE, "solve_re: all components must be REs");
    for (const auto& t : model.terms)
        require(t.b <= -h + 1e-12,
                "solve_re: window touching 0 needs a fixed-point solver (out of scope); "
                "use a strictly lagged window");

    std::vector<QuadratureRule> rules;
    for (const auto& t : model.terms)
        rules.push_back(make_rule(QuadKind::trapezoid, K_sim, t.a, t.b));

    const Eigen::Index N = static_cast<Eigen::Index>(std::floor((T - model.t0) / h + 1e-9));
    LinearRecord rec(model.history, model.n);
    const Eigen::VectorXd x_cur_unused = Eigen::VectorXd::Zero(model.n);

    SampledTrajectory out;
    out.times.resize(N + 1);
    out.states.resize(N + 1, model.n);
    for (Eigen::Index i = 0; i <= N; ++i) {
        const double t = model.t0 + i * h;
        Eigen::VectorXd v = Eigen::VectorXd::Zero(model.n);
        for (std::size_t q = 0; q < rules.size(); ++q) {
            const auto& rule = rules[q];
            for (Eigen::Index k = 0; k < rule.size(); ++k)
                v += rule.weights[k] *
                     model.terms[q].kernel(rule.nodes[k], rec.at(t + rule.nodes[k]), x_cur_unused);
        }
        out.times[i] = t;
        out.states.row(i) = v.transpose();
        rec.append(t, v);
    }
    out.history = model.history;
    return out;
}

SampledTrajectory solve_dide(const ModelDef& model, double T, double h, int K_sim) {
    model.validate();
    require(h > 0.0 && T > model.t0, "solve_dide: need h > 0 and T > t0");
    for (auto k : model.kinds)
        require(k == EquationKind::DIDE, "solve_dide: all components must be DIDEs");

    std::vector<QuadratureRule> rules;
    for (const auto& t : model.terms)
        rules.push_back(make_rule(QuadKind::rectangles, K_sim, t.a, t.b));
    if (!rules.empty())
        require(h <= smallest_lag(rules) + 1e-12,
                "solve_dide: step exceeds the smallest positive delay gap");

    HermiteRecord rec(model.history, model.n);
    auto rhs = [&](double t, const Eigen::VectorXd& x) {
        Eigen::VectorXd r = eval_f_inst(model, x);
        for (std::size_t q = 0; q < rules.size(); ++q) {
            const auto& rule = rules[q];
            for (Eigen::Index k = 0; k < rule.size(); ++k)
                r += rule.weights[k] *
                     model.terms[q].kernel(rule.nodes[k], rec.at(t + rule.nodes[k]), x);
        }
        return r;
    };

    const Eigen::Index N = static_cast<Eigen::Index>(std::floor((T - model.t0) / h + 1e-9));
    SampledTrajectory out;
    out.times.resize(N + 1);
    out.states.resize(N + 1, model.n);
    out.derivs = Eigen::MatrixXd(N + 1, model.n);

    Eigen::VectorXd x = rec.at(model.t0);
    Eigen::VectorXd d = rhs(model.t0, x);
    rec.append(model.t0, x, d);
    out.times[0] = model.t0;
    out.states.row(0) = x.transpose();
    out.derivs->row(0) = d.transpose();

    for (Eigen::Index i = 0; i < N; ++i) {
        const double t = model.t0 + i * h;
        const Eigen::VectorXd k1 = rhs(t, x);
        const Eigen::VectorXd k2 = rhs(t + 0.5 * h, x + 0.5 * h * k1);
        const Eigen::VectorXd k3 = rhs(t + 0.5 * h, x + 0.5 * h * k2);
        const Eigen::VectorXd k4 = rhs(t + h, x + h * k3);
        x += h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        d = rhs(t + h, x);
        rec.append(t + h, x, d);
        out.times[i + 1] = t + h;
        out.states.row(i + 1) = x.transpose();
        out.derivs->row(i + 1) = d.transpose();
    }
    out.history = model.history;
    out.derivs_exact = true;
    return out;
}

SampledTrajectory solve_coupled(const ModelDef& model, double T, double h, int K_sim) {
    model.validate();
    require(h > 0.0 && T > model.t0, "solve_coupled: need h > 0 and T > t0");

    std::vector<Eigen::Index> re_idx, dd_idx;
    for (Eigen::Index j = 0; j < model.n; ++j)
        (model.kinds[static_cast<std::size_t>(j)] == EquationKind::RE ? re_idx : dd_idx)
            .push_back(j);
    if (dd_idx.empty()) return solve_re(model, T, h, K_sim);

    std::vector<QuadratureRule> rules;
    for (const auto& t : model.terms) {
        require(t.b <= -h + 1e-12, "solve_coupled: windows must be strictly lagged (b <= -h)");
        rules.push_back(make_rule(QuadKind::trapezoid, K_sim, t.a, t.b));
    }

    LinearRecord rec(model.history, model.n);

    // Memory integrals per component at time s, from past record values only.
    auto integrals = [&](double s, const Eigen::VectorXd& x_cur) {
        Eigen::VectorXd v = Eigen::VectorXd::Zero(model.n);
        for (std::size_t q = 0; q < rules.size(); ++q) {
            const auto& rule = rules[q];
            for (Eigen::Index k = 0; k < rule.size(); ++k)
                v += rule.weights[k] *
                     model.terms[q].kernel(rule.nodes[k], rec.at(s + rule.nodes[k]), x_cur);
        }
        return v;
    };

    // Full state at stage time s given the DIDE entries: RE components are
    // computed explicitly. RE kernels may reference current DIDE components;
    // the RE components' own current entries are not available (left zero).
    auto full_state = [&](double s, const Eigen::VectorXd& xd) {
        Eigen::VectorXd x = Eigen::VectorXd::Zero(model.n);
        for (std::size_t r = 0; r < dd_idx.size(); ++r) x[dd_idx[r]] = xd[static_cast<Eigen::Index>(r)];
        const Eigen::VectorXd g = integrals(s, x) + eval_f_inst(model, x);
        for (auto j : re_idx) x[j] = g[j];
        return x;
    };

    auto rhs_dd = [&](double s, const Eigen::VectorXd& xd) {
        const Eigen::VectorXd x = full_state(s, xd);
        const Eigen::VectorXd g = integrals(s, x) + eval_f_inst(model, x);
        Eigen::VectorXd r(static_cast<Eigen::Index>(dd_idx.size()));
        for (std::size_t k = 0; k < dd_idx.size(); ++k) r[static_cast<Eigen::Index>(k)] = g[dd_idx[k]];
        return r;
    };

    const Eigen::Index N = static_cast<Eigen::Index>(std::floor((T - model.t0) / h + 1e-9));
    SampledTrajectory out;
    out.times.resize(N + 1);
    out.states.resize(N + 1, model.n);
    out.derivs = Eigen::MatrixXd::Zero(N + 1, model.n);

    LinearRecord hist_only(model.history, model.n);
    Eigen::VectorXd xd(static_cast<Eigen::Index>(dd_idx.size()));
    {
        const Eigen::VectorXd x_hist = hist_only.at(model.t0);
        for (std::size_t k = 0; k < dd_idx.size(); ++k)
            xd[static_cast<Eigen::Index>(k)] = x_hist[dd_idx[k]];
    }

    for (Eigen::Index i = 0; i <= N; ++i) {
        const double t = model.t0 + i * h;
        if (i > 0) {
            const double tp = t - h;
            const Eigen::VectorXd k1 = rhs_dd(tp, xd);
            const Eigen::VectorXd k2 = rhs_dd(tp + 0.5 * h, xd + 0.5 * h * k1);
            const Eigen::VectorXd k3 = rhs_dd(tp + 0.5 * h, xd + 0.5 * h * k2);
            const Eigen::VectorXd k4 = rhs_dd(tp + h, xd + h * k3);
            xd += h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        }
        const Eigen::VectorXd x = full_state(t, xd);
        const Eigen::VectorXd g = integrals(t, x) + eval_f_inst(model, x);
        out.times[i] = t;
        out.states.row(i) = x.transpose();
        for (auto j : dd_idx) (*out.derivs)(i, j) = g[j];
        rec.append(t, x);
    }
    // RE components have no stored rate; fill their derivative columns with
    // a finite-difference estimate so the block stays finite.
    const Eigen::MatrixXd fd = estimate_derivatives(out.times, out.states);
    for (auto j : re_idx) out.derivs->col(j) = fd.col(j);
    out.history = model.history;
    out.derivs_exact = true;
    return out;
}

} // namespace ddsindy
