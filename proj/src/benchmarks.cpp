#include "ddsindy/benchmarks.hpp"

#include <cmath>
#include <numbers>
#include <random>

namespace ddsindy {

double EquationTruth::lookup(const std::string& lbl) const {
    for (const auto& [name, v] : coeffs)
        if (name == lbl) return v;
    return 0.0;
}

namespace {

constexpr double kRickerGamma = -10240.0 / 3.0;  // -d0 * alpha^4 * e^eta / 3!

HistorySegment constant_history(double t_lo, double t_hi, const Eigen::VectorXd& value) {
    HistorySegment h;
    h.times.resize(2);
    h.times << t_lo, t_hi;
    h.values.resize(2, value.size());
    h.values.row(0) = value.transpose();
    h.values.row(1) = value.transpose();
    return h;
}

Atom make_atom(std::vector<Factor> factors) {
    Atom a;
    a.factors = std::move(factors);
    return a;
}

Factor delay_pow(int p) {
    Factor f{};
    f.kind = FactorKind::delay_power;
    f.power = p;
    return f;
}
Factor shifted(int j, int p = 1) {
    Factor f{};
    f.kind = FactorKind::shifted_state;
    f.component = j;
    f.power = p;
    return f;
}
Factor current(int j, int p = 1) {
    Factor f{};
    f.kind = FactorKind::current_state;
    f.component = j;
    f.power = p;
    return f;
}
Factor exp_sigma(double theta, int slot = -1) {
    Factor f{};
    f.kind = FactorKind::exp_sigma;
    f.theta = theta;
    f.slot = slot;
    return f;
}
Factor exp_neg_state(int j, double theta, int slot = -1) {
    Factor f{};
    f.kind = FactorKind::exp_neg_state;
    f.component = j;
    f.theta = theta;
    f.slot = slot;
    return f;
}
Factor pow_neg_sigma(double theta, int slot = -1) {
    Factor f{};
    f.kind = FactorKind::pow_neg_sigma;
    f.theta = theta;
    f.slot = slot;
    return f;
}

// Multiply every monomial of a base set by a fixed factor product.
std::vector<Atom> augment(const std::vector<Atom>& base, const std::vector<Factor>& extra) {
    std::vector<Atom> out;
    out.reserve(base.size());
    for (const auto& a : base) {
        Atom b = a;
        b.factors.insert(b.factors.end(), extra.begin(), extra.end());
        out.push_back(parse_label(label(b, 17)));  // re-canonicalize factor order
    }
    return out;
}

std::vector<Atom> drop_constant(std::vector<Atom> atoms) {
    std::vector<Atom> out;
    for (auto& a : atoms)
        if (!a.is_constant()) out.push_back(std::move(a));
    return out;
}

BenchmarkRecipe logistic_re_recipe() {
    BenchmarkRecipe r;
    r.name = "logistic_re";
    r.kinds = {EquationKind::RE};

    ModelDef& model = r.model;
    model.n = 1;
    model.kinds = r.kinds;
    ModelDef::Term term;
    term.a = -3.0;
    term.b = -1.0;
    term.kernel = [](double sigma, const Eigen::VectorXd& xs, const Eigen::VectorXd&) {
        Eigen::VectorXd v(1);
        v[0] = (sigma + 1.0) * xs[0] * (1.0 - xs[0]);
        return v;
    };
    model.terms.push_back(term);
    model.history = constant_history(-3.0, 0.0, Eigen::VectorXd::Constant(1, 0.5));

    r.m = 100;
    r.t_end = 20.0;
    r.train_fraction = 0.5;
    r.gen_kind = QuadKind::trapezoid;
    r.gen_K = 128;
    r.fit_kind = QuadKind::trapezoid;
    r.fit_K = 128;
    r.win_a = -3.0;
    r.win_b = -1.0;
    r.lambda = 1e-5;

    r.library.degree = 3;
    r.library.distributed = enumerate_monomials({{Symbol::sigma, 0}, {Symbol::shifted, 0}}, 3);

    EquationTruth t;
    t.coeffs = {{label(make_atom({shifted(0)})), 1.0},
                {label(make_atom({delay_pow(1), shifted(0)})), 1.0},
                {label(make_atom({shifted(0, 2)})), -1.0},
                {label(make_atom({delay_pow(1), shifted(0, 2)})), -1.0}};
    r.truth = {t};
    return r;
}

BenchmarkRecipe ricker_recipe(bool advanced) {
    BenchmarkRecipe r;
    r.name = advanced ? "ricker_advanced" : "ricker_simple";
    r.kinds = {EquationKind::DIDE};

    const double d0 = 1.0;
    const double s_rate = advanced ? 4.5 : 4.0;            // alpha + d1
    const double a_state = advanced ? std::numbers::pi / 10.0 : 1.0;

    ModelDef& model = r.model;
    model.n = 1;
    model.kinds = r.kinds;
    model.f_inst = [d0](const Eigen::VectorXd& x) {
        Eigen::VectorXd v(1);
        v[0] = -d0 * x[0];
        return v;
    };
    ModelDef::Term term;
    term.a = -10.0;  // truncation of the infinite delay to [-10*tau, 0]
    term.b = 0.0;
    term.kernel = [s_rate, a_state](double sigma, const Eigen::VectorXd& xs,
                                    const Eigen::VectorXd&) {
        Eigen::VectorXd v(1);
        v[0] = kRickerGamma * sigma * sigma * sigma * std::exp(s_rate * sigma) *
               std::exp(-a_state * xs[0]) * xs[0];
        return v;
    };
    model.terms.push_back(term);
    model.history = constant_history(-10.0, 0.0, Eigen::VectorXd::Constant(1, 0.5));

    r.m = advanced ? 500 : 100;
    r.t_end = 20.0;
    r.train_fraction = 0.8;
    r.h_solve = 0.02;
    r.K_solve = 50;
    r.gen_kind = QuadKind::rectangles;
    r.gen_K = 50;
    r.fit_kind = QuadKind::rectangles;
    r.fit_K = 50;
    r.win_a = -10.0;
    r.win_b = 0.0;
    r.lambda = 1e-2;
    r.bb_degree = 1;

    const int degree = advanced ? 5 : 4;
    const auto poly = enumerate_monomials({{Symbol::sigma, 0}, {Symbol::shifted, 0}}, degree);
    r.library.degree = degree;
    r.library.instantaneous = drop_constant(enumerate_monomials({{Symbol::current, 0}}, 2));

    EquationTruth t;
    if (!advanced) {
        r.library.distributed = poly;
        const auto family = augment(poly, {exp_sigma(4.0), exp_neg_state(0, 1.0)});
        r.library.distributed.insert(r.library.distributed.end(), family.begin(), family.end());
        t.coeffs = {
            {label(make_atom({delay_pow(3), exp_sigma(4.0), exp_neg_state(0, 1.0), shifted(0)})),
             kRickerGamma},
            {label(make_atom({current(0)})), -d0}};
    } else {
        r.library.distributed = poly;
        for (int q = 1; q <= 2; ++q)
            r.library.distributed.push_back(make_atom(
                {pow_neg_sigma(3.0), exp_sigma(s_rate), exp_neg_state(0, a_state), shifted(0, q)}));
        // (-sigma)^3 = -sigma^3, so the coefficient on this atom is -gamma.
        t.coeffs = {{label(make_atom({pow_neg_sigma(3.0), exp_sigma(s_rate),
                                      exp_neg_state(0, a_state), shifted(0)})),
                     -kRickerGamma},
                    {label(make_atom({current(0)})), -d0}};

        r.has_optimization = true;
        r.ricker_post = true;
        r.library_template = r.library;
        // Slots: 0 -> sigma power (n-1), 1 -> exponential rate (alpha+d1),
        // 2 -> state rate a.
        for (auto& atom : r.library_template.distributed)
            for (auto& f : atom.factors) {
                if (f.kind == FactorKind::pow_neg_sigma) f.slot = 0;
                if (f.kind == FactorKind::exp_sigma) f.slot = 1;
                if (f.kind == FactorKind::exp_neg_state) f.slot = 2;
            }
        r.space.params = {{"n", 2.0, 6.0, true},
                          {"tau", 0.5, 2.0, false},
                          {"alpha_plus_d1", 3.0, 6.0, false},
                          {"a", 0.05, 1.0, false}};
        r.space.slot_bindings = {{0, "n", 1.0, -1.0},
                                 {1, "alpha_plus_d1", 1.0, 0.0},
                                 {2, "a", 1.0, 0.0}};
        r.space.window_bindings = {{true, "tau", -10.0, 0.0}};
        r.space.min_window_length = 1e-3;
        r.truth_rho.resize(4);
        r.truth_rho << 4.0, 1.0, 4.5, std::numbers::pi / 10.0;
    }
    r.truth = {t};
    return r;
}

BenchmarkRecipe daphnia_recipe() {
    BenchmarkRecipe r;
    r.name = "daphnia";
    r.kinds = {EquationKind::RE, EquationKind::DIDE};  // (b, S)

    const double beta = 4.0;  // post-Hopf regime, see README
    const double gamma = 1.0, growth = 1.0, capacity = 1.0;

    ModelDef& model = r.model;
    model.n = 2;
    model.kinds = r.kinds;
    model.f_inst = [growth, capacity](const Eigen::VectorXd& x) {
        Eigen::VectorXd v(2);
        v[0] = 0.0;
        v[1] = growth * x[1] * (1.0 - x[1] / capacity);
        return v;
    };
    ModelDef::Term term;
    term.a = -4.0;  // -a_dagger
    term.b = -3.0;  // -a_star
    term.kernel = [beta, gamma](double, const Eigen::VectorXd& xs, const Eigen::VectorXd& xc) {
        Eigen::VectorXd v(2);
        v[0] = beta * xc[1] * xs[0];
        v[1] = -gamma * xc[1] * xs[0];
        return v;
    };
    model.terms.push_back(term);
    Eigen::VectorXd h0(2);
    h0 << 0.1, 0.9;
    model.history = constant_history(-4.0, 0.0, h0);

    r.m = 1733;
    r.t_end = 50.0;
    r.train_fraction = 0.8;
    r.nonuniform = true;
    r.jitter = 0.35;
    r.grid_seed = 20240915;
    r.h_solve = 0.01;
    r.K_solve = 64;
    r.gen_kind = QuadKind::trapezoid;
    r.gen_K = 8;
    r.fit_kind = QuadKind::trapezoid;
    r.fit_K = 8;
    r.win_a = -4.0;
    r.win_b = -3.0;
    r.lambda = 1e-3;

    r.library.degree = 2;
    const auto all = enumerate_monomials({{Symbol::sigma, 0},
                                          {Symbol::shifted, 0},
                                          {Symbol::shifted, 1},
                                          {Symbol::current, 0},
                                          {Symbol::current, 1}},
                                         2);
    for (const auto& atom : all) {
        // Atoms whose state part is current-only integrate to a constant
        // times an instantaneous column; keeping them in the distributed
        // block would duplicate columns exactly.
        bool has_shifted = false, has_current = false;
        for (const auto& f : atom.factors) {
            has_shifted = has_shifted || f.kind == FactorKind::shifted_state;
            has_current = has_current || f.kind == FactorKind::current_state;
        }
        if (has_current && !has_shifted) continue;
        r.library.distributed.push_back(atom);
    }
    // Instantaneous candidates only over the differential component S: the
    // renewal output b is definitionally the integral term, and admitting it
    // as an instantaneous atom reintroduces that identity as a degeneracy.
    for (auto& a : enumerate_monomials({{Symbol::current, 1}}, 2))
        if (!a.is_constant()) r.library.instantaneous.push_back(std::move(a));

    EquationTruth tb, ts;
    const std::string sb_label = label(make_atom({shifted(0), current(1)}));  // x1d*x2
    tb.coeffs = {{sb_label, beta}};
    ts.coeffs = {{label(make_atom({current(1)})), growth},
                 {label(make_atom({current(1, 2)})), -growth / capacity},
                 {sb_label, -gamma}};
    r.truth = {tb, ts};

    r.has_optimization = true;
    r.library_template = r.library;
    r.space.params = {{"a_star", 1.0, 5.0, false}, {"a_dagger", 1.5, 8.0, false}};
    r.space.window_bindings = {{true, "a_dagger", -1.0, 0.0}, {false, "a_star", -1.0, 0.0}};
    r.space.min_window_length = 0.5;  // search constrains a_dagger >= a_star + 0.5
    r.truth_rho.resize(2);
    r.truth_rho << 3.0, 4.0;
    return r;
}

// Evaluate the generating right-hand side on the sampled record itself with
// the reference rule: the emitted targets are then exactly representable in
// the matched-discretization library.
Eigen::MatrixXd closure_targets(const BenchmarkRecipe& recipe, const Eigen::VectorXd& times,
                                const Eigen::MatrixXd& states) {
    LinearRecord rec(recipe.model.history, recipe.model.n);
    for (Eigen::Index i = 0; i < times.size(); ++i)
        rec.append(times[i], states.row(i).transpose());
    std::vector<QuadratureRule> rules;
    for (const auto& t : recipe.model.terms)
        rules.push_back(make_rule(recipe.gen_kind, recipe.gen_K, t.a, t.b));

    Eigen::MatrixXd targets(times.size(), recipe.model.n);
    for (Eigen::Index i = 0; i < times.size(); ++i) {
        const Eigen::VectorXd xc = states.row(i).transpose();
        Eigen::VectorXd g = recipe.model.f_inst ? recipe.model.f_inst(xc)
                                                : Eigen::VectorXd::Zero(recipe.model.n);
        for (std::size_t q = 0; q < rules.size(); ++q) {
            const auto& rule = rules[q];
            for (Eigen::Index k = 0; k < rule.size(); ++k)
                g += rule.weights[k] * recipe.model.terms[q].kernel(
                                           rule.nodes[k], rec.at(times[i] + rule.nodes[k]), xc);
        }
        targets.row(i) = g.transpose();
    }
    return targets;
}

Eigen::VectorXd sample_grid(const BenchmarkRecipe& recipe) {
    Eigen::VectorXd t(recipe.m);
    const double h = recipe.t_end / static_cast<double>(recipe.m - 1);
    for (int i = 0; i < recipe.m; ++i) t[i] = h * i;
    if (recipe.nonuniform) {
        std::mt19937_64 gen(recipe.grid_seed);
        std::uniform_real_distribution<double> uni(-1.0, 1.0);
        for (int i = 1; i + 1 < recipe.m; ++i) t[i] += recipe.jitter * h * uni(gen);
        // enforce a minimum gap, sweeping forward
        for (int i = 1; i < recipe.m; ++i)
            if (t[i] < t[i - 1] + 0.05 * h) t[i] = t[i - 1] + 0.05 * h;
        require(t[recipe.m - 1] <= recipe.t_end + h, "benchmark: jittered grid overflow");
        t[recipe.m - 1] = recipe.t_end;
    }
    return t;
}

} // namespace

std::vector<std::string> benchmark_names() {
    return {"logistic_re", "ricker_simple", "ricker_advanced", "daphnia"};
}

BenchmarkRecipe benchmark(const std::string& name) {
    if (name == "logistic_re") return logistic_re_recipe();
    if (name == "ricker_simple") return ricker_recipe(false);
    if (name == "ricker_advanced") return ricker_recipe(true);
    if (name == "daphnia") return daphnia_recipe();
    std::string names;
    for (const auto& n : benchmark_names()) names += (names.empty() ? "" : ", ") + n;
    throw Error("benchmark: unknown name '" + name + "' (valid: " + names + ")");
}

SampledTrajectory generate_dataset(const BenchmarkRecipe& recipe, const GenerateOptions& options) {
    SampledTrajectory out;

    bool all_re = true, all_dd = true;
    for (auto k : recipe.kinds)
        (k == EquationKind::RE ? all_dd : all_re) = false;

    if (all_re) {
        // The march on the sample grid with the reference rule *is* the
        // discretization-consistent dataset: every emitted value satisfies
        // the quadrature functional of its own record exactly.
        const double h = recipe.t_end / static_cast<double>(recipe.m - 1);
        out = solve_re(recipe.model, recipe.t_end, h, recipe.gen_K);
        require(out.rows() == recipe.m, "benchmark: RE sample count mismatch");
    } else {
        SampledTrajectory fine = all_dd
                                     ? solve_dide(recipe.model, recipe.t_end, recipe.h_solve,
                                                  recipe.K_solve)
                                     : solve_coupled(recipe.model, recipe.t_end, recipe.h_solve,
                                                     recipe.K_solve);
        const Eigen::VectorXd grid = sample_grid(recipe);
        LinearRecord fine_rec(fine);
        out.times = grid;
        out.states.resize(grid.size(), recipe.model.n);
        for (Eigen::Index i = 0; i < grid.size(); ++i)
            out.states.row(i) = fine_rec.at(grid[i]).transpose();
        out.history = recipe.model.history;

        if (!all_dd) {
            // Coupled systems: re-march the RE components forward on the
            // sample grid so they satisfy the reference-rule functional of
            // the emitted record; DIDE components keep the accurate samples.
            LinearRecord rec(recipe.model.history, recipe.model.n);
            std::vector<QuadratureRule> rules;
            for (const auto& t : recipe.model.terms)
                rules.push_back(make_rule(recipe.gen_kind, recipe.gen_K, t.a, t.b));
            for (Eigen::Index i = 0; i < grid.size(); ++i) {
                Eigen::VectorXd x = out.states.row(i).transpose();
                Eigen::VectorXd g = recipe.model.f_inst ? recipe.model.f_inst(x)
                                                        : Eigen::VectorXd::Zero(recipe.model.n);
                for (std::size_t q = 0; q < rules.size(); ++q) {
                    const auto& rule = rules[q];
                    for (Eigen::Index k = 0; k < rule.size(); ++k)
                        g += rule.weights[k] *
                             recipe.model.terms[q].kernel(rule.nodes[k],
                                                          rec.at(grid[i] + rule.nodes[k]), x);
                }
                for (std::size_t j = 0; j < recipe.kinds.size(); ++j)
                    if (recipe.kinds[j] == EquationKind::RE)
                        x[static_cast<Eigen::Index>(j)] = g[static_cast<Eigen::Index>(j)];
                out.states.row(i) = x.transpose();
                rec.append(grid[i], x);
            }
        }

        // Derivative targets for the DIDE components, evaluated on the
        // emitted record with the reference rule.
        const Eigen::MatrixXd targets = closure_targets(recipe, out.times, out.states);
        out.derivs = estimate_derivatives(out.times, out.states);
        for (std::size_t j = 0; j < recipe.kinds.size(); ++j)
            if (recipe.kinds[j] == EquationKind::DIDE)
                out.derivs->col(static_cast<Eigen::Index>(j)) =
                    targets.col(static_cast<Eigen::Index>(j));
        out.derivs_exact = true;
    }

    if (options.noise_level > 0.0) {
        out = add_noise(out, options.noise_level, options.noise_seed);
        if (options.smooth_half_width > 0) {
            const SmoothedSignal sm = smooth_local_poly(out.times, out.states,
                                                        options.smooth_half_width,
                                                        options.smooth_degree);
            if (out.derivs) out.derivs = sm.derivs;
            if (options.smooth_states) out.states = sm.states;
        }
    }
    out.validate();
    return out;
}

} // namespace ddsindy
