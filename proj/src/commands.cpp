#include "ddsindy/commands.hpp"

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>

#include <json.hpp>

#include "ddsindy/benchmarks.hpp"
#include "ddsindy/identify.hpp"
#include "ddsindy/optimize.hpp"

namespace fs = std::filesystem;

namespace ddsindy {

namespace {

std::string resolve_outdir(const IniFile& ini) {
    std::string dir = ini.get("report", "outdir", "out");
    if (!fs::path(dir).is_absolute()) {
        if (const char* root = std::getenv("DDSINDY_OUT_ROOT"))
            dir = (fs::path(root) / dir).string();
    }
    fs::create_directories(dir);
    return dir;
}

void copy_config(const IniFile& ini, const std::string& outdir) {
    std::ofstream out(fs::path(outdir) / "config.ini");
    out << ini.render();
}

struct DataBundle {
    SampledTrajectory traj;
    std::vector<EquationKind> kinds;
    std::optional<BenchmarkRecipe> recipe;
    GenerateOptions gen;
};

GenerateOptions generate_options(const IniFile& ini) {
    GenerateOptions g;
    g.noise_level = ini.num("data", "noise", 0.0);
    g.noise_seed = static_cast<std::uint64_t>(ini.num("data", "noise_seed", 1.0));
    g.smooth_half_width = ini.integer("data", "smooth_half_width", 0);
    g.smooth_degree = ini.integer("data", "smooth_degree", 3);
    g.smooth_states = ini.flag("data", "smooth_states", false);
    return g;
}

DataBundle load_data(const IniFile& ini) {
    DataBundle out;
    out.gen = generate_options(ini);
    const std::string bench = ini.get("data", "benchmark");
    const std::string path = ini.get("data", "path");
    if (!bench.empty()) {
        BenchmarkRecipe recipe;
        try {
            recipe = benchmark(bench);
        } catch (const Error& e) {
            throw ConfigError(e.what());
        }
        if (ini.has("data", "m")) recipe.m = ini.integer("data", "m", recipe.m);
        if (ini.has("data", "split"))
            recipe.train_fraction = ini.num("data", "split", recipe.train_fraction);
        out.traj = generate_dataset(recipe, out.gen);
        out.kinds = recipe.kinds;
        out.recipe = std::move(recipe);
    } else if (!path.empty()) {
        out.traj = load_trajectory(path);
        const std::string kinds_text = ini.get("data", "kinds");
        if (kinds_text.empty())
            throw ConfigError("config: [data] kinds is required for file datasets");
        for (const auto& tok : split_list(kinds_text, ' '))
            out.kinds.push_back(equation_kind_from_string(tok));
        if (out.kinds.size() == 1 && out.traj.cols() > 1)
            out.kinds.assign(static_cast<std::size_t>(out.traj.cols()), out.kinds[0]);
        require(static_cast<Eigen::Index>(out.kinds.size()) == out.traj.cols(),
                "config: [data] kinds count must match state columns");
    } else {
        throw ConfigError("config: [data] needs either benchmark or path");
    }
    return out;
}

Symbol parse_symbol(const std::string& tok) {
    const Atom atom = parse_label(tok);
    require(atom.factors.size() == 1 && atom.factors[0].power == 1,
            "config: bad library symbol '" + tok + "'");
    const Factor& f = atom.factors[0];
    switch (f.kind) {
        case FactorKind::delay_power: return Symbol{Symbol::sigma, 0};
        case FactorKind::shifted_state: return Symbol{Symbol::shifted, f.component};
        case FactorKind::current_state: return Symbol{Symbol::current, f.component};
        default: throw ConfigError("config: bad library symbol '" + tok + "'");
    }
}

// Custom factor grammar: exp_sigma(ARG) | exp_neg_state(j, ARG) |
// pow_neg_sigma(ARG); ARG = number | optimize:EXPR. Slot ids are assigned in
// encounter order; the affine expressions are returned for binding.
struct CustomParse {
    std::vector<Factor> factors;
};

Factor parse_custom_factor(const std::string& text, std::vector<AffineExpr>& slots) {
    const auto lp = text.find('(');
    require(lp != std::string::npos && text.back() == ')',
            "config: bad custom factor '" + text + "'");
    const std::string head = text.substr(0, lp);
    const auto args = split_list(text.substr(lp + 1, text.size() - lp - 2), ',');

    auto parse_arg = [&](const std::string& arg, Factor& f) {
        if (arg.rfind("optimize:", 0) == 0) {
            slots.push_back(parse_affine(arg.substr(9)));
            f.slot = static_cast<int>(slots.size()) - 1;
        } else {
            f.theta = std::stod(arg);
        }
    };

    Factor f{};
    if (head == "exp_sigma") {
        require(args.size() == 1, "config: exp_sigma takes one argument");
        f.kind = FactorKind::exp_sigma;
        parse_arg(args[0], f);
    } else if (head == "exp_neg_state") {
        require(args.size() == 2, "config: exp_neg_state takes (component, theta)");
        f.kind = FactorKind::exp_neg_state;
        f.component = std::stoi(args[0]) - 1;
        parse_arg(args[1], f);
    } else if (head == "pow_neg_sigma") {
        require(args.size() == 1, "config: pow_neg_sigma takes one argument");
        f.kind = FactorKind::pow_neg_sigma;
        parse_arg(args[0], f);
    } else {
        throw ConfigError("config: unknown custom factor '" + head + "'");
    }
    return f;
}

struct LibraryBuild {
    LibrarySpec spec;
    std::vector<AffineExpr> slot_exprs;  // slot id -> expression
};

LibraryBuild build_library(const IniFile& ini) {
    LibraryBuild out;
    const int degree = ini.integer("library", "degree", 2);
    out.spec.degree = degree;
    std::vector<Symbol> symbols;
    for (const auto& tok : split_list(ini.get("library", "symbols", "sig, x1d")))
        symbols.push_back(parse_symbol(tok));
    const auto base = enumerate_monomials(symbols, degree);
    out.spec.distributed = base;

    for (int c = 1;; ++c) {
        const std::string key = "custom" + std::to_string(c);
        if (!ini.has("library", key)) break;
        std::vector<Factor> extra;
        for (const auto& tok : split_list(ini.get("library", key), '*'))
            extra.push_back(parse_custom_factor(tok, out.slot_exprs));
        for (const auto& a : base) {
            Atom b = a;
            b.factors.insert(b.factors.end(), extra.begin(), extra.end());
            out.spec.distributed.push_back(b);
        }
    }

    const int inst_degree = ini.integer("library", "inst_degree", 0);
    if (inst_degree > 0) {
        std::vector<Symbol> cur;
        std::vector<bool> seen;
        for (const auto& s : symbols) {
            if (s.kind == Symbol::sigma) continue;
            const std::size_t j = static_cast<std::size_t>(s.component);
            if (seen.size() <= j) seen.resize(j + 1, false);
            if (!seen[j]) {
                cur.push_back(Symbol{Symbol::current, s.component});
                seen[j] = true;
            }
        }
        for (auto& a : enumerate_monomials(cur, inst_degree))
            if (!a.is_constant()) out.spec.instantaneous.push_back(std::move(a));
    }
    return out;
}

struct FitSetup {
    LibrarySpec library;
    QuadKind qkind = QuadKind::trapezoid;
    int K = 0;
    double win_a = 0.0, win_b = 0.0;
    bool window_optimized = false;
    FitOptions opts;
    std::vector<AffineExpr> slot_exprs;
    std::string method;  // dd | bb | integral_ode
};

FitSetup build_fit_setup(const IniFile& ini, const DataBundle& data) {
    FitSetup s;
    if (ini.has_section("library")) {
        auto built = build_library(ini);
        s.library = std::move(built.spec);
        s.slot_exprs = std::move(built.slot_exprs);
    } else if (data.recipe) {
        s.library = data.recipe->library;
    } else {
        throw ConfigError("config: [library] section required for file datasets");
    }

    s.qkind = data.recipe ? data.recipe->fit_kind : QuadKind::trapezoid;
    s.K = data.recipe ? data.recipe->fit_K : 64;
    if (ini.has("quadrature", "kind")) {
        try {
            s.qkind = quad_kind_from_string(ini.get("quadrature", "kind"));
        } catch (const Error& e) {
            throw ConfigError(e.what());
        }
    }
    s.K = ini.integer("quadrature", "K", s.K);

    if (data.recipe) {
        s.win_a = data.recipe->win_a;
        s.win_b = data.recipe->win_b;
    }
    const std::string window = ini.get("quadrature", "window");
    if (window == "optimize") {
        s.window_optimized = true;
    } else if (!window.empty()) {
        const auto parts = split_list(window, ' ');
        if (parts.size() != 2) throw ConfigError("config: window needs two endpoints");
        s.win_a = std::stod(parts[0]);
        s.win_b = std::stod(parts[1]);
    }

    s.opts.train_fraction =
        ini.num("data", "split", data.recipe ? data.recipe->train_fraction : 0.8);
    try {
        s.opts.solver = solver_kind_from_string(ini.get("solver", "solver", "stls"));
    } catch (const Error& e) {
        throw ConfigError(e.what());
    }
    s.opts.lambda = ini.num("solver", "lambda", data.recipe ? data.recipe->lambda : 1e-2);
    s.opts.max_iters = ini.integer("solver", "max_iters", 25);
    s.opts.normalize_columns = ini.flag("solver", "normalize_columns", true);
    s.method = ini.get("solver", "method", "dd");
    return s;
}

// ---------------------------------------------------------------------------
// Reports

double max_coefficient_error(const SparseModel& model, const std::vector<EquationTruth>& truth) {
    double worst = 0.0;
    const auto atoms = [&] {
        std::vector<Atom> a = model.spec.distributed;
        a.insert(a.end(), model.spec.instantaneous.begin(), model.spec.instantaneous.end());
        return a;
    }();
    for (Eigen::Index j = 0; j < model.components(); ++j)
        for (std::size_t c = 0; c < atoms.size(); ++c) {
            const double want = truth[static_cast<std::size_t>(j)].lookup(label(atoms[c]));
            worst = std::max(worst,
                             std::abs(model.xi(static_cast<Eigen::Index>(c), j) - want));
        }
    return worst;
}

void write_report(const std::string& outdir, const IniFile& ini, const DataBundle& data,
                  const FitSetup& setup, const FitResult& fit) {
    const auto& model = fit.model;
    const int precision = ini.integer("report", "precision", 6);

    std::ofstream txt(fs::path(outdir) / "report.txt");
    txt << "# identification report\n";
    txt << "method: " << setup.method << "\n";
    txt << "solver: " << to_string(setup.opts.solver) << ", lambda = " << setup.opts.lambda
        << "\n";
    if (model.distributed_cols > 0)
        txt << "quadrature: " << to_string(model.qkind) << " K=" << model.K << " on ["
            << model.win_a << ", " << model.win_b << "]\n";
    txt << "rows retained: " << fit.report.rows.size() << " (train " << fit.report.train_count
        << ")\n";
    txt << "derivative source: " << fit.report.deriv_source << "\n";
    txt << "rmse_train = " << fit.report.rmse_train << "\n";
    txt << "rmse_val = " << fit.report.rmse_val << "\n";
    txt << "rmse_combined = " << fit.report.rmse_combined << "\n";
    if (fit.report.rank_warning) txt << "warning: rank-deficient support submatrix\n";
    if (fit.report.empty_support) txt << "warning: empty support in at least one equation\n";
    txt << "\n" << render_model(model, precision);

    std::ofstream csv(fs::path(outdir) / "report.csv");
    csv.precision(17);
    csv << "key,value\n";
    if (data.recipe) csv << "benchmark," << data.recipe->name << "\n";
    csv << "method," << setup.method << "\n";
    csv << "m," << data.traj.rows() << "\n";
    csv << "kind," << to_string(model.qkind) << "\n";
    csv << "K," << model.K << "\n";
    csv << "lambda," << setup.opts.lambda << "\n";
    csv << "split," << setup.opts.train_fraction << "\n";
    csv << "noise," << data.gen.noise_level << "\n";
    csv << "deriv_source," << fit.report.deriv_source << "\n";
    csv << "rows_retained," << fit.report.rows.size() << "\n";
    csv << "rmse_train," << fit.report.rmse_train << "\n";
    csv << "rmse_val," << fit.report.rmse_val << "\n";
    csv << "rmse_combined," << fit.report.rmse_combined << "\n";
    if (data.recipe && !data.recipe->truth.empty() && !model.black_box)
        csv << "coeff_err_max," << max_coefficient_error(model, data.recipe->truth) << "\n";

    const auto atoms = [&] {
        std::vector<Atom> a = model.spec.distributed;
        a.insert(a.end(), model.spec.instantaneous.begin(), model.spec.instantaneous.end());
        return a;
    }();
    for (Eigen::Index j = 0; j < model.components(); ++j)
        for (std::size_t c = 0; c < atoms.size(); ++c) {
            const double v = model.xi(static_cast<Eigen::Index>(c), j);
            if (v == 0.0) continue;
            const std::string block = static_cast<int>(c) < model.distributed_cols
                                          ? "distributed"
                                          : "instantaneous";
            csv << "coeff," << (j + 1) << "," << block << "," << label(atoms[c]) << "," << v;
            if (data.recipe && !data.recipe->truth.empty() && !model.black_box) {
                const double want =
                    data.recipe->truth[static_cast<std::size_t>(j)].lookup(label(atoms[c]));
                csv << "," << want << "," << std::abs(v - want);
            }
            csv << "\n";
        }
}

void write_fit_csv(const std::string& outdir, const DataBundle& data, const SparseModel& model) {
    const DesignBundle bundle = build_design(data.traj, model.kinds, model.spec, model.win_a,
                                             model.win_b, model.qkind, model.K);
    const Eigen::MatrixXd pred = bundle.lib.matrix * model.xi;
    std::ofstream out(fs::path(outdir) / "fit_targets.csv");
    out.precision(17);
    out << "t";
    for (Eigen::Index j = 0; j < model.components(); ++j)
        out << ",target" << (j + 1) << ",pred" << (j + 1);
    out << "\n";
    for (std::size_t r = 0; r < bundle.lib.rows.size(); ++r) {
        out << data.traj.times[bundle.lib.rows[r]];
        for (Eigen::Index j = 0; j < model.components(); ++j)
            out << "," << bundle.targets(static_cast<Eigen::Index>(r), j) << ","
                << pred(static_cast<Eigen::Index>(r), j);
        out << "\n";
    }
}

void write_kernel_csv(const std::string& outdir, const DataBundle& data,
                      const SparseModel& model) {
    if (model.black_box || model.distributed_cols == 0) return;
    const int points = 200;
    Eigen::VectorXd sigmas(points);
    for (int i = 0; i < points; ++i)
        sigmas[i] = model.win_a + (model.win_b - model.win_a) * i / (points - 1.0);
    const Eigen::VectorXd x_ref = data.traj.states.colwise().mean();
    const Eigen::MatrixXd ghat = evaluate_kernel(model, sigmas, x_ref, x_ref);

    std::ofstream out(fs::path(outdir) / "kernel.csv");
    out.precision(17);
    out << "sigma";
    for (Eigen::Index j = 0; j < model.components(); ++j) out << ",ghat" << (j + 1);
    if (data.recipe)
        for (Eigen::Index j = 0; j < model.components(); ++j) out << ",gtrue" << (j + 1);
    out << "\n";
    for (int i = 0; i < points; ++i) {
        out << sigmas[i];
        for (Eigen::Index j = 0; j < model.components(); ++j) out << "," << ghat(i, j);
        if (data.recipe) {
            Eigen::VectorXd g = Eigen::VectorXd::Zero(model.components());
            for (const auto& term : data.recipe->model.terms)
                if (sigmas[i] >= term.a && sigmas[i] <= term.b)
                    g += term.kernel(sigmas[i], x_ref, x_ref);
            if (data.recipe->model.f_inst) {
                // instantaneous parts are not part of the kernel
            }
            for (Eigen::Index j = 0; j < model.components(); ++j) out << "," << g[j];
        }
        out << "\n";
    }
}

void write_resim_csv(const std::string& outdir, const DataBundle& data,
                     const SparseModel& model) {
    if (model.black_box || !data.traj.history) return;
    try {
        const double h = (data.traj.times[data.traj.rows() - 1] - data.traj.times[0]) /
                         std::max<double>(1.0, 4.0 * static_cast<double>(data.traj.rows() - 1));
        const SampledTrajectory resim =
            simulate_identified(model, *data.traj.history, data.traj.times[0],
                                data.traj.times[data.traj.rows() - 1], h);
        LinearRecord rec(resim);
        std::ofstream out(fs::path(outdir) / "resim.csv");
        out.precision(17);
        out << "t";
        for (Eigen::Index j = 0; j < model.components(); ++j)
            out << ",data" << (j + 1) << ",model" << (j + 1);
        out << "\n";
        for (Eigen::Index i = 0; i < data.traj.rows(); ++i) {
            out << data.traj.times[i];
            const Eigen::VectorXd m = rec.at(std::min(data.traj.times[i], rec.max_time()));
            for (Eigen::Index j = 0; j < model.components(); ++j)
                out << "," << data.traj.states(i, j) << "," << m[j];
            out << "\n";
        }
    } catch (const Error& e) {
        std::cerr << "note: resimulation skipped (" << e.what() << ")\n";
    }
}

ObjectiveContext build_objective_context(const IniFile& ini, const DataBundle& data,
                                         const FitSetup& setup) {
    ObjectiveContext ctx;
    ctx.traj = data.traj;
    ctx.kinds = data.kinds;
    ctx.qkind = setup.qkind;
    ctx.K = setup.K;
    ctx.win_a = setup.win_a;
    ctx.win_b = setup.win_b;
    ctx.fit = setup.opts;

    const bool use_recipe_space = data.recipe && data.recipe->has_optimization &&
                                  !ini.has("optimize", "param");
    if (use_recipe_space) {
        ctx.library = data.recipe->library_template;
        ctx.space = data.recipe->space;
    } else {
        ctx.library = setup.library;
        for (const auto& text : ini.get_all("optimize", "param")) {
            const auto parts = split_list(text, ' ');
            if (parts.size() < 3) throw ConfigError("config: param needs 'name lo hi [int]'");
            ParamDef p;
            p.name = parts[0];
            p.lower = std::stod(parts[1]);
            p.upper = std::stod(parts[2]);
            p.integer = parts.size() > 3 && parts[3] == "int";
            ctx.space.params.push_back(p);
        }
        for (const auto& text : ini.get_all("optimize", "bind")) {
            const auto sp = text.find(' ');
            if (sp == std::string::npos)
                throw ConfigError("config: bind needs 'window_lower|window_upper expr'");
            const std::string target = text.substr(0, sp);
            const AffineExpr expr = parse_affine(text.substr(sp + 1));
            if (expr.is_constant) {
                (target == "window_lower" ? ctx.win_a : ctx.win_b) = expr.constant;
                continue;
            }
            WindowBinding b;
            b.lower = target == "window_lower";
            if (!b.lower && target != "window_upper")
                throw ConfigError("config: unknown bind target '" + target + "'");
            b.param = expr.param;
            b.scale = expr.scale;
            b.offset = expr.offset;
            ctx.space.window_bindings.push_back(b);
        }
        for (std::size_t s = 0; s < setup.slot_exprs.size(); ++s) {
            const auto& e = setup.slot_exprs[s];
            require(!e.is_constant, "config: optimize: slot expression needs a parameter");
            ctx.space.slot_bindings.push_back(
                {static_cast<int>(s), e.param, e.scale, e.offset});
        }
        ctx.space.min_window_length = ini.num("optimize", "min_window_length", 1e-6);
    }
    return ctx;
}

SwarmConfig build_swarm_config(const IniFile& ini, const DataBundle& data) {
    SwarmConfig cfg;
    if (data.recipe && data.recipe->has_optimization) cfg = data.recipe->swarm;
    cfg.particles = ini.integer("optimize", "particles", cfg.particles);
    cfg.inertia = ini.num("optimize", "inertia", cfg.inertia);
    cfg.cognitive = ini.num("optimize", "cognitive", cfg.cognitive);
    cfg.social = ini.num("optimize", "social", cfg.social);
    cfg.max_evals = ini.integer("optimize", "max_evals", cfg.max_evals);
    cfg.stall_tol = ini.num("optimize", "stall_tol", cfg.stall_tol);
    cfg.stall_iters = ini.integer("optimize", "stall_iters", cfg.stall_iters);
    cfg.seed = static_cast<std::uint64_t>(ini.num("optimize", "seed", 1.0));
    return cfg;
}

} // namespace

void apply_override(IniFile& ini, const std::string& section, const std::string& key,
                    const std::string& value) {
    ini.set(section, key, value);
}

int cmd_simulate(const IniFile& ini) {
    try {
        const std::string outdir = resolve_outdir(ini);
        copy_config(ini, outdir);
        const DataBundle data = load_data(ini);
        require(static_cast<bool>(data.recipe),
                "simulate: [data] benchmark is required for dataset synthesis");
        const std::string path = (fs::path(outdir) / "dataset.csv").string();
        save_trajectory(path, data.traj);

        nlohmann::json meta;
        meta["benchmark"] = data.recipe->name;
        meta["m"] = data.recipe->m;
        meta["t_end"] = data.recipe->t_end;
        meta["train_fraction"] = data.recipe->train_fraction;
        meta["h_solve"] = data.recipe->h_solve;
        meta["K_solve"] = data.recipe->K_solve;
        meta["reference_rule"] = to_string(data.recipe->gen_kind);
        meta["reference_K"] = data.recipe->gen_K;
        meta["noise"] = data.gen.noise_level;
        meta["noise_seed"] = data.gen.noise_seed;
        meta["nonuniform"] = data.recipe->nonuniform;
        std::ofstream(fs::path(outdir) / "dataset_meta.json") << meta.dump(2) << "\n";
        std::cout << "wrote " << path << "\n";
        return 0;
    } catch (const ConfigError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    }
}

int cmd_identify(const IniFile& ini) {
    std::string stage = "setup";
    try {
        const std::string outdir = resolve_outdir(ini);
        copy_config(ini, outdir);
        const DataBundle data = load_data(ini);
        const FitSetup setup = build_fit_setup(ini, data);
        require(!setup.window_optimized,
                "identify: window = optimize requires the optimize command");

        stage = "fit";
        FitResult fit;
        if (setup.method == "dd") {
            fit = dd_sindy(data.traj, data.kinds, setup.win_a, setup.win_b, setup.qkind, setup.K,
                           setup.library, setup.opts);
        } else if (setup.method == "bb") {
            const QuadratureRule rule =
                make_rule(setup.qkind, setup.K, setup.win_a, setup.win_b);
            const int degree = data.recipe ? data.recipe->bb_degree
                                           : ini.integer("library", "degree", 1);
            fit = bb_sindy(data.traj, rule.nodes, degree, setup.opts);
        } else if (setup.method == "integral_ode") {
            fit = integral_sindy_ode(data.traj, ini.integer("library", "degree", 3), setup.opts);
        } else {
            throw ConfigError("config: unknown method '" + setup.method +
                              "' (expected dd|bb|integral_ode)");
        }

        stage = "write";
        write_model_file((fs::path(outdir) / "model.txt").string(), fit.model);
        write_report(outdir, ini, data, setup, fit);
        write_fit_csv(outdir, data, fit.model);
        write_kernel_csv(outdir, data, fit.model);
        write_resim_csv(outdir, data, fit.model);
        std::cout << render_model(fit.model, ini.integer("report", "precision", 6));
        return 0;
    } catch (const ConfigError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error in stage '" << stage << "': " << e.what() << "\n";
        return 3;
    }
}

int cmd_optimize(const IniFile& ini) {
    std::string stage = "setup";
    try {
        const std::string outdir = resolve_outdir(ini);
        copy_config(ini, outdir);
        const DataBundle data = load_data(ini);
        FitSetup setup = build_fit_setup(ini, data);
        const bool recipe_space = data.recipe && data.recipe->has_optimization;
        if (!recipe_space && !ini.has_section("optimize"))
            throw ConfigError("optimize: [optimize] section required");

        const ObjectiveContext ctx = build_objective_context(ini, data, setup);
        const SwarmConfig swarm = build_swarm_config(ini, data);

        stage = "optimize";
        const OptimizeResult res = optimize_and_identify(ctx, swarm);

        stage = "write";
        write_trace_csv((fs::path(outdir) / "trace.csv").string(), res.trace, ctx.space.params);
        write_model_file((fs::path(outdir) / "model.txt").string(), res.model);
        {
            std::ofstream out(fs::path(outdir) / "optimum.txt");
            out.precision(17);
            for (std::size_t d = 0; d < ctx.space.params.size(); ++d)
                out << ctx.space.params[d].name << " = " << res.rho[static_cast<Eigen::Index>(d)]
                    << "\n";
            out << "objective = " << res.report.rmse_combined << "\n";
            out << "dd_sindy_calls = " << res.evals << "\n";
            if (data.recipe && data.recipe->ricker_post) {
                const RickerParams p = ricker_postprocess(res.rho);
                out << "n = " << p.n << "\nalpha = " << p.alpha << "\nd1 = " << p.d1
                    << "\na = " << p.a << "\ntau = " << p.tau << "\n";
                if (p.negative_d1_warning) out << "warning: d1 < 0\n";
            }
        }
        FitResult fit;
        fit.model = res.model;
        fit.report = res.report;
        write_report(outdir, ini, data, setup, fit);
        write_fit_csv(outdir, data, res.model);
        write_kernel_csv(outdir, data, res.model);
        std::cout << "optimum:";
        for (std::size_t d = 0; d < ctx.space.params.size(); ++d)
            std::cout << " " << ctx.space.params[d].name << "="
                      << res.rho[static_cast<Eigen::Index>(d)];
        std::cout << " objective=" << res.report.rmse_combined << " calls=" << res.evals << "\n";
        return 0;
    } catch (const ConfigError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error in stage '" << stage << "': " << e.what() << "\n";
        return 3;
    }
}

int cmd_report(const std::vector<std::string>& inputs, const std::string& out_prefix, bool sweep) {
    try {
        if (inputs.empty()) throw ConfigError("report: no inputs");
        struct Run {
            std::string name;
            std::map<std::string, std::string> keys;
            std::vector<std::string> coeff_rows;
        };
        std::vector<Run> runs;
        for (const auto& input : inputs) {
            fs::path p(input);
            if (fs::is_directory(p)) p /= "report.csv";
            std::ifstream in(p);
            if (!in.good()) throw ConfigError("report: cannot open '" + p.string() + "'");
            Run run;
            run.name = fs::path(input).filename().string();
            std::string line;
            std::getline(in, line);  // header
            while (std::getline(in, line)) {
                if (line.empty()) continue;
                if (line.rfind("coeff,", 0) == 0) {
                    run.coeff_rows.push_back(line);
                    continue;
                }
                const auto comma = line.find(',');
                if (comma != std::string::npos)
                    run.keys[line.substr(0, comma)] = line.substr(comma + 1);
            }
            runs.push_back(std::move(run));
        }

        std::ofstream csv(out_prefix + ".csv");
        if (sweep) {
            csv << "run,kind,K,m,lambda,noise,coeff_err_max,rmse_train,rmse_val,rmse_combined\n";
            for (const auto& run : runs) {
                auto k = [&](const std::string& key) {
                    const auto it = run.keys.find(key);
                    return it == run.keys.end() ? std::string() : it->second;
                };
                csv << run.name << "," << k("kind") << "," << k("K") << "," << k("m") << ","
                    << k("lambda") << "," << k("noise") << "," << k("coeff_err_max") << ","
                    << k("rmse_train") << "," << k("rmse_val") << "," << k("rmse_combined")
                    << "\n";
            }
        } else {
            std::vector<std::string> keys;
            for (const auto& run : runs)
                for (const auto& [k, v] : run.keys)
                    if (std::find(keys.begin(), keys.end(), k) == keys.end()) keys.push_back(k);
            csv << "key";
            for (const auto& run : runs) csv << "," << run.name;
            csv << "\n";
            for (const auto& key : keys) {
                csv << key;
                for (const auto& run : runs) {
                    const auto it = run.keys.find(key);
                    csv << "," << (it == run.keys.end() ? "" : it->second);
                }
                csv << "\n";
            }
            std::ofstream coeffs(out_prefix + "_coefficients.csv");
            coeffs << "run,eq,block,label,value,truth,abs_err\n";
            for (const auto& run : runs)
                for (const auto& row : run.coeff_rows)
                    coeffs << run.name << "," << row.substr(6) << "\n";
        }
        std::cout << "wrote " << out_prefix << ".csv\n";
        return 0;
    } catch (const ConfigError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    }
}

} // namespace ddsindy
