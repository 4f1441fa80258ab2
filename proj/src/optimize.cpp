#include "ddsindy/optimize.hpp"

#include <cmath>
#include <fstream>
#include <random>

namespace ddsindy {

int ParamSpace::index_of(const std::string& name) const {
    for (std::size_t i = 0; i < params.size(); ++i)
        if (params[i].name == name) return static_cast<int>(i);
    throw Error("optimize: unknown parameter '" + name + "'");
}

void ParamSpace::validate() const {
    for (const auto& p : params)
        require(p.lower < p.upper, "optimize: parameter '" + p.name + "' needs lower < upper");
    for (const auto& b : window_bindings) (void)index_of(b.param);
    for (const auto& b : slot_bindings) (void)index_of(b.param);
}

void SwarmConfig::validate() const {
    require(particles >= 2, "optimize: need at least 2 particles");
    require(max_evals >= particles, "optimize: max_evals must cover one iteration");
    require(stall_tol > 0.0, "optimize: stall_tol must be positive");
    require(stall_iters >= 1, "optimize: stall_iters must be >= 1");
}

PsoResult particle_swarm(const std::vector<ParamDef>& params, const SwarmConfig& config,
                         const std::function<double(const Eigen::VectorXd&)>& objective) {
    config.validate();
    require(!params.empty(), "optimize: empty parameter space");
    const int dim = static_cast<int>(params.size());
    const int P = config.particles;

    std::mt19937_64 gen(config.seed);
    std::uniform_real_distribution<double> uni(0.0, 1.0);

    Eigen::VectorXd lo(dim), hi(dim);
    for (int d = 0; d < dim; ++d) {
        lo[d] = params[static_cast<std::size_t>(d)].lower;
        hi[d] = params[static_cast<std::size_t>(d)].upper;
    }
    const Eigen::VectorXd range = hi - lo;

    std::vector<Eigen::VectorXd> x(static_cast<std::size_t>(P)), v(static_cast<std::size_t>(P)),
        pbest(static_cast<std::size_t>(P));
    Eigen::VectorXd pbest_val = Eigen::VectorXd::Constant(P, std::numeric_limits<double>::max());
    Eigen::VectorXd gbest;
    double gbest_val = std::numeric_limits<double>::max();
    int evals = 0;

    PsoResult out;

    // Seeded uniform initialization; velocities start inside a quarter-range.
    for (int i = 0; i < P; ++i) {
        x[static_cast<std::size_t>(i)].resize(dim);
        v[static_cast<std::size_t>(i)].resize(dim);
        for (int d = 0; d < dim; ++d)
            x[static_cast<std::size_t>(i)][d] = lo[d] + range[d] * uni(gen);
        for (int d = 0; d < dim; ++d)
            v[static_cast<std::size_t>(i)][d] = 0.25 * range[d] * (2.0 * uni(gen) - 1.0);
    }
    for (int i = 0; i < P; ++i) {
        const double f = objective(x[static_cast<std::size_t>(i)]);
        ++evals;
        pbest[static_cast<std::size_t>(i)] = x[static_cast<std::size_t>(i)];
        pbest_val[i] = f;
        if (f < gbest_val) {
            gbest_val = f;
            gbest = x[static_cast<std::size_t>(i)];
        }
    }
    out.trace.rows.push_back({0, evals, gbest_val, gbest});

    int stall = 0;
    int iter = 0;
    while (evals + P <= config.max_evals) {
        ++iter;
        // Draws are pre-generated in particle-index order from the seeded
        // stream, so results do not depend on evaluation scheduling.
        std::vector<Eigen::VectorXd> r1(static_cast<std::size_t>(P)),
            r2(static_cast<std::size_t>(P));
        for (int i = 0; i < P; ++i) {
            r1[static_cast<std::size_t>(i)].resize(dim);
            r2[static_cast<std::size_t>(i)].resize(dim);
            for (int d = 0; d < dim; ++d) r1[static_cast<std::size_t>(i)][d] = uni(gen);
            for (int d = 0; d < dim; ++d) r2[static_cast<std::size_t>(i)][d] = uni(gen);
        }

        const double prev_best = gbest_val;
        for (int i = 0; i < P; ++i) {
            auto& xi = x[static_cast<std::size_t>(i)];
            auto& vi = v[static_cast<std::size_t>(i)];
            for (int d = 0; d < dim; ++d) {
                vi[d] = config.inertia * vi[d] +
                        config.cognitive * r1[static_cast<std::size_t>(i)][d] *
                            (pbest[static_cast<std::size_t>(i)][d] - xi[d]) +
                        config.social * r2[static_cast<std::size_t>(i)][d] * (gbest[d] - xi[d]);
                const double vmax = config.vmax_fraction * range[d];
                if (vi[d] > vmax) vi[d] = vmax;
                if (vi[d] < -vmax) vi[d] = -vmax;
                xi[d] += vi[d];
                if (xi[d] < lo[d]) {
                    xi[d] = lo[d];
                    vi[d] = -vi[d];
                } else if (xi[d] > hi[d]) {
                    xi[d] = hi[d];
                    vi[d] = -vi[d];
                }
            }
            const double f = objective(xi);
            ++evals;
            if (f < pbest_val[i]) {
                pbest_val[i] = f;
                pbest[static_cast<std::size_t>(i)] = xi;
            }
            if (f < gbest_val) {
                gbest_val = f;
                gbest = xi;
            }
        }
        out.trace.rows.push_back({iter, evals, gbest_val, gbest});

        // Relative improvement test: objective scales vary over many orders
        // of magnitude across the search.
        if (prev_best - gbest_val < config.stall_tol * std::max(std::abs(prev_best), 1e-12))
            ++stall;
        else
            stall = 0;
        if (stall >= config.stall_iters) break;
    }

    out.rho = gbest;
    out.value = gbest_val;
    out.evals = evals;
    return out;
}

// ---------------------------------------------------------------------------
// Objective

namespace {

double bound_value(const Eigen::VectorXd& rho, const ParamSpace& space, const std::string& name,
                   double scale, double offset, bool round_integers) {
    const int idx = space.index_of(name);
    double p = rho[idx];
    if (round_integers && space.params[static_cast<std::size_t>(idx)].integer) p = std::round(p);
    return scale * p + offset;
}

} // namespace

bool bind_parameters(const ObjectiveContext& ctx, const Eigen::VectorXd& rho,
                     bool round_integers, double* win_a, double* win_b, LibrarySpec* spec) {
    require(rho.size() == static_cast<Eigen::Index>(ctx.space.params.size()),
            "optimize: parameter vector size mismatch");
    *win_a = ctx.win_a;
    *win_b = ctx.win_b;
    for (const auto& b : ctx.space.window_bindings) {
        const double v = bound_value(rho, ctx.space, b.param, b.scale, b.offset, round_integers);
        (b.lower ? *win_a : *win_b) = v;
    }
    *spec = ctx.library;
    for (auto* block : {&spec->distributed, &spec->instantaneous})
        for (auto& atom : *block)
            for (auto& f : atom.factors) {
                if (f.slot < 0) continue;
                for (const auto& b : ctx.space.slot_bindings)
                    if (b.slot == f.slot) {
                        f.theta = bound_value(rho, ctx.space, b.param, b.scale, b.offset,
                                              round_integers);
                        f.slot = -1;
                    }
            }
    if (spec->has_unresolved_slot())
        throw Error("optimize: library slot without a binding");
    // Feasibility: a proper, non-positive window of at least the minimum length.
    if (!spec->distributed.empty()) {
        if (!(*win_a < *win_b) || *win_b > 0.0) return false;
        if (*win_b - *win_a < ctx.space.min_window_length) return false;
    }
    return true;
}

double objective(const ObjectiveContext& ctx, const Eigen::VectorXd& rho) {
    double a = 0.0, b = 0.0;
    LibrarySpec spec;
    if (!bind_parameters(ctx, rho, /*round_integers=*/false, &a, &b, &spec))
        return kInfeasiblePenalty;
    try {
        const FitResult fit =
            dd_sindy(ctx.traj, ctx.kinds, a, b, ctx.qkind, ctx.K, spec, ctx.fit);
        // Rows the candidate window cannot cover contribute their full
        // target as residual, so shrinking the covered row set can never
        // lower the error.
        const Eigen::MatrixXd targets = full_targets(ctx.traj, ctx.kinds);
        double sse = fit.report.residuals.squaredNorm();
        std::size_t next = 0;
        for (Eigen::Index i = 0; i < ctx.traj.rows(); ++i) {
            if (next < fit.report.rows.size() &&
                fit.report.rows[next] == static_cast<int>(i)) {
                ++next;
                continue;
            }
            sse += targets.row(i).squaredNorm();
        }
        return std::sqrt(sse / static_cast<double>(ctx.traj.rows() * ctx.traj.cols()));
    } catch (const Error&) {
        // window outside data coverage and similar: recoverable by the swarm
        return kInfeasiblePenalty;
    }
}

OptimizeResult optimize_and_identify(const ObjectiveContext& ctx, const SwarmConfig& config) {
    ctx.space.validate();
    auto fn = [&ctx](const Eigen::VectorXd& rho) { return objective(ctx, rho); };
    const PsoResult pso = particle_swarm(ctx.space.params, config, fn);

    double a = 0.0, b = 0.0;
    LibrarySpec spec;
    require(bind_parameters(ctx, pso.rho, /*round_integers=*/true, &a, &b, &spec),
            "optimize: optimum is infeasible");
    const FitResult fit = dd_sindy(ctx.traj, ctx.kinds, a, b, ctx.qkind, ctx.K, spec, ctx.fit);

    OptimizeResult out;
    out.rho = pso.rho;
    out.model = fit.model;
    out.report = fit.report;
    out.trace = pso.trace;
    out.evals = pso.evals + 1;
    return out;
}

RickerParams ricker_postprocess(const Eigen::VectorXd& rho) {
    require(rho.size() == 4, "ricker_postprocess: expected slots (n, tau, alpha+d1, a)");
    RickerParams out;
    out.n = static_cast<int>(std::llround(rho[0]));
    out.tau = rho[1];
    out.alpha = static_cast<double>(out.n) / out.tau;
    out.d1 = rho[2] - out.alpha;
    out.a = rho[3];
    out.negative_d1_warning = out.d1 < 0.0;
    return out;
}

void write_trace_csv(const std::string& path, const OptTrace& trace,
                     const std::vector<ParamDef>& params) {
    std::ofstream out(path);
    require(out.good(), "trace: cannot open '" + path + "' for writing");
    out.precision(17);
    out << "iter,evals,best_objective";
    for (const auto& p : params) out << "," << p.name;
    out << "\n";
    for (const auto& row : trace.rows) {
        out << row.iter << "," << row.evals << "," << row.best;
        for (Eigen::Index d = 0; d < row.rho.size(); ++d) out << "," << row.rho[d];
        out << "\n";
    }
}

} // namespace ddsindy
