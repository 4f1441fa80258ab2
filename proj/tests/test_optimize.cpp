#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <numbers>

#include "ddsindy/benchmarks.hpp"
#include "ddsindy/optimize.hpp"

using namespace ddsindy;

TEST_CASE("pso finds the minimum of a 1-d parabola") {
    SwarmConfig cfg;
    cfg.particles = 20;
    cfg.max_evals = 2000;
    cfg.seed = 3;
    const auto res = particle_swarm({{"rho", 0.0, 5.0}}, cfg,
                                    [](const Eigen::VectorXd& x) {
                                        return (x[0] - 2.0) * (x[0] - 2.0);
                                    });
    CHECK(std::abs(res.rho[0] - 2.0) <= 1e-3);
}

TEST_CASE("pso solves rosenbrock to 1e-2 within ten thousand evaluations") {
    SwarmConfig cfg;
    cfg.particles = 30;
    cfg.max_evals = 10000;
    cfg.stall_iters = 200;
    cfg.seed = 5;
    const auto res = particle_swarm({{"x", -2.0, 2.0}, {"y", -2.0, 2.0}}, cfg,
                                    [](const Eigen::VectorXd& v) {
                                        const double a = 1.0 - v[0];
                                        const double b = v[1] - v[0] * v[0];
                                        return a * a + 100.0 * b * b;
                                    });
    CHECK(res.value <= 1e-2);
}

TEST_CASE("pso is deterministic for a fixed seed") {
    SwarmConfig cfg;
    cfg.particles = 12;
    cfg.max_evals = 600;
    cfg.seed = 11;
    auto objective = [](const Eigen::VectorXd& v) {
        return std::sin(3.0 * v[0]) + v[0] * v[0] * 0.1 + std::cos(2.0 * v[1]);
    };
    const auto a = particle_swarm({{"x", -4.0, 4.0}, {"y", -4.0, 4.0}}, cfg, objective);
    const auto b = particle_swarm({{"x", -4.0, 4.0}, {"y", -4.0, 4.0}}, cfg, objective);
    REQUIRE(a.trace.rows.size() == b.trace.rows.size());
    for (std::size_t i = 0; i < a.trace.rows.size(); ++i) {
        CHECK(a.trace.rows[i].best == b.trace.rows[i].best);
        CHECK(a.trace.rows[i].rho == b.trace.rows[i].rho);
    }
    cfg.seed = 12;
    const auto c = particle_swarm({{"x", -4.0, 4.0}, {"y", -4.0, 4.0}}, cfg, objective);
    CHECK(a.rho != c.rho);
}

TEST_CASE("pso respects bounds and the trace never increases") {
    SwarmConfig cfg;
    cfg.particles = 15;
    cfg.max_evals = 900;
    cfg.seed = 7;
    bool inside = true;
    const auto res = particle_swarm({{"x", 1.0, 3.0}}, cfg, [&](const Eigen::VectorXd& v) {
        inside = inside && v[0] >= 1.0 && v[0] <= 3.0;
        return std::cos(5.0 * v[0]) + 0.2 * v[0];
    });
    CHECK(inside);
    for (std::size_t i = 1; i < res.trace.rows.size(); ++i)
        CHECK(res.trace.rows[i].best <= res.trace.rows[i - 1].best);
}

TEST_CASE("penalized regions never win when a feasible point exists") {
    SwarmConfig cfg;
    cfg.particles = 10;
    cfg.max_evals = 500;
    cfg.seed = 2;
    const auto res = particle_swarm({{"x", 0.0, 5.0}}, cfg, [](const Eigen::VectorXd& v) {
        if (v[0] < 2.5) return kInfeasiblePenalty;
        return (v[0] - 3.0) * (v[0] - 3.0);
    });
    CHECK(res.value < kInfeasiblePenalty);
    CHECK(res.rho[0] >= 2.5);
}

TEST_CASE("objective on a synthetic exact-library model") {
    const auto rec = benchmark("logistic_re");
    const auto traj = generate_dataset(rec);
    ObjectiveContext ctx;
    ctx.traj = traj;
    ctx.kinds = rec.kinds;
    ctx.qkind = rec.fit_kind;
    ctx.K = rec.fit_K;
    ctx.win_a = rec.win_a;
    ctx.win_b = rec.win_b;
    ctx.library = rec.library;
    ctx.space.params = {{"w_lo", -4.0, -2.0}, {"w_hi", -1.8, -0.6}};
    ctx.space.window_bindings = {{true, "w_lo", 1.0, 0.0}, {false, "w_hi", 1.0, 0.0}};
    ctx.fit.train_fraction = rec.train_fraction;
    ctx.fit.lambda = rec.lambda;

    SUBCASE("zero residual at the true window") {
        Eigen::VectorXd rho(2);
        rho << -3.0, -1.0;
        CHECK(objective(ctx, rho) <= 1e-6);
    }
    SUBCASE("inverted windows are penalized, not fatal") {
        ObjectiveContext bad = ctx;
        bad.space.params = {{"w_lo", -4.0, 2.0}, {"w_hi", -1.8, -0.6}};
        Eigen::VectorXd rho(2);
        rho << 1.5, -1.0;  // tau1 >= tau2 after binding
        CHECK(objective(bad, rho) == kInfeasiblePenalty);
    }
    SUBCASE("window search recovers the endpoints to 1e-2") {
        SwarmConfig cfg;
        cfg.particles = 20;
        cfg.max_evals = 1200;
        cfg.stall_tol = 1e-8;
        cfg.stall_iters = 30;
        cfg.seed = 4;
        const auto res = optimize_and_identify(ctx, cfg);
        CHECK(std::abs(res.rho[0] + 3.0) <= 1e-2);
        CHECK(std::abs(res.rho[1] + 1.0) <= 1e-2);
        CHECK(res.evals <= 1200 + 1);
        // gbest trace is non-increasing
        for (std::size_t i = 1; i < res.trace.rows.size(); ++i)
            CHECK(res.trace.rows[i].best <= res.trace.rows[i - 1].best);
    }
}

TEST_CASE("ricker post-processing") {
    SUBCASE("worked example near the truth") {
        Eigen::VectorXd rho(4);
        rho << 3.98, 1.0000185, 4.4986, 0.3138;
        const auto p = ricker_postprocess(rho);
        CHECK(p.n == 4);
        CHECK(p.alpha == doctest::Approx(4.0 / 1.0000185).epsilon(1e-12));
        CHECK(p.d1 == doctest::Approx(4.4986 - 4.0 / 1.0000185).epsilon(1e-10));
        CHECK(p.a == doctest::Approx(0.3138));
        CHECK(!p.negative_d1_warning);
    }
    SUBCASE("exact truth is the identity") {
        Eigen::VectorXd rho(4);
        rho << 4.0, 1.0, 4.5, std::numbers::pi / 10.0;
        const auto p = ricker_postprocess(rho);
        CHECK(p.n == 4);
        CHECK(p.tau == 1.0);
        CHECK(p.alpha == 4.0);
        CHECK(p.d1 == doctest::Approx(0.5));
        CHECK(p.a == doctest::Approx(std::numbers::pi / 10.0));
    }
    SUBCASE("n rounds to the nearest integer") {
        Eigen::VectorXd rho(4);
        rho << 4.49, 1.0, 4.5, 0.3;
        CHECK(ricker_postprocess(rho).n == 4);
        rho[0] = 4.51;
        CHECK(ricker_postprocess(rho).n == 5);
    }
    SUBCASE("negative d1 raises the warning flag") {
        Eigen::VectorXd rho(4);
        rho << 4.0, 1.0, 3.5, 0.3;  // alpha = 4 > 3.5
        CHECK(ricker_postprocess(rho).negative_d1_warning);
    }
}

TEST_CASE("integer parameters are rounded only at read-out") {
    const auto rec = benchmark("ricker_advanced");
    ObjectiveContext ctx;
    ctx.traj = generate_dataset(rec);
    ctx.kinds = rec.kinds;
    ctx.qkind = rec.fit_kind;
    ctx.K = rec.fit_K;
    ctx.win_a = rec.win_a;
    ctx.win_b = rec.win_b;
    ctx.library = rec.library_template;
    ctx.space = rec.space;
    ctx.fit.train_fraction = rec.train_fraction;
    ctx.fit.lambda = rec.lambda;

    Eigen::VectorXd rho(4);
    rho << 3.7, 1.0, 4.5, std::numbers::pi / 10.0;
    double a = 0, b = 0;
    LibrarySpec continuous, rounded;
    REQUIRE(bind_parameters(ctx, rho, false, &a, &b, &continuous));
    REQUIRE(bind_parameters(ctx, rho, true, &a, &b, &rounded));
    // continuous binding keeps the fractional power (n - 1 = 2.7), the
    // read-out binding rounds n to 4 first
    bool saw_cont = false, saw_round = false;
    for (const auto& atom : continuous.distributed)
        for (const auto& f : atom.factors)
            if (f.kind == FactorKind::pow_neg_sigma) {
                CHECK(f.theta == doctest::Approx(2.7));
                saw_cont = true;
            }
    for (const auto& atom : rounded.distributed)
        for (const auto& f : atom.factors)
            if (f.kind == FactorKind::pow_neg_sigma) {
                CHECK(f.theta == doctest::Approx(3.0));
                saw_round = true;
            }
    CHECK(saw_cont);
    CHECK(saw_round);
}

TEST_CASE("trace csv has the documented header") {
    OptTrace trace;
    OptTrace::Row row;
    row.iter = 0;
    row.evals = 10;
    row.best = 0.5;
    row.rho = Eigen::VectorXd::Constant(2, 1.5);
    trace.rows.push_back(row);
    const auto path =
        (std::filesystem::temp_directory_path() / "ddsindy_trace.csv").string();
    write_trace_csv(path, trace, {{"a", 0, 1}, {"b", 0, 1}});
    std::ifstream in(path);
    std::string header;
    std::getline(in, header);
    CHECK(header == "iter,evals,best_objective,a,b");
}
