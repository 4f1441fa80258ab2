#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <numbers>

#include "ddsindy/benchmarks.hpp"
#include "ddsindy/identify.hpp"
#include "ddsindy/simulate.hpp"

using namespace ddsindy;

namespace {

std::string temp_path(const std::string& name) {
    return (std::filesystem::temp_directory_path() / name).string();
}

double coefficient_error(const SparseModel& model, const std::vector<EquationTruth>& truth) {
    double worst = 0.0;
    for (Eigen::Index j = 0; j < model.components(); ++j)
        for (Eigen::Index c = 0; c < model.xi.rows(); ++c)
            worst = std::max(worst, std::abs(model.xi(c, j) -
                                             truth[static_cast<std::size_t>(j)].lookup(
                                                 model.labels[static_cast<std::size_t>(c)])));
    return worst;
}

} // namespace

TEST_CASE("closure oracle: matched discretization reproduces the generating model") {
    const auto rec = benchmark("logistic_re");
    const auto traj = generate_dataset(rec);
    FitOptions opts;
    opts.train_fraction = rec.train_fraction;
    opts.lambda = rec.lambda;
    const auto fit = dd_sindy(traj, rec.kinds, rec.win_a, rec.win_b, rec.fit_kind, rec.fit_K,
                              rec.library, opts);
    CHECK(coefficient_error(fit.model, rec.truth) <= 1e-6);
    int active = 0;
    for (Eigen::Index c = 0; c < fit.model.xi.rows(); ++c) active += fit.model.xi(c, 0) != 0.0;
    CHECK(active == 4);
    CHECK(fit.report.rmse_combined <= 1e-10);
    CHECK(fit.report.deriv_source == "states");
}

TEST_CASE("switching RE to DIDE changes only the regression target") {
    auto rec = benchmark("ricker_simple");
    auto traj = generate_dataset(rec);
    const auto as_dide = build_design(traj, {EquationKind::DIDE}, rec.library, rec.win_a,
                                      rec.win_b, rec.fit_kind, rec.fit_K);
    const auto as_re = build_design(traj, {EquationKind::RE}, rec.library, rec.win_a, rec.win_b,
                                    rec.fit_kind, rec.fit_K);
    CHECK(as_dide.lib.matrix == as_re.lib.matrix);
    CHECK(as_dide.targets != as_re.targets);
    for (std::size_t r = 0; r < as_re.lib.rows.size(); ++r)
        CHECK(as_re.targets(static_cast<Eigen::Index>(r), 0) ==
              traj.states(as_re.lib.rows[r], 0));
}

TEST_CASE("reconstruction error") {
    const auto rec = benchmark("logistic_re");
    const auto traj = generate_dataset(rec);
    FitOptions opts;
    opts.train_fraction = 0.5;
    opts.lambda = rec.lambda;
    const auto fit = dd_sindy(traj, rec.kinds, rec.win_a, rec.win_b, rec.fit_kind, rec.fit_K,
                              rec.library, opts);
    SUBCASE("zero residual on exact-library data") {
        const auto err = reconstruction_error(fit.model, traj, 0.5);
        CHECK(err.combined <= 1e-10);
    }
    SUBCASE("aggregate is the row-count weighted combination of the split") {
        // perturb one coefficient so the residuals are nontrivial
        auto model = fit.model;
        model.xi(1, 0) += 0.05;
        const auto err = reconstruction_error(model, traj, 0.5);
        const int m = static_cast<int>(traj.rows());
        const int k = static_cast<int>(std::ceil(0.5 * m));
        const double combined2 =
            (k * err.train * err.train + (m - k) * err.val * err.val) / m;
        CHECK(err.combined * err.combined == doctest::Approx(combined2).epsilon(1e-12));
    }
}

TEST_CASE("render and parse round trip") {
    const auto rec = benchmark("logistic_re");
    const auto traj = generate_dataset(rec);
    FitOptions opts;
    opts.train_fraction = 0.5;
    opts.lambda = rec.lambda;
    auto fit = dd_sindy(traj, rec.kinds, rec.win_a, rec.win_b, rec.fit_kind, rec.fit_K,
                        rec.library, opts);
    const std::string text = render_model(fit.model, 9);
    CAPTURE(text);
    const auto parsed = parse_rendered(text);
    REQUIRE(parsed.size() == 1);
    CHECK(parsed[0].kind == EquationKind::RE);
    REQUIRE(parsed[0].distributed.size() == 4);
    for (const auto& [lbl, coeff] : parsed[0].distributed) {
        bool found = false;
        for (Eigen::Index c = 0; c < fit.model.xi.rows(); ++c)
            if (fit.model.labels[static_cast<std::size_t>(c)] == lbl) {
                found = true;
                CHECK(coeff == doctest::Approx(fit.model.xi(c, 0)).epsilon(1e-8));
            }
        CHECK(found);
    }
}

TEST_CASE("rendering an empty model prints zero") {
    SparseModel model;
    model.spec.degree = 1;
    model.spec.instantaneous = {parse_label("x1")};
    model.kinds = {EquationKind::RE};
    model.xi = Eigen::MatrixXd::Zero(1, 1);
    model.labels = {"x1"};
    CHECK(render_model(model) == "x(t) = 0\n");
}

TEST_CASE("mixed-kind rendering carries the prime and the integral sign") {
    auto rec = benchmark("daphnia");
    auto traj = generate_dataset(rec);
    FitOptions opts;
    opts.train_fraction = rec.train_fraction;
    opts.lambda = rec.lambda;
    const auto fit = dd_sindy(traj, rec.kinds, rec.win_a, rec.win_b, rec.fit_kind, rec.fit_K,
                              rec.library, opts);
    const std::string text = render_model(fit.model, 6);
    CHECK(text.find("x1(t) = ") != std::string::npos);
    CHECK(text.find("x2'(t) = ") != std::string::npos);
    const auto parsed = parse_rendered(text);
    REQUIRE(parsed.size() == 2);
    CHECK(parsed[0].kind == EquationKind::RE);
    CHECK(parsed[1].kind == EquationKind::DIDE);
    CHECK(parsed[1].instantaneous.size() == 2);
    CHECK(parsed[1].distributed.size() == 1);
}

TEST_CASE("model file round trip is lossless") {
    auto rec = benchmark("ricker_advanced");
    auto traj = generate_dataset(rec);
    FitOptions opts;
    opts.train_fraction = rec.train_fraction;
    opts.lambda = rec.lambda;
    const auto fit = dd_sindy(traj, rec.kinds, rec.win_a, rec.win_b, rec.fit_kind, rec.fit_K,
                              rec.library, opts);
    const auto path = temp_path("ddsindy_model_rt.txt");
    write_model_file(path, fit.model);
    const auto back = read_model_file(path);
    CHECK(back.win_a == fit.model.win_a);
    CHECK(back.win_b == fit.model.win_b);
    CHECK(back.K == fit.model.K);
    CHECK(back.qkind == fit.model.qkind);
    REQUIRE(back.xi.rows() == fit.model.xi.rows());
    CHECK(back.xi == fit.model.xi);  // exact: coefficients stored at full precision
    CHECK(back.labels == fit.model.labels);
}

TEST_CASE("kernel evaluation") {
    SUBCASE("true ricker kernel value by direct substitution") {
        const auto rec = benchmark("ricker_simple");
        Eigen::VectorXd xs(1), xc(1);
        xs << std::log(80.0);
        xc << std::log(80.0);
        const double got = rec.model.terms[0].kernel(-1.0, xs, xc)[0];
        const double want = 10240.0 / 3.0 * std::exp(-4.0) * std::log(80.0) / 80.0;
        CHECK(got == doctest::Approx(want).epsilon(1e-12));
    }
    SUBCASE("identified kernel matches the truth pointwise after a closure fit") {
        auto rec = benchmark("ricker_simple");
        auto traj = generate_dataset(rec);
        FitOptions opts;
        opts.train_fraction = rec.train_fraction;
        opts.lambda = rec.lambda;
        const auto fit = dd_sindy(traj, rec.kinds, rec.win_a, rec.win_b, rec.fit_kind,
                                  rec.fit_K, rec.library, opts);
        Eigen::VectorXd sigmas(5);
        sigmas << -8.0, -4.0, -2.0, -1.0, -0.5;
        Eigen::VectorXd x(1);
        x << 2.0;
        const auto ghat = evaluate_kernel(fit.model, sigmas, x, x);
        for (int i = 0; i < 5; ++i)
            CHECK(ghat(i, 0) ==
                  doctest::Approx(rec.model.terms[0].kernel(sigmas[i], x, x)[0]).epsilon(1e-8));
    }
    SUBCASE("zero-coefficient model evaluates to zero") {
        SparseModel model;
        model.spec.degree = 1;
        model.spec.distributed = {parse_label("x1d")};
        model.win_a = -2.0;
        model.win_b = -1.0;
        model.K = 4;
        model.kinds = {EquationKind::RE};
        model.xi = Eigen::MatrixXd::Zero(1, 1);
        model.labels = {"x1d"};
        model.distributed_cols = 1;
        Eigen::VectorXd sigmas(3), x(1);
        sigmas << -2.0, -1.5, -1.0;
        x << 1.0;
        CHECK(evaluate_kernel(model, sigmas, x, x).cwiseAbs().maxCoeff() == 0.0);
    }
}

TEST_CASE("resimulating an identified model reproduces the data") {
    const auto rec = benchmark("logistic_re");
    const auto traj = generate_dataset(rec);
    FitOptions opts;
    opts.train_fraction = 0.5;
    opts.lambda = rec.lambda;
    const auto fit = dd_sindy(traj, rec.kinds, rec.win_a, rec.win_b, rec.fit_kind, rec.fit_K,
                              rec.library, opts);
    // the identified model marched on the same grid with the same rule is the
    // same discrete system
    const double h = traj.times[1] - traj.times[0];
    const auto resim = simulate_identified(fit.model, *traj.history, 0.0, 20.0, h);
    REQUIRE(resim.rows() == traj.rows());
    CHECK((resim.states - traj.states).cwiseAbs().maxCoeff() <= 1e-8);
}

TEST_CASE("black-box baseline on delay-free data recovers the linear term only") {
    ModelDef m;
    m.n = 1;
    m.kinds = {EquationKind::DIDE};
    m.f_inst = [](const Eigen::VectorXd& x) { return Eigen::VectorXd(-x); };
    HistorySegment h;
    h.times.resize(2);
    h.times << -1.0, 0.0;
    h.values.resize(2, 1);
    h.values << 1.0, 1.0;
    m.history = h;
    const auto traj = solve_dide(m, 6.0, 0.02, 8);

    Eigen::VectorXd lags(3);
    lags << -1.0, -0.5, -0.25;
    FitOptions opts;
    opts.train_fraction = 0.8;
    opts.lambda = 1e-2;
    const auto fit = bb_sindy(traj, lags, 1, opts);
    CHECK(fit.model.black_box);
    for (Eigen::Index c = 0; c < fit.model.xi.rows(); ++c) {
        const auto& lbl = fit.model.labels[static_cast<std::size_t>(c)];
        if (lbl == "x1")
            CHECK(fit.model.xi(c, 0) == doctest::Approx(-1.0).epsilon(1e-6));
        else
            CHECK(std::abs(fit.model.xi(c, 0)) <= 1e-6);
    }
    CHECK_THROWS_AS(evaluate_kernel(fit.model, Eigen::VectorXd::Zero(1),
                                    Eigen::VectorXd::Zero(1), Eigen::VectorXd::Zero(1)),
                    Error);
}

TEST_CASE("integral-form ODE baseline") {
    FitOptions opts;
    opts.train_fraction = 0.8;
    opts.lambda = 1e-3;
    SUBCASE("exponential decay") {
        SampledTrajectory traj;
        const int m = 200;
        traj.times.resize(m);
        traj.states.resize(m, 1);
        for (int i = 0; i < m; ++i) {
            traj.times[i] = 5.0 * i / (m - 1.0);
            traj.states(i, 0) = std::exp(-traj.times[i]);
        }
        const auto fit = integral_sindy_ode(traj, 3, opts);
        for (Eigen::Index c = 0; c < fit.model.xi.rows(); ++c) {
            const auto& lbl = fit.model.labels[static_cast<std::size_t>(c)];
            if (lbl == "x1") CHECK(std::abs(fit.model.xi(c, 0) + 1.0) <= 1e-2);
        }
    }
    SUBCASE("constant data keeps only the constant column") {
        SampledTrajectory traj;
        traj.times.resize(50);
        traj.states.resize(50, 1);
        for (int i = 0; i < 50; ++i) {
            traj.times[i] = 0.1 * i;
            traj.states(i, 0) = 2.0;
        }
        const auto fit = integral_sindy_ode(traj, 2, opts);
        CHECK(fit.model.xi.cwiseAbs().maxCoeff() <= 1e-10);
    }
    SUBCASE("logistic growth against a high-accuracy solve") {
        // x' = x(1-x) integrated by RK4 at a fine step, then subsampled
        SampledTrajectory traj;
        const int m = 200;
        traj.times.resize(m);
        traj.states.resize(m, 1);
        double x = 0.1, t = 0.0;
        const double hi = 1e-4;
        auto f = [](double v) { return v * (1.0 - v); };
        int row = 0;
        for (int i = 0; row < m; ++i) {
            const double target = 5.0 * row / (m - 1.0);
            while (t < target - 1e-12) {
                const double k1 = f(x), k2 = f(x + 0.5 * hi * k1), k3 = f(x + 0.5 * hi * k2),
                             k4 = f(x + hi * k3);
                x += hi / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4);
                t += hi;
            }
            traj.times[row] = target;
            traj.states(row, 0) = x;
            ++row;
        }
        const auto fit = integral_sindy_ode(traj, 3, opts);
        double c1 = 0.0, c2 = 0.0;
        for (Eigen::Index c = 0; c < fit.model.xi.rows(); ++c) {
            const auto& lbl = fit.model.labels[static_cast<std::size_t>(c)];
            if (lbl == "x1") c1 = fit.model.xi(c, 0);
            if (lbl == "x1^2") c2 = fit.model.xi(c, 0);
        }
        CHECK(std::abs(c1 - 1.0) <= 1e-2);
        CHECK(std::abs(c2 + 1.0) <= 1e-2);
    }
}

TEST_CASE("renewal equations never see their own current state in the design") {
    auto rec = benchmark("daphnia");
    auto traj = generate_dataset(rec);
    FitOptions opts;
    opts.train_fraction = rec.train_fraction;
    opts.lambda = rec.lambda;
    // plant a degenerate instantaneous atom b(t) and check the RE equation
    // cannot select it
    auto lib = rec.library;
    lib.instantaneous.push_back(parse_label("x1"));
    const auto fit =
        dd_sindy(traj, rec.kinds, rec.win_a, rec.win_b, rec.fit_kind, rec.fit_K, lib, opts);
    for (Eigen::Index c = 0; c < fit.model.xi.rows(); ++c)
        if (fit.model.labels[static_cast<std::size_t>(c)] == "x1" &&
            c >= fit.model.distributed_cols)
            CHECK(fit.model.xi(c, 0) == 0.0);
}

TEST_CASE("empty retained rows name the offending window") {
    auto rec = benchmark("logistic_re");
    auto traj = generate_dataset(rec);
    FitOptions opts;
    opts.lambda = 1e-5;
    CHECK_THROWS_WITH_AS(dd_sindy(traj, rec.kinds, -90.0, -80.0, QuadKind::trapezoid, 16,
                                  rec.library, opts),
                         doctest::Contains("window"), Error);
}
