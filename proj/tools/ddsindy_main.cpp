#include <CLI11.hpp>

#include <iostream>
#include <string>
#include <vector>

#include "ddsindy/commands.hpp"

using ddsindy::IniFile;

namespace {

struct CommonFlags {
    std::string config;
    std::string out;
    std::string benchmark;
    std::string lambda, K, quadrature, seed, split, noise, m;
};

void add_common(CLI::App* app, CommonFlags* flags, bool data_flags) {
    app->add_option("--config", flags->config, "INI config file");
    app->add_option("--out", flags->out, "output directory");
    if (data_flags) {
        app->add_option("--benchmark", flags->benchmark, "benchmark dataset name");
        app->add_option("--noise", flags->noise, "noise level (fraction of column RMS)");
        app->add_option("--m", flags->m, "sample count override");
    }
    app->add_option("--lambda", flags->lambda, "sparsity hyperparameter");
    app->add_option("--K", flags->K, "quadrature node count");
    app->add_option("--quadrature", flags->quadrature,
                    "rectangles|trapezoid|clenshaw-curtis");
    app->add_option("--seed", flags->seed, "seed (noise and swarm)");
    app->add_option("--split", flags->split, "training fraction");
}

IniFile assemble_ini(const CommonFlags& flags) {
    IniFile ini;
    if (!flags.config.empty()) ini = IniFile::parse_file(flags.config);
    if (!flags.benchmark.empty()) ini.set("data", "benchmark", flags.benchmark);
    if (!flags.noise.empty()) ini.set("data", "noise", flags.noise);
    if (!flags.m.empty()) ini.set("data", "m", flags.m);
    if (!flags.split.empty()) ini.set("data", "split", flags.split);
    if (!flags.lambda.empty()) ini.set("solver", "lambda", flags.lambda);
    if (!flags.K.empty()) ini.set("quadrature", "K", flags.K);
    if (!flags.quadrature.empty()) ini.set("quadrature", "kind", flags.quadrature);
    if (!flags.seed.empty()) {
        ini.set("data", "noise_seed", flags.seed);
        ini.set("optimize", "seed", flags.seed);
    }
    if (!flags.out.empty()) ini.set("report", "outdir", flags.out);
    return ini;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"ddsindy: identification of distributed-delay and renewal equations"};
    app.require_subcommand(1);

    CommonFlags sim_flags, id_flags, opt_flags;
    std::vector<std::string> report_inputs;
    std::string report_out = "report";
    bool report_sweep = false;

    CLI::App* sim = app.add_subcommand("simulate", "synthesize a benchmark dataset");
    add_common(sim, &sim_flags, true);
    CLI::App* ident = app.add_subcommand("identify", "fit a sparse model to a dataset");
    add_common(ident, &id_flags, true);
    CLI::App* opt = app.add_subcommand("optimize",
                                       "externally optimize delay bounds / parameters");
    add_common(opt, &opt_flags, true);
    CLI::App* rep = app.add_subcommand("report", "merge run reports into comparison tables");
    rep->add_option("inputs", report_inputs, "report.csv files or run directories");
    rep->add_option("--out", report_out, "output file prefix");
    rep->add_flag("--sweep", report_sweep, "emit a sweep matrix (one row per run)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        if (sim->parsed()) return ddsindy::cmd_simulate(assemble_ini(sim_flags));
        if (ident->parsed()) return ddsindy::cmd_identify(assemble_ini(id_flags));
        if (opt->parsed()) return ddsindy::cmd_optimize(assemble_ini(opt_flags));
        if (rep->parsed()) return ddsindy::cmd_report(report_inputs, report_out, report_sweep);
    } catch (const ddsindy::ConfigError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    }
    return 2;
}
