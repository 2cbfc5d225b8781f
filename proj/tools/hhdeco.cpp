#include <CLI11.hpp>
#include <exception>
#include <iostream>

#include "hhdeco/cli/commands.hpp"
#include "hhdeco/version.hpp"

namespace {

void add_common(CLI::App* sub, hhdeco::cli::CommandOptions& opts) {
    sub->add_option("--config", opts.config_path, "INI configuration file")->check(CLI::ExistingFile);
    sub->add_option("--out", opts.out_dir, "output directory");
    sub->add_option("--jobs", opts.jobs, "worker threads")->check(CLI::PositiveNumber);
    sub->add_option("--override", opts.overrides, "section.key=value (repeatable)")->allow_extra_args(false);
}

} // namespace

int main(int argc, char** argv) {
    using namespace hhdeco::cli;
    CLI::App app{"Electronic decoherence in a Hubbard-Holstein molecule"};
    app.set_version_flag("--version", hhdeco::kVersion);
    app.require_subcommand(1);

    CommandOptions opts;
    auto* propagate = app.add_subcommand("propagate", "propagate one (U, eta) point with the HEOM");
    auto* fit = app.add_subcommand("fit", "fit purity and density-matrix decays of stored trajectories");
    auto* refmodel = app.add_subcommand("refmodel", "potential surfaces, couplings and correlation energy");
    auto* check = app.add_subcommand("check", "run the built-in invariant checks");
    auto* sweep = app.add_subcommand("sweep", "propagate a (U, eta) grid or a (K, L) convergence scan");
    for (auto* sub : {propagate, fit, refmodel, check, sweep}) add_common(sub, opts);
    fit->add_option("inputs", opts.inputs, "trajectory.csv files");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        if (*propagate) return cmd_propagate(opts);
        if (*fit) return cmd_fit(opts);
        if (*refmodel) return cmd_refmodel(opts);
        if (*check) return cmd_check(opts);
        return cmd_sweep(opts);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return exit_code_for(e);
    }
}
