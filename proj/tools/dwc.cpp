#include <CLI11.hpp>

#include <iostream>
#include <string>

#include "dwc/experiment.hpp"

namespace {

void add_options(CLI::App& app, dwc::ExperimentConfig& cfg) {
    app.add_option("--alpha", cfg.alpha, "degeneracy exponent in [0,2)");
    app.add_option("--regime", cfg.regime, "weak, strong or auto");
    app.add_option("--N", cfg.n_cells, "number of cells");
    app.add_option("--T", cfg.T, "horizon or auto (1.6 T_alpha)");
    app.add_option("--dt", cfg.dt, "time step or auto (h/2)");
    app.add_option("--epsilon", cfg.epsilon, "control window width");
    app.add_option("--eps", cfg.epsilons, "window widths for sweep-eps and limit")->delimiter(',');
    app.add_option("--time-factors", cfg.time_factors, "horizons for sweep-time as multiples of T_alpha")
        ->delimiter(',');
    app.add_option("--kind", cfg.kind, "distributed or boundary");
    app.add_option("--method", cfg.method, "auto, dense, cg or modal");
    app.add_option("--target", cfg.target, "sine, bump or mode");
    app.add_option("--tol", cfg.tol, "CG relative tolerance");
    app.add_option("--seed", cfg.seed, "random seed");
    app.add_option("--output-dir", cfg.output_dir, "output directory (default $DWC_OUTPUT_DIR or dwc_out)");
    app.add_option("--stride", cfg.stride, "time stride for trajectory output");
    app.add_flag("--plot", cfg.plot, "write SVG plots");
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"HUM null control for the degenerate wave equation"};
    app.set_version_flag("--version", std::string(dwc::kVersion));
    app.set_config("--config", "", "flat key=value configuration file");
    app.require_subcommand(1);

    dwc::ExperimentConfig cfg;
    add_options(app, cfg);
    for (const auto& c : dwc::experiment_commands()) app.add_subcommand(c)->fallthrough();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : 1;
    }

    const std::string command = app.get_subcommands().front()->get_name();
    try {
        return dwc::run_command(command, cfg, std::cout).status;
    } catch (const dwc::Error& e) {
        std::cerr << "dwc: " << e.what() << '\n';
        return dwc::exit_code_for(e.code());
    }
}
