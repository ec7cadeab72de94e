// omrouter: spectra, sweeps, stability and routing reports for the
// membrane-in-the-middle single-photon router.

#include <fstream>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "omrouter/cli_io.hpp"

namespace {

using namespace omrouter::cli;

struct Options {
    std::string config_path;
    Overrides overrides;
};

void add_common(CLI::App* cmd, Options& opt) {
    cmd->add_option("--config", opt.config_path, "Flat JSON configuration file");
    cmd->add_option("--power", opt.overrides.power, "Drive power [W]");
    cmd->add_option("--temp", opt.overrides.temp, "Mirror bath temperature [K]");
    cmd->add_option("--grid", opt.overrides.grid, "Frequency grid lo:hi:n in units of omega_m");
    cmd->add_option("--format", opt.overrides.format, "Output format: csv|json");
    cmd->add_option("--out", opt.overrides.out, "Output path (default: stdout)");
}

int emit(const CommandResult& res, const std::string& out_path) {
    std::cerr << res.diagnostics;
    const bool has_output = !res.output.empty();
    if (!has_output) return res.exit_code;
    if (out_path.empty()) {
        std::cout << res.output;
        return res.exit_code;
    }
    std::ofstream out(out_path, std::ios::binary | std::ios::trunc);
    if (!out || !(out << res.output)) {
        std::cerr << "error: cannot write '" << out_path << "'\n";
        return kInvalidInput;
    }
    return res.exit_code;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Optomechanical single-photon router simulator"};
    app.require_subcommand(1);
    Options opt;

    auto* spectrum = app.add_subcommand("spectrum", "R, T, Sv, St, Scout, Sdout on a frequency grid");
    auto* sweep = app.add_subcommand("sweep", "One spectrum block per value of a swept parameter");
    auto* stability = app.add_subcommand("stability", "Roots of d(omega) and the stability verdict");
    auto* route = app.add_subcommand("route", "Integrated routing probabilities and noise budget");
    for (auto* cmd : {spectrum, sweep, stability, route}) add_common(cmd, opt);
    sweep->add_option("--param", opt.overrides.sweep_param, "power|temperature|detuning|bandwidth");
    sweep->add_option("--values", opt.overrides.sweep_values, "Comma-separated values (W, K or frequency units)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : kInvalidInput;
    }

    RunConfig config;
    try {
        if (!opt.config_path.empty()) config = load_config(opt.config_path);
        apply_overrides(config, opt.overrides);
    } catch (const omrouter::InvalidParameter& e) {
        std::cerr << "error: invalid input: " << e.what() << "\n";
        return kInvalidInput;
    }

    CommandResult res;
    if (*spectrum) res = cli_spectrum(config);
    else if (*sweep) res = cli_sweep(config);
    else if (*stability) res = cli_stability(config);
    else res = cli_route(config);
    return emit(res, config.out_path);
}
