// Command-line front end: runs HBAC simulations and analytics from JSON
// configs and emits CSV/JSON tables.

#include <CLI11.hpp>
#include <iostream>
#include <optional>
#include <string>

#include "hbac/cli.hpp"
#include "hbac/core.hpp"

namespace {

struct CommonArgs {
    std::string config_path;
    hbac::cli::CliOptions opts;
};

void add_common(CLI::App* cmd, CommonArgs& args, bool needs_config = true) {
    if (needs_config)
        cmd->add_option("--config", args.config_path, "JSON config file")
            ->required();
    cmd->add_option("--out", args.opts.out_dir, "output directory");
    cmd->add_option("--seed", args.opts.seed, "random seed for ensemble runs");
    cmd->add_option("--format", args.opts.format, "csv or json")
        ->check(CLI::IsMember({"csv", "json"}));
    cmd->add_flag("--quiet", args.opts.quiet, "suppress progress output");
}

int run_config_command(const CommonArgs& args,
                       void (*fn)(const hbac::config::json&,
                                  const hbac::cli::CliOptions&)) {
    return hbac::cli::run_command(
        [&] { fn(hbac::config::load_json_file(args.config_path), args.opts); });
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Heat bath algorithmic cooling simulator and analytics"};
    app.require_subcommand(1);

    CommonArgs ppa_run_args, scan12_args, limits_args, espin_args, endor_args;

    auto* ppa = app.add_subcommand("ppa", "partner pairing algorithm runs");
    ppa->require_subcommand(1);
    auto* ppa_run = ppa->add_subcommand("run", "run the PPA and write traces");
    add_common(ppa_run, ppa_run_args);
    auto* scan12 = ppa->add_subcommand(
        "scan12", "12-qubit polarization curves vs temperature");
    add_common(scan12, scan12_args);

    auto* limits_cmd =
        app.add_subcommand("limits", "cooling-limit curves over (n, eps_b)");
    add_common(limits_cmd, limits_args);

    auto* espin = app.add_subcommand("espin", "electron-nuclear spin analytics");
    espin->require_subcommand(1);
    auto* espin_analyze = espin->add_subcommand(
        "analyze", "levels, transitions, universality, orientation");
    add_common(espin_analyze, espin_args);

    auto* simulate = app.add_subcommand("simulate", "open-system simulations");
    simulate->require_subcommand(1);
    auto* endor = simulate->add_subcommand(
        "endor", "pulsed 3-qubit PPA round with relaxation");
    add_common(endor, endor_args);

    // Unit and threshold helpers over the closed-form expressions.
    struct {
        std::optional<std::string> species;
        std::optional<double> gamma;
        double b0{7.0};
        std::optional<double> temperature;
        std::optional<double> target_polarization;
        std::optional<int> purity_n;
        std::optional<std::vector<double>> qec;
    } conv;
    auto* convert = app.add_subcommand("convert", "polarization/threshold helpers");
    convert->add_option("--species", conv.species, "1H, 13C, 15N or electron");
    convert->add_option("--gamma", conv.gamma, "gyromagnetic ratio, rad/s/T");
    convert->add_option("--field", conv.b0, "static field, tesla");
    convert->add_option("--temperature", conv.temperature, "kelvin");
    convert->add_option("--target-polarization", conv.target_polarization,
                        "invert to the temperature reaching this polarization");
    convert->add_option("--purity-n", conv.purity_n,
                        "pseudo-pure purity for an n-qubit register");
    convert->add_option("--qec", conv.qec,
                        "two ancilla polarizations for the threshold check")
        ->expected(2);

    CLI11_PARSE(app, argc, argv);

    if (ppa_run->parsed())
        return run_config_command(ppa_run_args, hbac::cli::cmd_ppa_run);
    if (scan12->parsed())
        return run_config_command(scan12_args, hbac::cli::cmd_ppa_scan12);
    if (limits_cmd->parsed())
        return run_config_command(limits_args, hbac::cli::cmd_limits);
    if (espin_analyze->parsed())
        return run_config_command(espin_args, hbac::cli::cmd_espin);
    if (endor->parsed())
        return run_config_command(endor_args, hbac::cli::cmd_simulate_endor);

    if (convert->parsed()) {
        return hbac::cli::run_command(
            [&] {
                nlohmann::json out;
                double gamma = 0.0;
                if (conv.species) {
                    const auto g = hbac::constants::gamma_for_species(*conv.species);
                    if (!g)
                        throw hbac::config::ConfigError("unknown species " +
                                                        *conv.species);
                    gamma = *g;
                } else if (conv.gamma) {
                    gamma = *conv.gamma;
                }
                if (gamma != 0.0 && conv.temperature) {
                    const hbac::ThermalSpec spec{gamma, conv.b0, *conv.temperature};
                    const double eps = hbac::thermal_polarization(spec);
                    out["thermal_polarization"] = eps;
                    if (conv.purity_n)
                        out["pseudo_pure_purity"] = hbac::pseudo_pure_purity(
                            hbac::Polarization(eps), *conv.purity_n);
                }
                if (gamma != 0.0 && conv.target_polarization)
                    out["temperature_for_polarization_K"] =
                        hbac::temperature_for_polarization(gamma, conv.b0,
                                                           *conv.target_polarization);
                if (conv.qec)
                    out["qec_threshold_met"] = hbac::qec_ancilla_threshold(
                        hbac::Polarization((*conv.qec)[0]),
                        hbac::Polarization((*conv.qec)[1]));
                if (out.empty())
                    throw hbac::config::ConfigError(
                        "convert: nothing to compute; see --help");
                std::cout << out.dump(2) << "\n";
            });
    }
    return 0;
}
