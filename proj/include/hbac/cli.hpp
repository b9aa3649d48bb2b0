#pragma once

#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include "hbac/config.hpp"
#include "hbac/cooling_limits.hpp"
#include "hbac/opensys.hpp"
#include "hbac/ppa.hpp"
#include "hbac/trace_io.hpp"

namespace hbac::cli {

struct CliOptions {
    std::string out_dir{"."};
    std::uint64_t seed{0};
    std::string format{"csv"};  // csv | json
    bool quiet{false};
};

inline constexpr int exit_ok = 0;
inline constexpr int exit_config_error = 2;
inline constexpr int exit_numerical_error = 3;
inline constexpr int exit_io_error = 4;

namespace detail {

inline std::string out_path(const CliOptions& opts, const std::string& name) {
    namespace fs = std::filesystem;
    std::error_code ec;
    fs::create_directories(opts.out_dir, ec);
    if (ec) throw io::IoError("cannot create output directory: " + opts.out_dir);
    return (fs::path(opts.out_dir) / name).string();
}

inline void note(const CliOptions& opts, const std::string& msg) {
    if (!opts.quiet) std::cout << msg << "\n";
}

inline void write_json(const CliOptions& opts, const std::string& name,
                       const nlohmann::json& j) {
    io::write_text_file(out_path(opts, name), j.dump(2) + "\n");
}

}  // namespace detail

/// `ppa run`: one PPA trace per bath polarization, plus a summary comparing
/// the converged polarization against the closed-form limit.
inline void cmd_ppa_run(const config::json& root, const CliOptions& opts) {
    const auto cfg = config::parse_ppa_run(root);
    nlohmann::json summary = nlohmann::json::array();
    for (std::size_t k = 0; k < cfg.bath_polarizations.size(); ++k) {
        ppa::PpaConfig pc;
        pc.shape = cfg.shape;
        pc.bath_polarization = Polarization(cfg.bath_polarizations[k]);
        pc.reset_efficiency = cfg.reset_efficiency;
        pc.max_iterations = cfg.max_iterations;
        pc.convergence_epsilon = cfg.convergence_epsilon;
        pc.record_snapshots = cfg.record_snapshots;
        const ppa::PpaTrace trace = ppa::run_ppa(pc);

        const std::string stem = "ppa_trace_" + std::to_string(k);
        if (opts.format == "json")
            detail::write_json(opts, stem + ".json", io::trace_to_json(trace));
        else
            io::write_text_file(detail::out_path(opts, stem + ".csv"),
                                io::trace_to_csv(trace));

        const double emax = limits::epsilon_max(cfg.shape, pc.bath_polarization);
        nlohmann::json entry;
        entry["eps_b"] = cfg.bath_polarizations[k];
        entry["converged"] = trace.converged;
        entry["iterations"] = trace.iterations.size();
        entry["final_target_polarization"] = trace.final_target_polarization();
        entry["epsilon_max"] = emax;
        entry["gap_to_limit"] = emax - trace.final_target_polarization();
        summary.push_back(std::move(entry));
        detail::note(opts, "wrote " + stem);
    }
    detail::write_json(opts, "ppa_summary.json", summary);
}

/// `ppa scan12`: polarization-vs-iteration curves for the 12-qubit register
/// at each temperature.
inline void cmd_ppa_scan12(const config::json& root, const CliOptions& opts) {
    const auto cfg = config::parse_scan12(root);
    const ppa::ScanResult scan = ppa::run_ppa_12qubit_scan(
        cfg.temperatures, cfg.electron_frequency_hz, cfg.iterations);
    io::write_text_file(detail::out_path(opts, "scan12.csv"),
                        io::scan_to_csv(scan));
    nlohmann::json summary;
    summary["electron_frequency_hz"] = cfg.electron_frequency_hz;
    summary["temperatures_K"] = cfg.temperatures;
    summary["bath_polarizations"] = scan.bath_polarizations;
    summary["asymptotes"] = scan.asymptotes;
    detail::write_json(opts, "scan12_summary.json", summary);
    detail::note(opts, "wrote scan12.csv");
}

/// `limits`: eps_max/delta_max over an (n, eps_b) grid.
inline void cmd_limits(const config::json& root, const CliOptions& opts) {
    const auto cfg = config::parse_limits(root);
    const auto rows = limits::epsilon_max_curve(cfg.n_list, cfg.eps_b_grid);
    io::write_text_file(detail::out_path(opts, "limits_curve.csv"),
                        io::curve_to_csv(rows));
    detail::note(opts, "wrote limits_curve.csv");
}

/// `espin analyze`: level diagram, transition table, mixing angles,
/// universality and orientation reports; optional orientation sweep.
inline void cmd_espin(const config::json& root, const CliOptions& opts) {
    const auto cfg = config::parse_espin(root);
    const auto params = espin::secular_params(cfg.system);
    const auto ls = opensys::level_structure(params);
    const int n_spins = params.n_nuclei() + 1;
    const std::int64_t dim = ls.h.rows();

    std::string levels = "level,energy_rad_s,label\n";
    for (std::int64_t k = 0; k < dim; ++k)
        levels += std::to_string(k) + "," + io::fmt_real(ls.energies(k)) + "," +
                  std::to_string(ls.labels[k]) + "\n";
    io::write_text_file(detail::out_path(opts, "espin_levels.csv"), levels);

    const Eigen::MatrixXcd sx2 =
        espin::detail::embed(circuits::pauli::sx(), 0, n_spins);
    const Eigen::MatrixXcd x_eig = ls.vectors.adjoint() * sx2 * ls.vectors;
    const int electron_shift = n_spins - 1;
    std::string transitions = "level_i,level_j,frequency_rad_s,amplitude,type\n";
    for (std::int64_t i = 0; i < dim; ++i) {
        for (std::int64_t j = i + 1; j < dim; ++j) {
            const bool ei = (ls.labels[i] >> electron_shift) & 1;
            const bool ej = (ls.labels[j] >> electron_shift) & 1;
            if (ei == ej) continue;  // not an electron-flip transition
            const double amp = std::abs(x_eig(i, j));
            transitions += std::to_string(i) + "," + std::to_string(j) + "," +
                           io::fmt_real(std::abs(ls.energies(j) - ls.energies(i))) +
                           "," + io::fmt_real(amp) + "," +
                           (amp >= std::cos(constants::pi / 4.0) ? "allowed"
                                                                 : "forbidden") +
                           "\n";
        }
    }
    io::write_text_file(detail::out_path(opts, "espin_transitions.csv"), transitions);

    nlohmann::json rep;
    rep["omega_s_rad_s"] = params.omega_s;
    rep["secular_ok"] = params.secular_ok;
    rep["nuclei"] = nlohmann::json::array();
    for (int n = 0; n < params.n_nuclei(); ++n) {
        const auto ang = espin::mixing_angles(params, n);
        nlohmann::json nj;
        nj["omega_i_rad_s"] = params.nuclei[n].omega_i;
        nj["a_rad_s"] = params.nuclei[n].a;
        nj["b_rad_s"] = params.nuclei[n].b;
        nj["theta_up"] = ang.theta_up;
        nj["theta_down"] = ang.theta_down;
        nj["Theta"] = ang.theta;
        rep["nuclei"].push_back(std::move(nj));
    }
    const auto uni = espin::universality_check(params, 0.01, cfg.linewidths.esr);
    rep["universality"] = {{"pass", uni.pass},
                           {"theta_ok", uni.theta_ok},
                           {"theta_margin", uni.theta_margin},
                           {"transitions_ok", uni.transitions_ok},
                           {"min_transition_separation",
                            uni.min_transition_separation},
                           {"degenerate_levels", uni.degenerate_levels},
                           {"reasons", uni.reasons}};
    const auto score = espin::orientation_score(cfg.system, cfg.scheme,
                                                cfg.linewidths, cfg.thresholds);
    nlohmann::json crit = nlohmann::json::array();
    for (const auto& c : score.criteria)
        crit.push_back({{"name", c.name},
                        {"value", c.value},
                        {"satisfaction", c.satisfaction}});
    rep["orientation"] = {{"scheme", cfg.scheme == espin::ControlScheme::endor
                                         ? "ENDOR"
                                         : "AHC"},
                          {"criteria", crit},
                          {"score", score.score}};
    detail::write_json(opts, "espin_report.json", rep);

    if (cfg.sweep_grid > 0) {
        const auto pts = espin::orientation_sweep(cfg.system, cfg.scheme,
                                                  cfg.linewidths, cfg.sweep_grid,
                                                  cfg.thresholds);
        std::string sweep = "x,y,z,score\n";
        for (const auto& p : pts)
            sweep += io::fmt_real(p.direction.x()) + "," +
                     io::fmt_real(p.direction.y()) + "," +
                     io::fmt_real(p.direction.z()) + "," + io::fmt_real(p.score) +
                     "\n";
        io::write_text_file(detail::out_path(opts, "espin_sweep.csv"), sweep);
    }
    detail::note(opts, "wrote espin report");
}

/// `simulate endor`: one round of the pulsed 3-qubit PPA, optionally averaged
/// over the T2* offset ensemble.
inline void cmd_simulate_endor(const config::json& root, const CliOptions& opts) {
    const auto cfg = config::parse_endor(root);
    const auto params = espin::secular_params(cfg.system);
    const auto relax = opensys::make_relaxation(params, cfg.electron, cfg.nuclei,
                                                cfg.t2_star, cfg.bath_temperature);

    const opensys::EndorReport nominal =
        opensys::run_endor_ppa_round(params, relax, cfg.options);

    nlohmann::json rep;
    rep["bath_polarization"] = nominal.bath_polarization;
    rep["universality_pass"] = nominal.universality_pass;
    rep["mode"] = cfg.options.ideal ? "ideal" : "realistic";
    rep["steps"] = nlohmann::json::array();
    for (const auto& s : nominal.steps)
        rep["steps"].push_back({{"label", s.label},
                                {"spin_polarizations", s.spin_polarizations},
                                {"electron_gain", s.electron_gain}});
    rep["final_gain"] = nominal.final_gain;

    if (cfg.t2star_samples > 0) {
        const std::size_t n_steps = nominal.steps.size();
        auto runner = [&](double offset) {
            opensys::EndorOptions o = cfg.options;
            o.zeeman_offset = offset;
            const auto r = opensys::run_endor_ppa_round(params, relax, o);
            std::vector<double> flat;
            for (const auto& s : r.steps)
                flat.insert(flat.end(), s.spin_polarizations.begin(),
                            s.spin_polarizations.end());
            flat.push_back(r.final_gain);
            return flat;
        };
        const auto avg = opensys::t2star_average_values(
            runner, relax.t2_star, cfg.t2star_samples, opts.seed);
        nlohmann::json steps = nlohmann::json::array();
        for (std::size_t s = 0; s < n_steps; ++s) {
            std::vector<double> pols(avg.begin() + 3 * s, avg.begin() + 3 * s + 3);
            steps.push_back({{"label", nominal.steps[s].label},
                             {"spin_polarizations", pols}});
        }
        rep["t2star_average"] = {{"samples", cfg.t2star_samples},
                                 {"seed", opts.seed},
                                 {"steps", steps},
                                 {"final_gain", avg.back()}};
    }
    detail::write_json(opts, "endor_report.json", rep);
    detail::note(opts, "wrote endor_report.json");
}

/// Map thrown errors onto the documented exit codes.
template <class Fn>
int run_command(Fn&& fn) {
    try {
        fn();
        return exit_ok;
    } catch (const config::ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return exit_config_error;
    } catch (const io::IoError& e) {
        std::cerr << "io error: " << e.what() << "\n";
        return exit_io_error;
    } catch (const NumericalError& e) {
        std::cerr << "numerical error: " << e.what() << "\n";
        return exit_numerical_error;
    } catch (const std::domain_error& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return exit_config_error;
    } catch (const std::invalid_argument& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return exit_config_error;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}

}  // namespace hbac::cli
