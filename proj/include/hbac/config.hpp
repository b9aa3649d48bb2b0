#pragma once

#include <cmath>
#include <fstream>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "hbac/constants.hpp"
#include "hbac/espin.hpp"
#include "hbac/opensys.hpp"
#include "hbac/ppa.hpp"

namespace hbac::config {

inline constexpr int schema_version = 1;

struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

using json = nlohmann::json;

inline json load_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config: " + path);
    json j;
    try {
        in >> j;
    } catch (const json::parse_error& e) {
        throw ConfigError("config is not valid JSON: " + std::string(e.what()));
    }
    return j;
}

/// Strict key policy: unknown keys are configuration errors, not typos to
/// silently ignore.
inline void require_keys(const json& obj, const std::string& where,
                         const std::set<std::string>& allowed,
                         const std::set<std::string>& required) {
    if (!obj.is_object()) throw ConfigError(where + " must be a JSON object");
    for (const auto& [key, _] : obj.items())
        if (!allowed.count(key))
            throw ConfigError("unknown key '" + key + "' in " + where);
    for (const auto& key : required)
        if (!obj.count(key))
            throw ConfigError("missing key '" + key + "' in " + where);
}

inline void check_version(const json& root) {
    if (!root.is_object()) throw ConfigError("config root must be a JSON object");
    if (!root.contains("hbac_config") || !root["hbac_config"].is_number_integer() ||
        root["hbac_config"].get<int>() != schema_version)
        throw ConfigError("config must declare \"hbac_config\": 1");
}

inline double get_number(const json& obj, const std::string& key,
                         const std::string& where) {
    if (!obj.at(key).is_number())
        throw ConfigError("'" + key + "' in " + where + " must be a number");
    return obj.at(key).get<double>();
}

// --- ppa run ---------------------------------------------------------------

struct PpaRunConfig {
    SystemShape shape;
    std::vector<double> bath_polarizations;
    double reset_efficiency{1.0};
    std::int64_t max_iterations{1000};
    double convergence_epsilon{1e-12};
    bool record_snapshots{false};
};

inline PpaRunConfig parse_ppa_run(const json& root) {
    check_version(root);
    require_keys(root, "ppa-run config",
                 {"hbac_config", "shape", "bath_polarization", "reset_efficiency",
                  "max_iterations", "convergence_epsilon", "record_snapshots"},
                 {"shape", "bath_polarization", "max_iterations"});
    const json& shape = root.at("shape");
    require_keys(shape, "shape", {"n_prime", "m", "d"}, {"m"});
    PpaRunConfig cfg;
    if (shape.contains("d") && shape.contains("n_prime"))
        throw ConfigError("shape takes n_prime or d, not both");
    if (shape.contains("d"))
        cfg.shape = SystemShape::qudit(shape.at("d").get<std::int64_t>(),
                                       shape.at("m").get<int>());
    else if (shape.contains("n_prime"))
        cfg.shape = SystemShape::qubits(shape.at("n_prime").get<int>(),
                                        shape.at("m").get<int>());
    else
        throw ConfigError("shape requires n_prime or d");
    const json& bath = root.at("bath_polarization");
    if (bath.is_number())
        cfg.bath_polarizations.push_back(bath.get<double>());
    else if (bath.is_array())
        for (const auto& v : bath) cfg.bath_polarizations.push_back(v.get<double>());
    else
        throw ConfigError("bath_polarization must be a number or array");
    if (cfg.bath_polarizations.empty())
        throw ConfigError("bath_polarization array is empty");
    if (root.contains("reset_efficiency"))
        cfg.reset_efficiency = get_number(root, "reset_efficiency", "ppa-run config");
    cfg.max_iterations = root.at("max_iterations").get<std::int64_t>();
    if (root.contains("convergence_epsilon"))
        cfg.convergence_epsilon =
            get_number(root, "convergence_epsilon", "ppa-run config");
    if (root.contains("record_snapshots"))
        cfg.record_snapshots = root.at("record_snapshots").get<bool>();
    return cfg;
}

// --- ppa scan12 ------------------------------------------------------------

struct Scan12Config {
    std::vector<double> temperatures;
    double electron_frequency_hz{9.7e9};
    std::int64_t iterations{1000};
};

inline Scan12Config parse_scan12(const json& root) {
    check_version(root);
    require_keys(root, "scan12 config",
                 {"hbac_config", "temperatures_K", "electron_frequency_ghz",
                  "iterations"},
                 {"temperatures_K", "iterations"});
    Scan12Config cfg;
    for (const auto& t : root.at("temperatures_K"))
        cfg.temperatures.push_back(t.get<double>());
    if (cfg.temperatures.empty()) throw ConfigError("temperatures_K is empty");
    if (root.contains("electron_frequency_ghz"))
        cfg.electron_frequency_hz =
            get_number(root, "electron_frequency_ghz", "scan12 config") * 1e9;
    cfg.iterations = root.at("iterations").get<std::int64_t>();
    return cfg;
}

// --- limits ----------------------------------------------------------------

struct LimitsConfig {
    std::vector<int> n_list;
    std::vector<double> eps_b_grid;
};

inline LimitsConfig parse_limits(const json& root) {
    check_version(root);
    require_keys(root, "limits config", {"hbac_config", "n_list", "eps_b"},
                 {"n_list", "eps_b"});
    LimitsConfig cfg;
    for (const auto& n : root.at("n_list")) cfg.n_list.push_back(n.get<int>());
    const json& eps = root.at("eps_b");
    if (eps.is_array()) {
        for (const auto& v : eps) cfg.eps_b_grid.push_back(v.get<double>());
    } else {
        require_keys(eps, "eps_b", {"min", "max", "count", "log"},
                     {"min", "max", "count"});
        const double lo = eps.at("min").get<double>();
        const double hi = eps.at("max").get<double>();
        const int count = eps.at("count").get<int>();
        const bool log_grid = eps.contains("log") && eps.at("log").get<bool>();
        if (count < 2 || !(hi > lo)) throw ConfigError("bad eps_b grid");
        for (int i = 0; i < count; ++i) {
            const double f = static_cast<double>(i) / (count - 1);
            cfg.eps_b_grid.push_back(log_grid
                                         ? std::exp(std::log(lo) +
                                                    f * (std::log(hi) - std::log(lo)))
                                         : lo + f * (hi - lo));
        }
    }
    if (cfg.n_list.empty() || cfg.eps_b_grid.empty())
        throw ConfigError("empty limits grid");
    return cfg;
}

// --- spin systems ----------------------------------------------------------

inline double unit_to_rad_per_s(const std::string& unit, const std::string& where) {
    if (unit == "rad/s") return 1.0;
    if (unit == "Hz") return 2.0 * constants::pi;
    if (unit == "kHz") return 2.0 * constants::pi * 1e3;
    if (unit == "MHz") return 2.0 * constants::pi * 1e6;
    throw ConfigError("unsupported unit '" + unit + "' in " + where);
}

inline Eigen::Matrix3d parse_tensor(const json& arr, double scale,
                                    const std::string& where) {
    if (!arr.is_array() || arr.size() != 9)
        throw ConfigError(where + " must be a row-major array of 9 numbers");
    Eigen::Matrix3d m;
    for (int r = 0; r < 3; ++r)
        for (int c = 0; c < 3; ++c) m(r, c) = arr[3 * r + c].get<double>() * scale;
    return m;
}

inline espin::ESpinSystem parse_espin_system(const json& sys) {
    require_keys(sys, "system",
                 {"g_tensor", "b0_tesla", "field_direction", "nuclei"},
                 {"g_tensor", "b0_tesla", "nuclei"});
    espin::ESpinSystem system;
    system.g_tensor = parse_tensor(sys.at("g_tensor"), 1.0, "g_tensor");
    system.b0 = get_number(sys, "b0_tesla", "system");
    if (sys.contains("field_direction")) {
        const json& d = sys.at("field_direction");
        if (!d.is_array() || d.size() != 3)
            throw ConfigError("field_direction must be an array of 3 numbers");
        Eigen::Vector3d v(d[0].get<double>(), d[1].get<double>(), d[2].get<double>());
        if (v.norm() == 0.0) throw ConfigError("field_direction must be nonzero");
        system.field_direction = v.normalized();
    }
    for (const auto& nuc : sys.at("nuclei")) {
        require_keys(nuc, "nucleus",
                     {"name", "species", "gamma_rad_per_s_per_t", "a_tensor", "unit"},
                     {"a_tensor"});
        espin::Nucleus n;
        if (nuc.contains("species")) {
            const auto g = constants::gamma_for_species(
                nuc.at("species").get<std::string>());
            if (!g) throw ConfigError("unknown species in nucleus");
            n.gamma = *g;
            n.name = nuc.at("species").get<std::string>();
        } else if (nuc.contains("gamma_rad_per_s_per_t")) {
            n.gamma = get_number(nuc, "gamma_rad_per_s_per_t", "nucleus");
        } else {
            throw ConfigError("nucleus requires species or gamma_rad_per_s_per_t");
        }
        if (nuc.contains("name")) n.name = nuc.at("name").get<std::string>();
        const std::string unit =
            nuc.contains("unit") ? nuc.at("unit").get<std::string>() : "rad/s";
        n.a_tensor = parse_tensor(nuc.at("a_tensor"),
                                  unit_to_rad_per_s(unit, "nucleus"), "a_tensor");
        system.nuclei.push_back(std::move(n));
    }
    system.validate();
    return system;
}

struct EspinConfig {
    espin::ESpinSystem system;
    espin::ControlScheme scheme{espin::ControlScheme::endor};
    espin::Linewidths linewidths{2.0 * constants::pi * 1e6,
                                 2.0 * constants::pi * 1e4};
    int sweep_grid{0};  // 0 = no orientation sweep
    espin::OrientationConfig thresholds;
};

inline EspinConfig parse_espin(const json& root) {
    check_version(root);
    require_keys(root, "espin config",
                 {"hbac_config", "system", "scheme", "linewidths", "sweep_grid",
                  "thresholds"},
                 {"system"});
    EspinConfig cfg;
    cfg.system = parse_espin_system(root.at("system"));
    if (root.contains("scheme")) {
        const std::string s = root.at("scheme").get<std::string>();
        if (s == "ENDOR")
            cfg.scheme = espin::ControlScheme::endor;
        else if (s == "AHC")
            cfg.scheme = espin::ControlScheme::ahc;
        else
            throw ConfigError("scheme must be ENDOR or AHC");
    }
    if (root.contains("linewidths")) {
        const json& lw = root.at("linewidths");
        require_keys(lw, "linewidths", {"esr_khz", "nmr_khz"},
                     {"esr_khz", "nmr_khz"});
        cfg.linewidths.esr = get_number(lw, "esr_khz", "linewidths") * 2e3 * constants::pi;
        cfg.linewidths.nmr = get_number(lw, "nmr_khz", "linewidths") * 2e3 * constants::pi;
    }
    if (root.contains("sweep_grid")) cfg.sweep_grid = root.at("sweep_grid").get<int>();
    if (root.contains("thresholds")) {
        const json& th = root.at("thresholds");
        require_keys(th, "thresholds",
                     {"omega_1_mhz", "electron_t2_s", "mw_bandwidth_mhz",
                      "gate_time_factor", "sin_theta_sq_max"},
                     {});
        if (th.contains("omega_1_mhz"))
            cfg.thresholds.omega_1 =
                get_number(th, "omega_1_mhz", "thresholds") * 2e6 * constants::pi;
        if (th.contains("electron_t2_s"))
            cfg.thresholds.electron_t2 = get_number(th, "electron_t2_s", "thresholds");
        if (th.contains("mw_bandwidth_mhz"))
            cfg.thresholds.mw_bandwidth =
                get_number(th, "mw_bandwidth_mhz", "thresholds") * 2e6 * constants::pi;
        if (th.contains("gate_time_factor"))
            cfg.thresholds.gate_time_factor =
                get_number(th, "gate_time_factor", "thresholds");
        if (th.contains("sin_theta_sq_max"))
            cfg.thresholds.sin_theta_sq_max =
                get_number(th, "sin_theta_sq_max", "thresholds");
    }
    return cfg;
}

// --- simulate endor ----------------------------------------------------------

struct EndorConfig {
    espin::ESpinSystem system;
    opensys::SpinRelaxation electron;
    std::vector<opensys::SpinRelaxation> nuclei;
    double t2_star{std::numeric_limits<double>::infinity()};
    double bath_temperature{300.0};
    opensys::EndorOptions options;
    int t2star_samples{0};  // 0 = single unperturbed run
};

inline EndorConfig parse_endor(const json& root) {
    check_version(root);
    require_keys(root, "endor config",
                 {"hbac_config", "system", "relaxation", "pulses", "mode",
                  "t2star_samples", "wait_multiple"},
                 {"system", "relaxation"});
    EndorConfig cfg;
    cfg.system = parse_espin_system(root.at("system"));
    if (cfg.system.nuclei.size() != 2)
        throw ConfigError("endor simulation requires exactly two nuclei");

    const json& relax = root.at("relaxation");
    require_keys(relax, "relaxation",
                 {"electron", "nuclei", "bath_temperature_k"},
                 {"electron", "nuclei", "bath_temperature_k"});
    const json& e = relax.at("electron");
    require_keys(e, "relaxation.electron", {"t1_s", "t2_s", "t2_star_s"},
                 {"t1_s", "t2_s"});
    cfg.electron.t1 = get_number(e, "t1_s", "relaxation.electron");
    cfg.electron.t2 = get_number(e, "t2_s", "relaxation.electron");
    cfg.t2_star = e.contains("t2_star_s")
                      ? get_number(e, "t2_star_s", "relaxation.electron")
                      : cfg.electron.t2;
    for (const auto& n : relax.at("nuclei")) {
        require_keys(n, "relaxation.nuclei[]", {"t1_s", "t2_s"}, {"t1_s", "t2_s"});
        opensys::SpinRelaxation r;
        r.t1 = get_number(n, "t1_s", "relaxation.nuclei[]");
        r.t2 = get_number(n, "t2_s", "relaxation.nuclei[]");
        cfg.nuclei.push_back(r);
    }
    if (cfg.nuclei.size() != 2)
        throw ConfigError("relaxation.nuclei must list exactly two nuclei");
    cfg.bath_temperature = get_number(relax, "bath_temperature_k", "relaxation");

    if (root.contains("pulses")) {
        const json& p = root.at("pulses");
        require_keys(p, "pulses",
                     {"mw_duration_s", "mw_envelope", "rf_duration_n1_s",
                      "rf_duration_n2_s"},
                     {});
        if (p.contains("mw_duration_s"))
            cfg.options.mw_duration = get_number(p, "mw_duration_s", "pulses");
        if (p.contains("mw_envelope")) {
            const std::string env = p.at("mw_envelope").get<std::string>();
            if (env == "square")
                cfg.options.mw_envelope = opensys::PulseEnvelope::square;
            else if (env == "gaussian")
                cfg.options.mw_envelope = opensys::PulseEnvelope::gaussian;
            else
                throw ConfigError("mw_envelope must be square or gaussian");
        }
        if (p.contains("rf_duration_n1_s"))
            cfg.options.rf_duration_n1 = get_number(p, "rf_duration_n1_s", "pulses");
        if (p.contains("rf_duration_n2_s"))
            cfg.options.rf_duration_n2 = get_number(p, "rf_duration_n2_s", "pulses");
    }
    if (root.contains("mode")) {
        const std::string mode = root.at("mode").get<std::string>();
        if (mode == "ideal")
            cfg.options.ideal = true;
        else if (mode == "realistic")
            cfg.options.ideal = false;
        else
            throw ConfigError("mode must be ideal or realistic");
    }
    if (root.contains("wait_multiple"))
        cfg.options.wait_multiple = get_number(root, "wait_multiple", "endor config");
    if (root.contains("t2star_samples"))
        cfg.t2star_samples = root.at("t2star_samples").get<int>();
    return cfg;
}

}  // namespace hbac::config
