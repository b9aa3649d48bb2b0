#include <catch2/catch_amalgamated.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <sys/wait.h>
#include <unistd.h>

#include "hbac/cli.hpp"
#include "hbac/config.hpp"
#include "hbac/cooling_limits.hpp"

using namespace hbac;
using config::ConfigError;
namespace fs = std::filesystem;

namespace {

fs::path fresh_dir(const std::string& tag) {
    const fs::path dir = fs::temp_directory_path() /
                         ("hbac_cli_" + tag + "_" + std::to_string(::getpid()));
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

std::string slurp(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    REQUIRE(in.good());
    std::ostringstream out;
    out << in.rdbuf();
    return out.str();
}

void spit(const fs::path& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    out << content;
}

nlohmann::json slurp_json(const fs::path& path) {
    return nlohmann::json::parse(slurp(path));
}

int run_cli(const std::string& args) {
    const std::string cmd =
        std::string(HBAC_CLI_PATH) + " " + args + " >/dev/null 2>&1";
    const int status = std::system(cmd.c_str());
    REQUIRE(status != -1);
    return WEXITSTATUS(status);
}

const fs::path config_dir = HBAC_CONFIG_DIR;

}  // namespace

TEST_CASE("config version and unknown keys are rejected") {
    CHECK_THROWS_AS(config::parse_limits({{"n_list", {3}}, {"eps_b", {0.1}}}),
                    ConfigError);
    config::json bad = {{"hbac_config", 2}, {"n_list", {3}}, {"eps_b", {0.1}}};
    CHECK_THROWS_AS(config::parse_limits(bad), ConfigError);
    config::json unknown = {{"hbac_config", 1},
                            {"n_list", {3}},
                            {"eps_b", {0.1}},
                            {"surprise", true}};
    CHECK_THROWS_AS(config::parse_limits(unknown), ConfigError);
}

TEST_CASE("ppa run config validation") {
    config::json good = {{"hbac_config", 1},
                         {"shape", {{"n_prime", 1}, {"m", 1}}},
                         {"bath_polarization", 0.1},
                         {"max_iterations", 10}};
    CHECK_NOTHROW(config::parse_ppa_run(good));
    config::json both_dims = good;
    both_dims["shape"]["d"] = 4;
    CHECK_THROWS_AS(config::parse_ppa_run(both_dims), ConfigError);
    config::json empty_bath = good;
    empty_bath["bath_polarization"] = config::json::array();
    CHECK_THROWS_AS(config::parse_ppa_run(empty_bath), ConfigError);
}

TEST_CASE("espin system parsing converts units") {
    config::json sys = {
        {"g_tensor", {2.0, 0, 0, 0, 2.0, 0, 0, 0, 2.0}},
        {"b0_tesla", 0.35},
        {"nuclei",
         {{{"species", "1H"},
           {"unit", "kHz"},
           {"a_tensor", {0, 0, 0, 0, 0, 0, 0, 0, 1000.0}}}}}};
    const auto system = config::parse_espin_system(sys);
    const auto params = espin::secular_params(system);
    CHECK(params.nuclei[0].a ==
          Catch::Approx(2 * constants::pi * 1e6).epsilon(1e-12));
    CHECK(params.nuclei[0].b == Catch::Approx(0.0).margin(1e-9));

    config::json bad_species = sys;
    bad_species["nuclei"][0]["species"] = "unobtainium";
    CHECK_THROWS_AS(config::parse_espin_system(bad_species), ConfigError);
    config::json bad_unit = sys;
    bad_unit["nuclei"][0]["unit"] = "furlongs";
    CHECK_THROWS_AS(config::parse_espin_system(bad_unit), ConfigError);
    config::json bad_tensor = sys;
    bad_tensor["nuclei"][0]["a_tensor"] = {1, 2, 3};
    CHECK_THROWS_AS(config::parse_espin_system(bad_tensor), ConfigError);
}

TEST_CASE("ppa run command writes traces and a summary") {
    const auto dir = fresh_dir("ppa_run");
    config::json cfg = {{"hbac_config", 1},
                        {"shape", {{"n_prime", 1}, {"m", 1}}},
                        {"bath_polarization", 0.1},
                        {"max_iterations", 60},
                        {"convergence_epsilon", 1e-14}};
    cli::CliOptions opts;
    opts.out_dir = dir.string();
    opts.quiet = true;
    cli::cmd_ppa_run(cfg, opts);

    const auto summary = slurp_json(dir / "ppa_summary.json");
    REQUIRE(summary.size() == 1);
    CHECK(summary[0]["final_target_polarization"].get<double>() ==
          Catch::Approx(2 * 0.1 / 1.01).margin(1e-4));
    CHECK(summary[0]["epsilon_max"].get<double>() ==
          Catch::Approx(2 * 0.1 / 1.01).epsilon(1e-12));

    const std::string csv = slurp(dir / "ppa_trace_0.csv");
    CHECK(csv.rfind("iteration,phase,qubit_index,polarization\n", 0) == 0);

    // Byte-identical rerun.
    cli::cmd_ppa_run(cfg, opts);
    CHECK(slurp(dir / "ppa_trace_0.csv") == csv);
}

TEST_CASE("ppa run with zero bath polarization emits an all-zero column") {
    const auto dir = fresh_dir("ppa_zero");
    config::json cfg = {{"hbac_config", 1},
                        {"shape", {{"n_prime", 1}, {"m", 1}}},
                        {"bath_polarization", 0.0},
                        {"max_iterations", 10}};
    cli::CliOptions opts;
    opts.out_dir = dir.string();
    opts.quiet = true;
    cli::cmd_ppa_run(cfg, opts);
    std::istringstream csv(slurp(dir / "ppa_trace_0.csv"));
    std::string line;
    std::getline(csv, line);  // header
    while (std::getline(csv, line)) {
        const auto last = line.rfind(',');
        CHECK(std::stod(line.substr(last + 1)) == 0.0);
    }
}

TEST_CASE("shipped three-curve config reproduces the asymptotes") {
    const auto dir = fresh_dir("fig5");
    cli::CliOptions opts;
    opts.out_dir = dir.string();
    opts.quiet = true;
    cli::cmd_ppa_run(config::load_json_file((config_dir / "fig5_ppa3.json").string()),
                     opts);
    const auto summary = slurp_json(dir / "ppa_summary.json");
    REQUIRE(summary.size() == 3);
    for (const auto& entry : summary) {
        const double eb = entry["eps_b"].get<double>();
        CHECK(entry["final_target_polarization"].get<double>() ==
              Catch::Approx(2 * eb / (1 + eb * eb)).epsilon(0.02));
    }
    // Monotone growth of the target polarization within each trace.
    for (int k = 0; k < 3; ++k) {
        std::istringstream csv(
            slurp(dir / ("ppa_trace_" + std::to_string(k) + ".csv")));
        std::string line;
        std::getline(csv, line);
        double prev = -1.0;
        while (std::getline(csv, line)) {
            if (line.find(",compress,0,") == std::string::npos) continue;
            const double pol = std::stod(line.substr(line.rfind(',') + 1));
            CHECK(pol >= prev - 1e-12);
            prev = pol;
        }
    }
}

TEST_CASE("limits command spot values") {
    const auto dir = fresh_dir("limits");
    config::json cfg = {{"hbac_config", 1},
                        {"n_list", {3}},
                        {"eps_b", {0.5, 1.0}}};
    cli::CliOptions opts;
    opts.out_dir = dir.string();
    opts.quiet = true;
    cli::cmd_limits(cfg, opts);
    std::istringstream csv(slurp(dir / "limits_curve.csv"));
    std::string header, row_half, row_one;
    std::getline(csv, header);
    std::getline(csv, row_half);
    std::getline(csv, row_one);
    CHECK(header == "n,m,d,eps_b,eps_max,delta_max");
    std::istringstream r(row_half);
    std::string field;
    std::vector<std::string> fields;
    while (std::getline(r, field, ',')) fields.push_back(field);
    REQUIRE(fields.size() == 6);
    CHECK(std::stod(fields[4]) == Catch::Approx(0.8).epsilon(1e-12));
    CHECK(std::stod(fields[3]) == Catch::Approx(0.5).epsilon(1e-15));
}

TEST_CASE("espin command flags the isotropic system and is rotation invariant") {
    auto make_cfg = [](const Eigen::Matrix3d& g, const Eigen::Matrix3d& a,
                       const Eigen::Vector3d& dir) {
        config::json tensor_g = config::json::array();
        config::json tensor_a = config::json::array();
        for (int r = 0; r < 3; ++r)
            for (int c = 0; c < 3; ++c) {
                tensor_g.push_back(g(r, c));
                tensor_a.push_back(a(r, c) / (2e6 * constants::pi));  // MHz
            }
        return config::json{
            {"hbac_config", 1},
            {"system",
             {{"g_tensor", tensor_g},
              {"b0_tesla", 0.35},
              {"field_direction", {dir.x(), dir.y(), dir.z()}},
              {"nuclei",
               {{{"species", "1H"}, {"unit", "MHz"}, {"a_tensor", tensor_a}}}}}},
            {"scheme", "AHC"},
            {"linewidths", {{"esr_khz", 2000.0}, {"nmr_khz", 50.0}}}};
    };

    // b = 0: diagonal hyperfine aligned with the field.
    {
        const auto dir = fresh_dir("espin_iso");
        cli::CliOptions opts;
        opts.out_dir = dir.string();
        opts.quiet = true;
        cli::cmd_espin(
            make_cfg(2.0023 * Eigen::Matrix3d::Identity(),
                     2 * constants::pi * 1e6 *
                         Eigen::Vector3d(1, 1, 4).asDiagonal().toDenseMatrix(),
                     Eigen::Vector3d(0, 0, 1)),
            opts);
        const auto rep = slurp_json(dir / "espin_report.json");
        CHECK_FALSE(rep["universality"]["pass"].get<bool>());
        CHECK(rep["orientation"]["score"].get<double>() == 0.0);
        CHECK(rep["nuclei"][0]["Theta"].get<double>() ==
              Catch::Approx(0.0).margin(1e-12));
        // One nucleus: two allowed plus two forbidden electron-flip lines.
        std::istringstream csv(slurp(dir / "espin_transitions.csv"));
        std::string line;
        int rows = 0;
        std::getline(csv, line);
        while (std::getline(csv, line))
            if (!line.empty()) ++rows;
        CHECK(rows == 4);
    }

    // Rigid rotation leaves the report invariant.
    {
        Eigen::Matrix3d a;
        a << -3.2e8, 0.4e8, 0.9e8, 0.4e8, -5.5e8, -0.7e8, 0.9e8, -0.7e8, -2.8e8;
        const Eigen::Matrix3d g =
            Eigen::Vector3d(2.0035, 2.0043, 2.0026).asDiagonal();
        const Eigen::Vector3d dir0 = Eigen::Vector3d(0.3, 0.5, 0.81).normalized();
        const Eigen::Matrix3d rot =
            Eigen::AngleAxisd(0.9, Eigen::Vector3d(1, -2, 0.3).normalized())
                .toRotationMatrix();

        const auto d1 = fresh_dir("espin_rot_a");
        const auto d2 = fresh_dir("espin_rot_b");
        cli::CliOptions o1, o2;
        o1.out_dir = d1.string();
        o2.out_dir = d2.string();
        o1.quiet = o2.quiet = true;
        cli::cmd_espin(make_cfg(g, a, dir0), o1);
        cli::cmd_espin(make_cfg(rot * g * rot.transpose(),
                                rot * a * rot.transpose(), rot * dir0),
                       o2);
        const auto r1 = slurp_json(d1 / "espin_report.json");
        const auto r2 = slurp_json(d2 / "espin_report.json");
        CHECK(r2["nuclei"][0]["Theta"].get<double>() ==
              Catch::Approx(r1["nuclei"][0]["Theta"].get<double>()).margin(1e-9));
        CHECK(r2["orientation"]["score"].get<double>() ==
              Catch::Approx(r1["orientation"]["score"].get<double>()).margin(1e-9));
    }
}

TEST_CASE("endor command: ideal gain and deterministic reruns") {
    const auto dir = fresh_dir("endor_ideal");
    cli::CliOptions opts;
    opts.out_dir = dir.string();
    opts.quiet = true;
    opts.seed = 11;
    const auto cfg =
        config::load_json_file((config_dir / "endor_ideal.json").string());
    cli::cmd_simulate_endor(cfg, opts);
    const auto rep = slurp_json(dir / "endor_report.json");
    const double eb = rep["bath_polarization"].get<double>();
    CHECK(rep["final_gain"].get<double>() ==
          Catch::Approx(1.5 - 0.5 * eb * eb).margin(1e-3));
    CHECK(rep["steps"].size() == 6);

    const std::string first = slurp(dir / "endor_report.json");
    cli::cmd_simulate_endor(cfg, opts);
    CHECK(slurp(dir / "endor_report.json") == first);
}

TEST_CASE("endor command averages over the T2* ensemble deterministically") {
    const auto dir = fresh_dir("endor_t2s");
    auto cfg = config::load_json_file((config_dir / "endor_ideal.json").string());
    cfg["mode"] = "realistic";
    cfg["pulses"] = {{"mw_duration_s", 5e-8}, {"mw_envelope", "square"}};
    cfg["t2star_samples"] = 2;
    cli::CliOptions opts;
    opts.out_dir = dir.string();
    opts.quiet = true;
    opts.seed = 1234;
    cli::cmd_simulate_endor(cfg, opts);
    const auto rep = slurp_json(dir / "endor_report.json");
    REQUIRE(rep.contains("t2star_average"));
    CHECK(rep["t2star_average"]["samples"].get<int>() == 2);
    const std::string first = slurp(dir / "endor_report.json");
    cli::cmd_simulate_endor(cfg, opts);
    CHECK(slurp(dir / "endor_report.json") == first);
}

TEST_CASE("cli process exit codes") {
    const auto dir = fresh_dir("proc");
    const auto out = dir / "out";
    CHECK(run_cli("limits --config " + (config_dir / "fig6_limits.json").string() +
                  " --out " + out.string() + " --quiet") == 0);
    CHECK(fs::exists(out / "limits_curve.csv"));

    // Config errors exit with 2.
    const auto bad = dir / "bad.json";
    spit(bad, "{ not json");
    CHECK(run_cli("limits --config " + bad.string()) == 2);
    const auto unknown = dir / "unknown.json";
    spit(unknown,
         R"({"hbac_config": 1, "n_list": [3], "eps_b": [0.1], "nope": 1})");
    CHECK(run_cli("limits --config " + unknown.string()) == 2);
    CHECK(run_cli("limits --config " + (dir / "missing.json").string()) == 2);

    // I/O errors exit with 4: the output directory collides with a file.
    const auto blocker = dir / "blocker";
    spit(blocker, "x");
    CHECK(run_cli("limits --config " + (config_dir / "fig6_limits.json").string() +
                  " --out " + (blocker / "sub").string()) == 4);

    // Unit helpers.
    CHECK(run_cli("convert --species 1H --field 7 --temperature 300") == 0);
    CHECK(run_cli("convert") == 2);
}
