#pragma once

#include <cstdio>
#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "hbac/cooling_limits.hpp"
#include "hbac/ppa.hpp"

namespace hbac::io {

struct IoError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// 17 significant digits: round-trip safe and byte-stable across reruns.
inline std::string fmt_real(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

inline void write_text_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open for writing: " + path);
    out << content;
    if (!out) throw IoError("write failed: " + path);
}

/// Trace CSV: one row per qubit per phase per iteration.
inline std::string trace_to_csv(const ppa::PpaTrace& trace) {
    std::string csv = "iteration,phase,qubit_index,polarization\n";
    for (const auto& rec : trace.iterations) {
        const int n = static_cast<int>(rec.qubit_polarizations.size());
        if (n == 0) {
            csv += std::to_string(rec.iteration) + ",refresh,0," +
                   fmt_real(rec.target_after_refresh) + "\n";
            csv += std::to_string(rec.iteration) + ",compress,0," +
                   fmt_real(rec.target_after_compress) + "\n";
            continue;
        }
        csv += std::to_string(rec.iteration) + ",refresh,0," +
               fmt_real(rec.target_after_refresh) + "\n";
        for (int q = 0; q < n; ++q)
            csv += std::to_string(rec.iteration) + ",compress," + std::to_string(q) +
                   "," + fmt_real(rec.qubit_polarizations[q]) + "\n";
    }
    return csv;
}

inline nlohmann::json trace_to_json(const ppa::PpaTrace& trace) {
    nlohmann::json j;
    j["converged"] = trace.converged;
    j["iterations"] = nlohmann::json::array();
    for (const auto& rec : trace.iterations) {
        nlohmann::json it;
        it["iteration"] = rec.iteration;
        it["target_after_refresh"] = rec.target_after_refresh;
        it["target_after_compress"] = rec.target_after_compress;
        it["qubit_polarizations"] = rec.qubit_polarizations;
        if (rec.snapshot) it["state"] = rec.snapshot->probs();
        j["iterations"].push_back(std::move(it));
    }
    if (trace.final_state) j["final_state"] = trace.final_state->probs();
    return j;
}

inline std::string curve_to_csv(const std::vector<limits::CurveRow>& rows) {
    std::string csv = "n,m,d,eps_b,eps_max,delta_max\n";
    for (const auto& r : rows)
        csv += std::to_string(r.n) + "," + std::to_string(r.m) + "," +
               std::to_string(r.d) + "," + fmt_real(r.eps_b) + "," +
               fmt_real(r.eps_max) + "," + fmt_real(r.delta) + "\n";
    return csv;
}

inline std::string scan_to_csv(const ppa::ScanResult& scan) {
    std::string csv = "temperature,iteration,target_polarization\n";
    for (const auto& p : scan.points)
        csv += fmt_real(p.temperature) + "," + std::to_string(p.iteration) + "," +
               fmt_real(p.target_polarization) + "\n";
    return csv;
}

}  // namespace hbac::io
