/// @file io.hpp
/// @brief On-disk artifacts: snapshot and diagnostics CSV, checkpoint and
///        report JSON. Every double is written with 17 significant digits.

#pragma once

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "tpfilm/diagnostics.hpp"
#include "tpfilm/errors.hpp"
#include "tpfilm/fluxes.hpp"
#include "tpfilm/spectral.hpp"
#include "tpfilm/timestepper.hpp"

namespace tpfilm {

namespace fs = std::filesystem;
using json = nlohmann::json;

inline constexpr const char* kSnapshotHeader = "x,f,g,gamma";
inline constexpr const char* kDiagnosticsHeader =
    "t,energy,diss_rate,diss_cum,energy_residual,mass_f,mass_g,mass_gamma,min_f,min_g,min_gamma,chi_f,chi_g";

/// Fixed 17-significant-digit scientific notation.
inline std::string fmt17(double x) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.16e", x);
    return buf;
}

inline std::string diagnostics_row(const DiagnosticsRecord& r) {
    const double v[] = {r.t,      r.energy, r.diss_rate, r.diss_cum, r.energy_residual, r.mass_f, r.mass_g,
                        r.mass_gamma, r.min_f, r.min_g, r.min_gamma, r.chi_f, r.chi_g};
    std::string out;
    for (std::size_t i = 0; i < std::size(v); ++i) {
        if (i) out += ',';
        out += fmt17(v[i]);
    }
    return out;
}

inline DiagnosticsRecord parse_diagnostics_row(const std::string& line) {
    std::vector<double> v;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) v.push_back(std::stod(cell));
    if (v.size() != 13) throw ShapeError("diagnostics row: expected 13 columns");
    return DiagnosticsRecord{v[0], v[1], v[2], v[3], v[4], v[5], v[6], v[7], v[8], v[9], v[10], v[11], v[12]};
}

inline void write_snapshot(const fs::path& path, const SpectralState& s, const Basis& b, const SurfactantClosure& c) {
    const GridFields fl = eval_fields(s, b, c);
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw NumericalError("cannot write " + path.string());
    out << kSnapshotHeader << '\n';
    for (int i = 0; i < b.q(); ++i) {
        out << fmt17(b.nodes()[i]) << ',' << fmt17(fl.f[i]) << ',' << fmt17(fl.g[i]) << ',' << fmt17(fl.gamma[i])
            << '\n';
    }
}

/// Diagnostics CSV writer. Opening with `keep_rows` >= 0 keeps the header and
/// the first keep_rows data rows of an existing file and appends after them.
class DiagnosticsWriter {
public:
    explicit DiagnosticsWriter(const fs::path& path, long long keep_rows = -1) : path_(path) {
        if (keep_rows < 0) {
            out_.open(path, std::ios::binary | std::ios::trunc);
            if (!out_) throw NumericalError("cannot write " + path.string());
            out_ << kDiagnosticsHeader << '\n';
        } else {
            std::vector<std::string> lines;
            {
                std::ifstream in(path, std::ios::binary);
                if (!in) throw UsageError("cannot read " + path.string());
                std::string line;
                while (std::getline(in, line)) lines.push_back(line);
            }
            if (lines.empty() || lines.front() != kDiagnosticsHeader) {
                throw UsageError("diagnostics file has an unexpected header: " + path.string());
            }
            if (static_cast<long long>(lines.size()) < keep_rows + 1) {
                throw UsageError("diagnostics file is shorter than the checkpoint: " + path.string());
            }
            out_.open(path, std::ios::binary | std::ios::trunc);
            if (!out_) throw NumericalError("cannot write " + path.string());
            for (long long i = 0; i <= keep_rows; ++i) out_ << lines[i] << '\n';
        }
        out_.flush();
    }

    void append(const DiagnosticsRecord& r) {
        out_ << diagnostics_row(r) << '\n';
        out_.flush();
    }

    const fs::path& path() const noexcept { return path_; }

private:
    fs::path path_;
    std::ofstream out_;
};

inline std::vector<DiagnosticsRecord> read_diagnostics(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw UsageError("cannot read " + path.string());
    std::string line;
    std::getline(in, line);
    if (line != kDiagnosticsHeader) throw UsageError("diagnostics file has an unexpected header: " + path.string());
    std::vector<DiagnosticsRecord> out;
    while (std::getline(in, line)) {
        if (!line.empty()) out.push_back(parse_diagnostics_row(line));
    }
    return out;
}

inline std::string read_text(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw UsageError("cannot read " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

/// Writes to a sibling temporary file, then renames over the target.
inline void write_text_atomic(const fs::path& path, const std::string& text) {
    fs::path tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw NumericalError("cannot write " + tmp.string());
        out << text;
        out.flush();
        if (!out) throw NumericalError("failed writing " + tmp.string());
    }
    fs::rename(tmp, path);
}

inline void write_json(const fs::path& path, const json& j) { write_text_atomic(path, j.dump(2) + "\n"); }

inline json read_json(const fs::path& path) {
    try {
        return json::parse(read_text(path));
    } catch (const json::exception& e) {
        throw UsageError("malformed JSON in " + path.string() + ": " + e.what());
    }
}

inline json vec_to_json(const Vec& v) {
    json a = json::array();
    for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v[i]);
    return a;
}

inline Vec vec_from_json(const json& a) {
    if (!a.is_array()) throw UsageError("expected a numeric array");
    Vec v(static_cast<Eigen::Index>(a.size()));
    for (std::size_t i = 0; i < a.size(); ++i) v[static_cast<Eigen::Index>(i)] = a[i].get<double>();
    return v;
}

/// Running totals of the diagnostics collector at a checkpoint.
struct CollectorState {
    double e0 = 0.0;
    double cum = 0.0;
    double last_t = 0.0;
    double last_rate = 0.0;
    double offset = 0.0;
};

struct CheckpointFile {
    std::string config_text;
    StepperCheckpoint stepper;
    SpectralState state;
    double dissipated = 0.0;
    CollectorState collector;
};

inline json checkpoint_to_json(const CheckpointFile& c) {
    json j;
    j["format"] = "tpfilm-checkpoint-1";
    j["config"] = c.config_text;
    j["t"] = c.stepper.t;
    j["F"] = vec_to_json(c.state.F);
    j["G"] = vec_to_json(c.state.G);
    j["V"] = vec_to_json(c.state.V);
    j["dissipated"] = c.dissipated;
    j["stepper"] = {{"t_origin", c.stepper.t_origin},       {"sample_every", c.stepper.sample_every},
                    {"sample_index", c.stepper.sample_index}, {"dt_next", c.stepper.dt_next},
                    {"steps", c.stepper.steps},               {"rejections", c.stepper.rejections}};
    j["collector"] = {{"e0", c.collector.e0},
                      {"cum", c.collector.cum},
                      {"last_t", c.collector.last_t},
                      {"last_rate", c.collector.last_rate},
                      {"offset", c.collector.offset}};
    return j;
}

inline CheckpointFile checkpoint_from_json(const json& j) {
    try {
        if (j.at("format").get<std::string>() != "tpfilm-checkpoint-1") throw UsageError("unknown checkpoint format");
        CheckpointFile c;
        c.config_text = j.at("config").get<std::string>();
        c.state.t = j.at("t").get<double>();
        c.state.F = vec_from_json(j.at("F"));
        c.state.G = vec_from_json(j.at("G"));
        c.state.V = vec_from_json(j.at("V"));
        c.dissipated = j.at("dissipated").get<double>();
        const json& s = j.at("stepper");
        c.stepper.t = c.state.t;
        c.stepper.t_origin = s.at("t_origin").get<double>();
        c.stepper.sample_every = s.at("sample_every").get<double>();
        c.stepper.sample_index = s.at("sample_index").get<std::int64_t>();
        c.stepper.dt_next = s.at("dt_next").get<double>();
        c.stepper.steps = s.at("steps").get<std::int64_t>();
        c.stepper.rejections = s.at("rejections").get<std::int64_t>();
        const json& k = j.at("collector");
        c.collector = {k.at("e0").get<double>(), k.at("cum").get<double>(), k.at("last_t").get<double>(),
                       k.at("last_rate").get<double>(), k.at("offset").get<double>()};
        return c;
    } catch (const json::exception& e) {
        throw UsageError(std::string("malformed checkpoint: ") + e.what());
    }
}

}  // namespace tpfilm
