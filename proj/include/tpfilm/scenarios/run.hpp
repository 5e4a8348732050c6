/// @file run.hpp
/// @brief A single scenario run with on-disk artifacts, and resumption from
///        its checkpoint.
///
/// Layout of an output directory:
///   config.cfg          normalized config echo
///   diagnostics.csv     one row per sample
///   snapshots/NNNNNN.csv  grid fields per sample (optional)
///   checkpoint.json     state at the latest sample
///   manifest.json       status, failure message, step counts

#pragma once

#include <cstdio>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "tpfilm/diagnostics.hpp"
#include "tpfilm/fluxes.hpp"
#include "tpfilm/mollifier.hpp"
#include "tpfilm/scenarios/config.hpp"
#include "tpfilm/scenarios/initial_data.hpp"
#include "tpfilm/scenarios/io.hpp"
#include "tpfilm/spectral.hpp"
#include "tpfilm/timestepper.hpp"

namespace tpfilm {

struct RunOptions {
    bool write_files = true;          ///< false keeps everything in memory
    bool keep_states = true;          ///< keep the sampled SpectralStates in the outcome
    std::int64_t halt_at_sample = -1; ///< stop after this sample (simulated interruption)
};

struct RunOutcome {
    bool ok = true;
    bool halted = false;
    std::string failure;
    ScenarioConfig config;
    std::vector<DiagnosticsRecord> records;
    std::vector<SpectralState> states;
    SpectralState final_state;
    std::int64_t steps = 0;
    std::int64_t rejections = 0;
    fs::path dir;
};

inline std::string snapshot_name(std::int64_t index) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%06lld.csv", static_cast<long long>(index));
    return buf;
}

namespace run_detail {

inline GalerkinSystem make_system(const ScenarioConfig& cfg) {
    return GalerkinSystem(Basis(cfg.length, cfg.n, cfg.oversample), cfg.params(), cfg.make_closure(), cfg.eps,
                          cfg.dissipation == DissipationAccumulation::stepper);
}

inline void write_manifest(const fs::path& dir, const RunOutcome& o, double t_reached) {
    json m;
    m["status"] = o.ok ? (o.halted ? "halted" : "ok") : "failed";
    m["failure"] = o.failure;
    m["t_end"] = o.config.t_end;
    m["t_reached"] = t_reached;
    m["samples"] = o.records.size();
    m["steps"] = o.steps;
    m["rejections"] = o.rejections;
    m["r_exceeds_s"] = o.config.params().r_exceeds_s();
    write_json(dir / "manifest.json", m);
}

/// Shared loop for fresh and resumed runs.
inline RunOutcome drive(const ScenarioConfig& cfg, const GalerkinSystem& sys, const StepperCheckpoint& start,
                        DiagnosticsCollector& collector, bool emit_start, std::optional<DiagnosticsWriter>& csv,
                        const fs::path& dir, const RunOptions& opt) {
    RunOutcome out;
    out.config = cfg;
    out.dir = dir;
    const std::string config_text = config_to_text(cfg);
    if (opt.write_files && cfg.write_snapshots) fs::create_directories(dir / "snapshots");

    auto on_sample = [&](const Sample& smp) {
        const SpectralState s = sys.unpack(*smp.y, smp.t);
        const double dissipated = sys.dissipated(*smp.y);
        const DiagnosticsRecord r = collector.collect(s, dissipated);
        out.records.push_back(r);
        if (opt.keep_states) out.states.push_back(s);
        if (!opt.write_files) return;
        csv->append(r);
        if (cfg.write_snapshots) {
            write_snapshot(dir / "snapshots" / snapshot_name(smp.index), s, sys.basis(), sys.closure());
        }
        CheckpointFile cf;
        cf.config_text = config_text;
        cf.stepper = *smp.checkpoint;
        cf.state = s;
        cf.dissipated = dissipated;
        cf.collector = {collector.e0(), collector.cumulative(), collector.last_t(), collector.last_rate(),
                        collector.offset()};
        write_json(dir / "checkpoint.json", checkpoint_to_json(cf));
    };

    const Trajectory tr =
        integrate_from(sys, start, cfg.t_end, cfg.control, on_sample, emit_start, false, opt.halt_at_sample);
    out.ok = !tr.failed;
    out.halted = tr.halted;
    out.failure = tr.failure;
    out.steps = tr.steps;
    out.rejections = tr.rejections;
    out.final_state = sys.unpack(tr.last.y, tr.last.t);
    if (opt.write_files) write_manifest(dir, out, tr.last.t);
    return out;
}

}  // namespace run_detail

/// Runs a scenario from its initial data. Integration failures are reported in
/// the outcome (and manifest); configuration errors throw.
inline RunOutcome run_scenario(const ScenarioConfig& cfg, const fs::path& dir, const RunOptions& opt = {}) {
    cfg.validate();
    const GalerkinSystem sys = run_detail::make_system(cfg);
    const SpectralState s0 = build_initial_state(cfg, sys.basis(), sys.closure());

    std::optional<DiagnosticsWriter> csv;
    if (opt.write_files) {
        fs::create_directories(dir);
        write_text_atomic(dir / "config.cfg", config_to_text(cfg));
        csv.emplace(dir / "diagnostics.csv");
    }
    DiagnosticsCollector collector(sys.basis(), sys.params(), sys.closure(), cfg.eps, MollifierKernel::make(cfg.kernel),
                                   cfg.dissipation, cfg.chi_refine);
    StepperCheckpoint start;
    start.t_origin = 0.0;
    start.sample_every = cfg.sample_every;
    start.t = 0.0;
    start.y = sys.pack(s0, 0.0);
    start.dt_next = cfg.control.dt_init;
    return run_detail::drive(cfg, sys, start, collector, true, csv, dir, opt);
}

/// Continues the run stored in `dir` from its checkpoint to the configured t_end.
/// The diagnostics CSV is cut back to the checkpoint sample and appended to.
inline RunOutcome resume_scenario(const fs::path& dir, const RunOptions& opt = {}) {
    const CheckpointFile cf = checkpoint_from_json(read_json(dir / "checkpoint.json"));
    const ScenarioConfig cfg = parse_config_string(cf.config_text);
    cfg.validate();
    const GalerkinSystem sys = run_detail::make_system(cfg);
    require_state(sys.basis(), cf.state, "resume");

    std::optional<DiagnosticsWriter> csv;
    if (opt.write_files) csv.emplace(dir / "diagnostics.csv", cf.stepper.sample_index + 1);
    DiagnosticsCollector collector(sys.basis(), sys.params(), sys.closure(), cfg.eps, MollifierKernel::make(cfg.kernel),
                                   cfg.dissipation, cfg.chi_refine);
    collector.resume(cf.collector.e0, cf.collector.cum, cf.collector.last_t, cf.collector.last_rate,
                     cf.collector.offset);
    StepperCheckpoint start = cf.stepper;
    start.y = sys.pack(cf.state, cf.dissipated);
    return run_detail::drive(cfg, sys, start, collector, false, csv, dir, opt);
}

}  // namespace tpfilm
