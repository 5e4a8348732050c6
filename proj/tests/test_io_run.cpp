#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <limits>
#include <string>

#include <unistd.h>

#include <gtest/gtest.h>

#include "tpfilm/scenarios/run.hpp"

using namespace tpfilm;

namespace {

fs::path scratch(const std::string& name) {
    const fs::path p = fs::temp_directory_path() / ("tpfilm_io_" + name + "_" + std::to_string(::getpid()));
    fs::remove_all(p);
    return p;
}

ScenarioConfig small_config() {
    ScenarioConfig c = load_config(std::string(TPFILM_CONFIG_DIR) + "/demo.cfg");
    c.n = 8;
    c.t_end = 2e-4;
    c.sample_every = 5e-5;
    return c;
}

std::size_t count_lines(const fs::path& p) {
    const std::string s = read_text(p);
    return static_cast<std::size_t>(std::count(s.begin(), s.end(), '\n'));
}

}  // namespace

TEST(Format, SeventeenDigitsRoundTrip) {
    for (double x : {0.1, 1.0 / 3.0, -2.5e-300, 6.02214076e23, 0.0, std::numeric_limits<double>::min()}) {
        EXPECT_EQ(std::stod(fmt17(x)), x);
    }
    EXPECT_EQ(fmt17(1.0), "1.0000000000000000e+00");
    DiagnosticsRecord r{1e-4, 0.5, 1.0 / 7.0, 2.0, -1e-17, 1.0, 0.8, 1.0, 0.4, 0.6, 0.5, 0.0, 1e-300};
    const DiagnosticsRecord back = parse_diagnostics_row(diagnostics_row(r));
    EXPECT_EQ(diagnostics_row(back), diagnostics_row(r));
    EXPECT_EQ(back.diss_rate, r.diss_rate);
    EXPECT_THROW(parse_diagnostics_row("1,2,3"), ShapeError);
}

TEST(Format, CheckpointJsonIsBitExact) {
    CheckpointFile c;
    c.config_text = "n = 3\n";
    c.state.t = 0.1 + 0.2;
    c.state.F = Vec::LinSpaced(4, 0.1, 1.0 / 3.0);
    c.state.G = Vec::Constant(4, std::nextafter(1.0, 2.0));
    c.state.V = Vec::Constant(4, -1e-310);
    c.dissipated = 1.0 / 9.0;
    c.stepper.t = c.state.t;
    c.stepper.sample_index = 42;
    c.stepper.dt_next = 3.3e-9;
    c.stepper.steps = 1234567;
    c.collector = {1.5, 2.5, 0.3, 4.5, 5.5};
    const CheckpointFile d = checkpoint_from_json(json::parse(checkpoint_to_json(c).dump(2)));
    EXPECT_EQ(d.config_text, c.config_text);
    EXPECT_EQ(d.state.t, c.state.t);
    EXPECT_EQ(d.state.F, c.state.F);
    EXPECT_EQ(d.state.G, c.state.G);
    EXPECT_EQ(d.state.V, c.state.V);
    EXPECT_EQ(d.dissipated, c.dissipated);
    EXPECT_EQ(d.stepper.sample_index, 42);
    EXPECT_EQ(d.stepper.dt_next, c.stepper.dt_next);
    EXPECT_EQ(d.stepper.steps, c.stepper.steps);
    EXPECT_EQ(d.collector.last_rate, 4.5);
    json bad = checkpoint_to_json(c);
    bad["format"] = "other";
    EXPECT_THROW(checkpoint_from_json(bad), UsageError);
    bad.erase("format");
    EXPECT_THROW(checkpoint_from_json(bad), UsageError);
}

TEST(Format, MalformedJsonAndCsvAreUsageErrors) {
    const fs::path d = scratch("malformed");
    fs::create_directories(d);
    write_text_atomic(d / "x.json", "{ not json");
    EXPECT_THROW(read_json(d / "x.json"), UsageError);
    write_text_atomic(d / "d.csv", "a,b\n");
    EXPECT_THROW(read_diagnostics(d / "d.csv"), UsageError);
    EXPECT_THROW(DiagnosticsWriter(d / "d.csv", 0), UsageError);
    EXPECT_THROW(DiagnosticsWriter(d / "missing.csv", 0), UsageError);
    {
        DiagnosticsWriter w(d / "ok.csv");
        w.append(DiagnosticsRecord{});
    }
    EXPECT_THROW(DiagnosticsWriter(d / "ok.csv", 2), UsageError);
    EXPECT_NO_THROW(DiagnosticsWriter(d / "ok.csv", 1));
    EXPECT_FALSE(fs::exists(d / "x.json.tmp"));
    fs::remove_all(d);
}

TEST(Run, WritesTheDocumentedLayout) {
    const fs::path d = scratch("layout");
    const ScenarioConfig cfg = small_config();
    const RunOutcome o = run_scenario(cfg, d);
    ASSERT_TRUE(o.ok) << o.failure;
    EXPECT_EQ(o.records.size(), 5u);
    EXPECT_EQ(read_text(d / "config.cfg"), config_to_text(cfg));
    EXPECT_EQ(count_lines(d / "diagnostics.csv"), 6u);
    const std::string csv = read_text(d / "diagnostics.csv");
    EXPECT_EQ(csv.substr(0, csv.find('\n')), kDiagnosticsHeader);
    for (int i = 0; i < 5; ++i) ASSERT_TRUE(fs::exists(d / "snapshots" / snapshot_name(i)));
    const std::string snap = read_text(d / "snapshots" / "000004.csv");
    EXPECT_EQ(snap.substr(0, snap.find('\n')), kSnapshotHeader);
    EXPECT_EQ(count_lines(d / "snapshots" / "000004.csv"), static_cast<std::size_t>(Basis(1.0, 8).q() + 1));
    const json m = read_json(d / "manifest.json");
    EXPECT_EQ(m["status"], "ok");
    EXPECT_EQ(m["samples"], 5);
    EXPECT_EQ(m["t_reached"].get<double>(), cfg.t_end);
    EXPECT_TRUE(m["r_exceeds_s"].get<bool>());
    const auto rows = read_diagnostics(d / "diagnostics.csv");
    ASSERT_EQ(rows.size(), 5u);
    EXPECT_EQ(rows.back().t, cfg.t_end);
    for (const auto& r : rows) {
        EXPECT_NEAR(r.mass_f, rows.front().mass_f, 1e-12);
        EXPECT_NEAR(r.mass_g, rows.front().mass_g, 1e-12);
        EXPECT_NEAR(r.mass_gamma, rows.front().mass_gamma, 1e-10);
        EXPECT_LE(r.energy, rows.front().energy);
    }
    fs::remove_all(d);
}

TEST(Run, ConstantDataStaysFlat) {
    ScenarioConfig cfg;
    cfg.n = 8;
    cfg.f = FieldSpec::constant_value(0.7);
    cfg.g = FieldSpec::constant_value(1.3);
    cfg.gamma = FieldSpec::constant_value(2.0);
    cfg.t_end = 1e-3;
    cfg.sample_every = 5e-4;
    const RunOutcome o = run_scenario(cfg, {}, RunOptions{false, true, -1});
    ASSERT_TRUE(o.ok);
    for (const auto& s : o.states) {
        EXPECT_LT((s.F - o.states.front().F).cwiseAbs().maxCoeff(), 1e-12);
        EXPECT_LT((s.G - o.states.front().G).cwiseAbs().maxCoeff(), 1e-12);
        EXPECT_LT((s.V - o.states.front().V).cwiseAbs().maxCoeff(), 1e-12);
    }
    EXPECT_NEAR(o.records.back().mass_f, 0.7, 1e-12);
    EXPECT_NEAR(o.records.back().mass_gamma, 2.0, 1e-12);
}

TEST(Run, RepeatedRunsAreByteIdentical) {
    const fs::path a = scratch("det_a"), b = scratch("det_b");
    const ScenarioConfig cfg = small_config();
    ASSERT_TRUE(run_scenario(cfg, a).ok);
    ASSERT_TRUE(run_scenario(cfg, b).ok);
    EXPECT_EQ(read_text(a / "diagnostics.csv"), read_text(b / "diagnostics.csv"));
    EXPECT_EQ(read_text(a / "snapshots" / "000004.csv"), read_text(b / "snapshots" / "000004.csv"));
    EXPECT_EQ(read_text(a / "checkpoint.json"), read_text(b / "checkpoint.json"));
    fs::remove_all(a);
    fs::remove_all(b);
}

TEST(Run, ResumeReproducesTheUninterruptedRun) {
    const fs::path full = scratch("full"), part = scratch("part");
    const ScenarioConfig cfg = small_config();
    const RunOutcome ref = run_scenario(cfg, full);
    const RunOutcome halted = run_scenario(cfg, part, RunOptions{true, true, 2});
    ASSERT_TRUE(halted.ok);
    EXPECT_TRUE(halted.halted);
    EXPECT_EQ(read_json(part / "manifest.json")["status"], "halted");
    EXPECT_EQ(count_lines(part / "diagnostics.csv"), 4u);
    const RunOutcome resumed = resume_scenario(part);
    ASSERT_TRUE(resumed.ok);
    EXPECT_EQ(resumed.final_state.F, ref.final_state.F);
    EXPECT_EQ(resumed.final_state.G, ref.final_state.G);
    EXPECT_EQ(resumed.final_state.V, ref.final_state.V);
    EXPECT_EQ(read_text(part / "diagnostics.csv"), read_text(full / "diagnostics.csv"));
    EXPECT_EQ(resumed.steps, ref.steps);
    fs::remove_all(full);
    fs::remove_all(part);
}

TEST(Run, IntegrationFailureIsRecorded) {
    const fs::path d = scratch("fail");
    ScenarioConfig cfg = small_config();
    cfg.control.max_steps = 3;
    const RunOutcome o = run_scenario(cfg, d);
    EXPECT_FALSE(o.ok);
    EXPECT_FALSE(o.failure.empty());
    const json m = read_json(d / "manifest.json");
    EXPECT_EQ(m["status"], "failed");
    EXPECT_EQ(m["failure"], o.failure);
    EXPECT_LT(m["t_reached"].get<double>(), cfg.t_end);
    fs::remove_all(d);
}

TEST(Run, NegativeInitialDataThrows) {
    ScenarioConfig cfg = small_config();
    cfg.f = FieldSpec::constant_value(-1.0);
    EXPECT_THROW(run_scenario(cfg, {}, RunOptions{false, false, -1}), ParameterDomainError);
}
