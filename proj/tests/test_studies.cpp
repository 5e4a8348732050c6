#include <atomic>
#include <cmath>
#include <filesystem>
#include <stdexcept>

#include <unistd.h>

#include <gtest/gtest.h>

#include "tpfilm/scenarios/studies.hpp"

using namespace tpfilm;

namespace {

fs::path scratch(const std::string& name) {
    const fs::path p = fs::temp_directory_path() / ("tpfilm_st_" + name + "_" + std::to_string(::getpid()));
    fs::remove_all(p);
    return p;
}

ScenarioConfig cfg_from(const char* name) { return load_config(std::string(TPFILM_CONFIG_DIR) + "/" + name + ".cfg"); }

}  // namespace

TEST(Fits, SlopesRecoverPowerLawsAndLines) {
    const std::vector<double> x{1e-1, 1e-2, 1e-3, 1e-4};
    std::vector<double> y, z;
    for (double v : x) {
        y.push_back(3.0 * std::pow(v, 1.5));
        z.push_back(2.0 - 4.0 * v);
    }
    EXPECT_NEAR(loglog_slope(x, y), 1.5, 1e-12);
    EXPECT_NEAR(linear_slope(x, z), -4.0, 1e-12);
    y[2] = 0.0;
    EXPECT_TRUE(std::isnan(loglog_slope(x, y)));
    EXPECT_TRUE(finite_or_null(std::nan("")).is_null());
    EXPECT_EQ(member_dir_name("eps", 3), "eps_03");
}

TEST(Fits, SupDistanceAcrossResolutions) {
    const Basis a(1.0, 4), b(1.0, 9);
    Vec ca = Vec::Zero(5), cb = Vec::Zero(10);
    ca[0] = cb[0] = 1.0;
    ca[2] = cb[2] = 0.5;
    EXPECT_LT(sup_distance(a, ca, b, cb), 1e-14);
    cb[7] = 0.25;
    EXPECT_NEAR(sup_distance(a, ca, b, cb), 0.25 * std::sqrt(2.0), 1e-3);
}

TEST(Parallel, VisitsEveryIndexAndRethrows) {
    for (int jobs : {1, 3}) {
        std::vector<std::atomic<int>> hits(17);
        parallel_for(17, jobs, [&](int i) { ++hits[i]; });
        for (auto& h : hits) EXPECT_EQ(h.load(), 1);
        EXPECT_THROW(parallel_for(5, jobs, [](int i) {
                         if (i == 3) throw std::runtime_error("boom");
                     }),
                     std::runtime_error);
    }
}

TEST(EpsSweep, SmallSweepWritesReportAndMembers) {
    ScenarioConfig c = cfg_from("touchzero");
    c.n = 8;
    c.t_end = 1e-4;
    c.sample_every = 5e-5;
    c.sweep_eps = {1e-1, 1e-2};
    const fs::path d = scratch("eps");
    const EpsSweepReport r = sweep_eps(c, d, 2);
    ASSERT_EQ(r.members.size(), 2u);
    EXPECT_TRUE(r.all_ok);
    EXPECT_EQ(r.cauchy.size(), 1u);
    EXPECT_GT(r.members[0].max_neg_f, 0.0);
    EXPECT_TRUE(r.gamma_pass());
    const json j = read_json(d / "eps_sweep.json");
    EXPECT_EQ(j["members"].size(), 2u);
    EXPECT_EQ(j["slope_pass"].get<bool>(), r.slope_pass());
    EXPECT_TRUE(fs::exists(d / "eps_00" / "diagnostics.csv"));
    EXPECT_TRUE(fs::exists(d / "eps_01" / "manifest.json"));
    c.sweep_eps = {1e-2, 1e-1};
    EXPECT_THROW(sweep_eps(c, std::nullopt), UsageError);
    c.sweep_eps = {1e-2};
    EXPECT_THROW(sweep_eps(c, std::nullopt), UsageError);
    fs::remove_all(d);
}

TEST(EpsSweep, ParallelAndSerialAgree) {
    ScenarioConfig c = cfg_from("touchzero");
    c.n = 8;
    c.t_end = 5e-5;
    c.sample_every = 5e-5;
    c.sweep_eps = {1e-1, 1e-2, 1e-3};
    const EpsSweepReport a = sweep_eps(c, std::nullopt, 1);
    const EpsSweepReport b = sweep_eps(c, std::nullopt, 3);
    EXPECT_EQ(a.to_json().dump(), b.to_json().dump());
}

TEST(NSweep, CoupledMemberScaling) {
    ScenarioConfig c = cfg_from("nsweep");
    const ScenarioConfig m2 = n_sweep_member(c, 2);
    EXPECT_EQ(m2.n, 32);
    EXPECT_DOUBLE_EQ(m2.oversample, c.oversample * 4.0);
    EXPECT_DOUBLE_EQ(m2.control.rel_tol, c.control.rel_tol * 1e-2);
    c.sweep_coupled = false;
    EXPECT_EQ(n_sweep_member(c, 2).control.rel_tol, c.control.rel_tol);
}

TEST(NSweep, SmallSweepConverges) {
    ScenarioConfig c = cfg_from("nsweep");
    c.sweep_n = {4, 8, 16};
    c.t_end = 5e-5;
    c.sample_every = 5e-5;
    const fs::path d = scratch("n");
    const NSweepReport r = sweep_n(c, d);
    ASSERT_EQ(r.distances.size(), 2u);
    EXPECT_TRUE(r.all_ok);
    EXPECT_TRUE(r.energy_monotone);
    EXPECT_LT(r.distances[1], r.distances[0]);
    EXPECT_TRUE(fs::exists(d / "n_sweep.json"));
    c.sweep_n = {8, 4};
    EXPECT_THROW(sweep_n(c, std::nullopt), UsageError);
    fs::remove_all(d);
}

TEST(Reduction, MatchesThinFilmReference) {
    ScenarioConfig c = cfg_from("reduction");
    c.n = 8;
    c.t_end = 1e-3;
    c.sample_every = 5e-4;
    const ReductionReport r = reduction_thinfilm(c, std::nullopt);
    EXPECT_TRUE(r.pass()) << r.max_rel_distance;
    EXPECT_EQ(r.times.size(), 3u);
    c.mu = 0.5;
    EXPECT_THROW(reduction_thinfilm(c, std::nullopt), UsageError);
}

TEST(Dispersion, SmallStudyMatchesEigenvalues) {
    ScenarioConfig c = cfg_from("dispersion");
    c.n = 4;
    c.dispersion_k = {1, 2};
    const DispersionReport r = dispersion_study(c, std::nullopt);
    EXPECT_TRUE(r.coupled_pass()) << r.max_rel_error;
    EXPECT_TRUE(r.mu0_pass()) << r.mu0_rel_error;
    EXPECT_EQ(r.entries.size(), 6u);
    c.dispersion_k = {5};
    EXPECT_THROW(dispersion_study(c, std::nullopt), UsageError);
    c.dispersion_k = {1};
    c.f.kind = FieldKind::cosine;
    EXPECT_THROW(dispersion_study(c, std::nullopt), UsageError);
}

TEST(EpsSweep, PositiveDataHasNoNegativity) {
    ScenarioConfig c = cfg_from("demo");
    c.n = 8;
    c.t_end = 1e-4;
    c.sample_every = 5e-5;
    c.sweep_eps = {1e-1, 1e-2, 1e-3};
    const EpsSweepReport r = sweep_eps(c, std::nullopt);
    for (const auto& m : r.members) {
        EXPECT_EQ(m.max_chi_f, 0.0) << m.eps;
        EXPECT_EQ(m.max_neg_f, 0.0);
    }
}

TEST(NSweep, BandLimitedDataAgreesAtStart) {
    ScenarioConfig c = cfg_from("nsweep");
    c.t_end = 0.0;
    const NSweepReport r = sweep_n(c, std::nullopt);
    for (double d : r.distances) EXPECT_LT(d, 1e-14);
}

TEST(Reduction, ConstantFilmHasZeroDistance) {
    ScenarioConfig c = cfg_from("reduction");
    c.n = 8;
    c.f = FieldSpec::constant_value(0.9);
    c.t_end = 1e-3;
    c.sample_every = 5e-4;
    const ReductionReport r = reduction_thinfilm(c, std::nullopt);
    EXPECT_TRUE(r.ok);
    EXPECT_LT(r.max_rel_distance, 1e-15);
}
