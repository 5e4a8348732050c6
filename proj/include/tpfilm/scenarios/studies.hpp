/// @file studies.hpp
/// @brief Multi-run studies: eps sweep, n sweep, mu = 0 reduction against a
///        single-equation reference, and dispersion fits against the
///        linearization.

#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <complex>
#include <exception>
#include <filesystem>
#include <limits>
#include <mutex>
#include <numbers>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>

#include "tpfilm/diagnostics.hpp"
#include "tpfilm/fluxes.hpp"
#include "tpfilm/regularization.hpp"
#include "tpfilm/scenarios/config.hpp"
#include "tpfilm/scenarios/io.hpp"
#include "tpfilm/scenarios/run.hpp"
#include "tpfilm/spectral.hpp"
#include "tpfilm/timestepper.hpp"

namespace tpfilm {

/// Pass thresholds applied by the study reports.
inline constexpr double kEpsSlopeThreshold = 0.9;
inline constexpr double kGammaFloor = -1e-8;
inline constexpr double kReductionTolerance = 1e-8;
inline constexpr double kDispersionTolerance = 0.02;
inline constexpr double kEnergySlack = 1e-8;
inline constexpr double kFitFloor = 1e-14;

/// Runs fn(0..count-1) on at most `jobs` threads; rethrows the first exception.
template <class Fn>
void parallel_for(int count, int jobs, Fn fn) {
    const int workers = std::max(1, std::min(jobs, count));
    if (workers == 1) {
        for (int i = 0; i < count; ++i) fn(i);
        return;
    }
    std::atomic<int> next{0};
    std::exception_ptr error;
    std::mutex error_mutex;
    std::vector<std::thread> pool;
    for (int w = 0; w < workers; ++w) {
        pool.emplace_back([&]() {
            for (int i = next++; i < count; i = next++) {
                try {
                    fn(i);
                } catch (...) {
                    std::lock_guard<std::mutex> lock(error_mutex);
                    if (!error) error = std::current_exception();
                }
            }
        });
    }
    for (auto& t : pool) t.join();
    if (error) std::rethrow_exception(error);
}

/// Least-squares slope of log y against log x; NaN if any value is not positive.
inline double loglog_slope(const std::vector<double>& x, const std::vector<double>& y) {
    if (x.size() != y.size() || x.size() < 2) return std::numeric_limits<double>::quiet_NaN();
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    const double m = static_cast<double>(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) {
        if (!(x[i] > 0.0) || !(y[i] > 0.0) || !std::isfinite(x[i]) || !std::isfinite(y[i])) {
            return std::numeric_limits<double>::quiet_NaN();
        }
        const double lx = std::log(x[i]), ly = std::log(y[i]);
        sx += lx;
        sy += ly;
        sxx += lx * lx;
        sxy += lx * ly;
    }
    const double den = m * sxx - sx * sx;
    if (den == 0.0) return std::numeric_limits<double>::quiet_NaN();
    return (m * sxy - sx * sy) / den;
}

/// Least-squares slope of y against x.
inline double linear_slope(const std::vector<double>& x, const std::vector<double>& y) {
    const double m = static_cast<double>(x.size());
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sx += x[i];
        sy += y[i];
        sxx += x[i] * x[i];
        sxy += x[i] * y[i];
    }
    return (m * sxy - sx * sy) / (m * sxx - sx * sx);
}

/// max over a midpoint grid of `points` nodes of |u_a - u_b|, each a cosine
/// series on its own basis (same length).
inline double sup_distance(const Basis& ba, const Vec& a, const Basis& bb, const Vec& b, int points = 2048) {
    return (synthesize_on_points(ba, a, points) - synthesize_on_points(bb, b, points)).cwiseAbs().maxCoeff();
}

inline json finite_or_null(double x) { return std::isfinite(x) ? json(x) : json(nullptr); }

// ---------------------------------------------------------------------------
// eps sweep

struct EpsMember {
    double eps = 0.0;
    bool ok = true;
    std::string failure;
    double max_chi_f = 0.0;
    double max_neg_f = 0.0;  ///< max over samples of -min f
    double min_gamma = 0.0;
    std::vector<SpectralState> states;
};

struct EpsSweepReport {
    std::vector<EpsMember> members;
    std::vector<double> cauchy;  ///< sup_t ||f_i - f_{i+1}||_inf between consecutive members
    double slope = std::numeric_limits<double>::quiet_NaN();
    bool monotone = false;
    double min_gamma = std::numeric_limits<double>::infinity();
    bool all_ok = true;

    bool slope_pass() const { return std::isfinite(slope) && slope >= kEpsSlopeThreshold && monotone && all_ok; }
    bool gamma_pass() const { return min_gamma >= kGammaFloor && all_ok; }

    json to_json() const {
        json j;
        j["members"] = json::array();
        for (const auto& m : members) {
            j["members"].push_back({{"eps", m.eps},
                                    {"ok", m.ok},
                                    {"failure", m.failure},
                                    {"max_chi_f", m.max_chi_f},
                                    {"max_neg_f", m.max_neg_f},
                                    {"min_gamma", m.min_gamma}});
        }
        j["cauchy_sup_distance"] = cauchy;
        j["slope"] = finite_or_null(slope);
        j["slope_threshold"] = kEpsSlopeThreshold;
        j["monotone"] = monotone;
        j["min_gamma"] = min_gamma;
        j["gamma_floor"] = kGammaFloor;
        j["all_ok"] = all_ok;
        j["slope_pass"] = slope_pass();
        j["gamma_pass"] = gamma_pass();
        return j;
    }
};

inline std::string member_dir_name(const char* prefix, int i) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%s_%02d", prefix, i);
    return buf;
}

/// One run per eps in cfg.sweep_eps (must be strictly decreasing). With an
/// empty `dir` nothing is written.
inline EpsSweepReport sweep_eps(const ScenarioConfig& base, const std::optional<fs::path>& dir, int jobs = 1) {
    const auto& list = base.sweep_eps;
    if (list.size() < 2) throw UsageError("sweep-eps: need at least two eps values");
    for (std::size_t i = 1; i < list.size(); ++i) {
        if (!(list[i] < list[i - 1])) throw UsageError("sweep-eps: eps list must be strictly decreasing");
    }
    EpsSweepReport rep;
    rep.members.resize(list.size());
    parallel_for(static_cast<int>(list.size()), jobs, [&](int i) {
        ScenarioConfig c = base;
        c.eps = list[i];
        RunOptions opt;
        opt.write_files = dir.has_value();
        const fs::path sub = dir ? *dir / member_dir_name("eps", i) : fs::path();
        const RunOutcome o = run_scenario(c, sub, opt);
        EpsMember& m = rep.members[i];
        m.eps = c.eps;
        m.ok = o.ok;
        m.failure = o.failure;
        m.min_gamma = std::numeric_limits<double>::infinity();
        for (const auto& r : o.records) {
            m.max_chi_f = std::max(m.max_chi_f, r.chi_f);
            m.max_neg_f = std::max(m.max_neg_f, -r.min_f);
            m.min_gamma = std::min(m.min_gamma, r.min_gamma);
        }
        m.states = o.states;
    });
    const Basis b(base.length, base.n, base.oversample);
    std::vector<double> eps, chi;
    for (std::size_t i = 0; i < rep.members.size(); ++i) {
        const auto& m = rep.members[i];
        rep.all_ok = rep.all_ok && m.ok;
        rep.min_gamma = std::min(rep.min_gamma, m.min_gamma);
        eps.push_back(m.eps);
        chi.push_back(m.max_chi_f);
        if (i + 1 < rep.members.size()) {
            const auto& nx = rep.members[i + 1];
            const std::size_t common = std::min(m.states.size(), nx.states.size());
            double d = 0.0;
            for (std::size_t k = 0; k < common; ++k) d = std::max(d, sup_distance(b, m.states[k].F, b, nx.states[k].F));
            rep.cauchy.push_back(d);
        }
    }
    rep.slope = loglog_slope(eps, chi);
    rep.monotone = true;
    for (std::size_t i = 1; i < chi.size(); ++i) rep.monotone = rep.monotone && chi[i] <= chi[i - 1];
    if (dir) write_json(*dir / "eps_sweep.json", rep.to_json());
    return rep;
}

// ---------------------------------------------------------------------------
// n sweep

struct NMember {
    int n = 0;
    double oversample = 0.0;
    double rel_tol = 0.0;
    bool ok = true;
    std::string failure;
    double max_abs_residual = 0.0;
    double final_abs_residual = 0.0;
    double max_energy_increase = 0.0;  ///< max_k (E_{k+1} - E_k), relative to E(0)
    SpectralState final_state;
};

struct NSweepReport {
    std::vector<NMember> members;
    std::vector<double> distances;  ///< ||f_{n_i} - f_{n_{i+1}}||_inf at t_end
    bool distances_non_increasing = false;
    bool residuals_non_increasing = false;
    bool energy_monotone = false;
    bool all_ok = true;

    bool pass() const { return distances_non_increasing && residuals_non_increasing && energy_monotone && all_ok; }

    json to_json() const {
        json j;
        j["members"] = json::array();
        for (const auto& m : members) {
            j["members"].push_back({{"n", m.n},
                                    {"oversample", m.oversample},
                                    {"rel_tol", m.rel_tol},
                                    {"ok", m.ok},
                                    {"failure", m.failure},
                                    {"max_abs_energy_residual", m.max_abs_residual},
                                    {"final_abs_energy_residual", m.final_abs_residual},
                                    {"max_relative_energy_increase", m.max_energy_increase}});
        }
        j["sup_distance"] = distances;
        j["distances_non_increasing"] = distances_non_increasing;
        j["residuals_non_increasing"] = residuals_non_increasing;
        j["energy_monotone"] = energy_monotone;
        j["energy_slack"] = kEnergySlack;
        j["all_ok"] = all_ok;
        j["pass"] = pass();
        return j;
    }
};

/// Largest relative energy increase between consecutive records.
inline double max_energy_increase(const std::vector<DiagnosticsRecord>& rec) {
    if (rec.empty()) return 0.0;
    const double scale = std::abs(rec.front().energy) > 0.0 ? std::abs(rec.front().energy) : 1.0;
    double worst = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 1; i < rec.size(); ++i) worst = std::max(worst, (rec[i].energy - rec[i - 1].energy) / scale);
    return rec.size() > 1 ? worst : 0.0;
}

/// Member configuration i of an n sweep.
inline ScenarioConfig n_sweep_member(const ScenarioConfig& base, std::size_t i) {
    ScenarioConfig c = base;
    c.n = base.sweep_n[i];
    if (base.sweep_coupled) {
        const double scale = static_cast<double>(c.n) / static_cast<double>(base.sweep_n.front());
        c.oversample = base.oversample * scale;
        const double tighten = std::pow(10.0, -static_cast<double>(i));
        c.control.rel_tol = base.control.rel_tol * tighten;
        c.control.abs_tol = base.control.abs_tol * tighten;
    }
    return c;
}

inline NSweepReport sweep_n(const ScenarioConfig& base, const std::optional<fs::path>& dir, int jobs = 1) {
    const auto& list = base.sweep_n;
    if (list.size() < 2) throw UsageError("sweep-n: need at least two n values");
    for (std::size_t i = 1; i < list.size(); ++i) {
        if (!(list[i] > list[i - 1])) throw UsageError("sweep-n: n list must be strictly increasing");
    }
    NSweepReport rep;
    rep.members.resize(list.size());
    parallel_for(static_cast<int>(list.size()), jobs, [&](int i) {
        const ScenarioConfig c = n_sweep_member(base, static_cast<std::size_t>(i));
        RunOptions opt;
        opt.write_files = dir.has_value();
        opt.keep_states = false;
        const RunOutcome o = run_scenario(c, dir ? *dir / member_dir_name("n", i) : fs::path(), opt);
        NMember& m = rep.members[i];
        m.n = c.n;
        m.oversample = c.oversample;
        m.rel_tol = c.control.rel_tol;
        m.ok = o.ok;
        m.failure = o.failure;
        for (const auto& r : o.records) m.max_abs_residual = std::max(m.max_abs_residual, std::abs(r.energy_residual));
        m.final_abs_residual = o.records.empty() ? 0.0 : std::abs(o.records.back().energy_residual);
        m.max_energy_increase = max_energy_increase(o.records);
        m.final_state = o.final_state;
    });
    rep.distances_non_increasing = true;
    rep.residuals_non_increasing = true;
    rep.energy_monotone = true;
    for (std::size_t i = 0; i < rep.members.size(); ++i) {
        const auto& m = rep.members[i];
        rep.all_ok = rep.all_ok && m.ok;
        rep.energy_monotone = rep.energy_monotone && m.max_energy_increase <= kEnergySlack;
        if (i + 1 < rep.members.size()) {
            const auto& nx = rep.members[i + 1];
            const Basis ba(base.length, m.n, m.oversample), bb(base.length, nx.n, nx.oversample);
            rep.distances.push_back(sup_distance(ba, m.final_state.F, bb, nx.final_state.F));
            rep.residuals_non_increasing = rep.residuals_non_increasing && nx.max_abs_residual <= m.max_abs_residual;
        }
    }
    for (std::size_t i = 1; i < rep.distances.size(); ++i) {
        rep.distances_non_increasing = rep.distances_non_increasing && rep.distances[i] <= rep.distances[i - 1];
    }
    if (dir) write_json(*dir / "n_sweep.json", rep.to_json());
    return rep;
}

// ---------------------------------------------------------------------------
// mu = 0 reduction

/// d/dt f + d/dx (R a_eps(f)^3 / 3 d^3 f / dx^3) = 0 on the cosine basis.
class ThinFilmReference {
public:
    ThinFilmReference(Basis basis, double R, double eps) : basis_(std::move(basis)), R_(R), eps_(eps) {
        detail::require_eps(eps);
    }

    int dimension() const noexcept { return basis_.modes(); }
    const Basis& basis() const noexcept { return basis_; }

    void rhs(double, const Vec& y, Vec& dy) const {
        const Vec f = basis_.phi() * y;
        const Vec f3 = basis_.d3phi() * y;
        Vec flux(f.size());
        for (Eigen::Index i = 0; i < f.size(); ++i) {
            const double a = a_eps_unchecked(eps_, f[i]);
            flux[i] = R_ * a * a * a / 3.0 * f3[i];
        }
        dy = basis_.weight() * (basis_.dphi().transpose() * flux);
        dy[0] = 0.0;
    }

    double stiffness_bound(double, const Vec& y) const {
        const Vec f = basis_.phi() * y;
        double m = 0.0;
        for (Eigen::Index i = 0; i < f.size(); ++i) {
            const double a = a_eps_unchecked(eps_, f[i]);
            m = std::max(m, R_ * a * a * a / 3.0);
        }
        const double k = basis_.wavenumber(basis_.n());
        return m * k * k * k * k;
    }

private:
    Basis basis_;
    double R_;
    double eps_;
};

struct ReductionReport {
    bool ok = true;
    std::string failure;
    std::vector<double> times;
    std::vector<double> rel_distance;  ///< ||f_full - f_ref||_inf / ||f_ref||_inf per sample
    double max_rel_distance = 0.0;
    double max_gamma_deviation = 0.0;  ///< max over samples and nodes of |Gamma - Gamma0|
    double max_g_deviation = 0.0;      ///< max over samples and nodes of |g - g0|

    bool pass() const { return ok && max_rel_distance <= kReductionTolerance; }

    json to_json() const {
        return json{{"ok", ok},
                    {"failure", failure},
                    {"times", times},
                    {"relative_sup_distance", rel_distance},
                    {"max_relative_sup_distance", max_rel_distance},
                    {"tolerance", kReductionTolerance},
                    {"max_gamma_deviation", max_gamma_deviation},
                    {"max_g_deviation", max_g_deviation},
                    {"pass", pass()}};
    }
};

inline ReductionReport reduction_thinfilm(const ScenarioConfig& cfg, const std::optional<fs::path>& dir) {
    if (cfg.mu != 0.0) throw UsageError("reduce-thinfilm: config must set mu = 0");
    if (cfg.gamma.kind != FieldKind::constant) throw UsageError("reduce-thinfilm: gamma must be constant");
    ReductionReport rep;
    RunOptions opt;
    opt.write_files = dir.has_value();
    const RunOutcome full = run_scenario(cfg, dir ? *dir / "full" : fs::path(), opt);
    rep.ok = full.ok;
    rep.failure = full.failure;

    const Basis b(cfg.length, cfg.n, cfg.oversample);
    const SurfactantClosure c = cfg.make_closure();
    const SpectralState s0 = build_initial_state(cfg, b, c);
    const ThinFilmReference ref(b, cfg.params().R(), cfg.eps);
    const Trajectory tr = integrate(ref, s0.F, 0.0, cfg.t_end, cfg.sample_every, cfg.control);
    if (tr.failed) {
        rep.ok = false;
        rep.failure += (rep.failure.empty() ? "" : "; ") + std::string("reference: ") + tr.failure;
    }
    const Vec g0 = b.phi() * s0.G;
    const double gamma0 = cfg.gamma.value;
    const std::size_t common = std::min(full.states.size(), tr.states.size());
    for (std::size_t k = 0; k < common; ++k) {
        const double scale = (b.phi() * tr.states[k]).cwiseAbs().maxCoeff();
        const double d = sup_distance(b, full.states[k].F, b, tr.states[k]) / scale;
        rep.times.push_back(tr.times[k]);
        rep.rel_distance.push_back(d);
        rep.max_rel_distance = std::max(rep.max_rel_distance, d);
        const GridFields fl = eval_fields(full.states[k], b, c);
        rep.max_gamma_deviation = std::max(rep.max_gamma_deviation, (fl.gamma.array() - gamma0).abs().maxCoeff());
        rep.max_g_deviation = std::max(rep.max_g_deviation, (fl.g - g0).cwiseAbs().maxCoeff());
    }
    if (common == 0) rep.ok = false;
    if (dir) write_json(*dir / "reduction.json", rep.to_json());
    return rep;
}

// ---------------------------------------------------------------------------
// dispersion

struct DispersionEntry {
    int k = 0;
    int branch = 0;
    double eig_re = 0.0;
    double eig_im = 0.0;
    double fitted = std::numeric_limits<double>::quiet_NaN();
    double rel_error = std::numeric_limits<double>::quiet_NaN();
    bool skipped = false;
    std::string reason;
};

struct DispersionReport {
    std::vector<DispersionEntry> entries;
    double max_rel_error = 0.0;
    int fitted_count = 0;
    bool ok = true;
    std::string failure;
    // mu = 0 closed form for the f mode k = 1
    double mu0_closed_form = std::numeric_limits<double>::quiet_NaN();
    double mu0_fitted = std::numeric_limits<double>::quiet_NaN();
    double mu0_rel_error = std::numeric_limits<double>::quiet_NaN();

    bool coupled_pass() const { return ok && fitted_count > 0 && max_rel_error <= kDispersionTolerance; }
    bool mu0_pass() const { return ok && std::isfinite(mu0_rel_error) && mu0_rel_error <= kDispersionTolerance; }

    json to_json() const {
        json j;
        j["entries"] = json::array();
        for (const auto& e : entries) {
            j["entries"].push_back({{"k", e.k},
                                    {"branch", e.branch},
                                    {"eigenvalue_re", e.eig_re},
                                    {"eigenvalue_im", e.eig_im},
                                    {"fitted_rate", finite_or_null(e.fitted)},
                                    {"relative_error", finite_or_null(e.rel_error)},
                                    {"skipped", e.skipped},
                                    {"reason", e.reason}});
        }
        j["max_relative_error"] = max_rel_error;
        j["tolerance"] = kDispersionTolerance;
        j["mu0"] = {{"closed_form", finite_or_null(mu0_closed_form)},
                    {"fitted", finite_or_null(mu0_fitted)},
                    {"relative_error", finite_or_null(mu0_rel_error)}};
        j["ok"] = ok;
        j["failure"] = failure;
        j["coupled_pass"] = coupled_pass();
        j["mu0_pass"] = mu0_pass();
        return j;
    }
};

namespace dispersion_detail {

inline FlatState flat_state_of(const ScenarioConfig& cfg) {
    for (const FieldSpec* f : {&cfg.f, &cfg.g, &cfg.gamma}) {
        if (f->kind != FieldKind::constant) throw UsageError("dispersion: f, g and gamma must be constant fields");
    }
    return FlatState{cfg.f.value, cfg.g.value, cfg.gamma.value};
}

/// Flat state plus amp * (df, dg, dGamma) cos(k pi x / L); v is perturbed to first order.
inline SpectralState perturbed_state(const Basis& b, const SurfactantClosure& c, const FlatState& flat, int k,
                                     const Eigen::Vector3d& dir) {
    SpectralState s = constant_state(b, c, flat.f, flat.g, flat.gamma);
    const double scale = std::sqrt(b.length() / 2.0);
    s.F[k] += dir[0] * scale;
    s.G[k] += dir[1] * scale;
    s.V[k] += c.phi_second(flat.gamma) * dir[2] * scale;
    return s;
}

/// Mode-k amplitudes (f_k, g_k, Gamma_k) relative to the cos(k pi x / L) profile.
inline Eigen::Vector3d mode_amplitudes(const SpectralState& s, const Basis& b, const SurfactantClosure& c, int k) {
    const double scale = std::sqrt(b.length() / 2.0);
    const GridFields fl = eval_fields(s, b, c);
    const Vec gk = analyze(b, fl.gamma);
    return Eigen::Vector3d(s.F[k] / scale, s.G[k] / scale, gk[k] / scale);
}

inline constexpr int kFitSamples = 20;

}  // namespace dispersion_detail

/// Fits the decay rate of each real eigen-branch of the mode-k linearization
/// from nonlinear runs started on the right eigenvector, measured along the
/// left eigenvector. Also checks the mu = 0 closed form for the f mode k = 1.
inline DispersionReport dispersion_study(const ScenarioConfig& cfg, const std::optional<fs::path>& dir) {
    using namespace dispersion_detail;
    cfg.validate();
    const FlatState flat = flat_state_of(cfg);
    const Basis b(cfg.length, cfg.n, cfg.oversample);
    const SurfactantClosure c = cfg.make_closure();
    const PhysicalParams p = cfg.params();
    DispersionReport rep;

    for (int k : cfg.dispersion_k) {
        if (k < 1 || k > cfg.n) throw UsageError("dispersion: k must lie in 1..n");
        const Eigen::Matrix3d a = dispersion_matrix(p, c, cfg.eps, flat, k);
        Eigen::EigenSolver<Eigen::Matrix3d> es(a, true);
        const Eigen::Matrix3cd right = es.eigenvectors();
        const Eigen::Matrix3cd left = right.inverse();
        for (int j = 0; j < 3; ++j) {
            DispersionEntry e;
            e.k = k;
            e.branch = j;
            e.eig_re = es.eigenvalues()[j].real();
            e.eig_im = es.eigenvalues()[j].imag();
            if (std::abs(e.eig_im) > 1e-12 * std::abs(e.eig_re)) {
                e.skipped = true;
                e.reason = "complex eigenvalue";
                rep.entries.push_back(e);
                continue;
            }
            Eigen::Vector3d v = right.col(j).real();
            v /= v.cwiseAbs().maxCoeff();
            const Eigen::Vector3d w = left.row(j).real();
            const SpectralState s0 = perturbed_state(b, c, flat, k, cfg.dispersion_amplitude * v);
            const GalerkinSystem sys(b, p, c, cfg.eps, false);
            const double horizon = 2.0 / std::abs(e.eig_re);
            const Trajectory tr = integrate(sys, sys.pack(s0), 0.0, horizon, horizon / kFitSamples, cfg.control);
            if (tr.failed) {
                rep.ok = false;
                rep.failure = "k = " + std::to_string(k) + ": " + tr.failure;
                e.skipped = true;
                e.reason = tr.failure;
                rep.entries.push_back(e);
                continue;
            }
            std::vector<double> ts, logs;
            for (std::size_t i = 0; i < tr.states.size(); ++i) {
                const double proj = std::abs(w.dot(mode_amplitudes(sys.unpack(tr.states[i], tr.times[i]), b, c, k)));
                if (proj < kFitFloor) break;
                ts.push_back(tr.times[i]);
                logs.push_back(std::log(proj));
            }
            if (ts.size() < 3) {
                e.skipped = true;
                e.reason = "amplitude below fit floor";
            } else {
                e.fitted = linear_slope(ts, logs);
                e.rel_error = std::abs(e.fitted - e.eig_re) / std::abs(e.eig_re);
                rep.max_rel_error = std::max(rep.max_rel_error, e.rel_error);
                ++rep.fitted_count;
            }
            rep.entries.push_back(e);
        }
    }

    // mu = 0: the f equation decouples; perturb f alone.
    {
        ScenarioConfig c0 = cfg;
        c0.mu = 0.0;
        const PhysicalParams p0 = c0.params();
        const double af = a_eps(cfg.eps, flat.f);
        const double q = std::numbers::pi / cfg.length;
        rep.mu0_closed_form = -p0.R() * af * af * af * q * q * q * q / 3.0;
        const GalerkinSystem sys(b, p0, c, cfg.eps, false);
        const SpectralState s0 =
            perturbed_state(b, c, flat, 1, Eigen::Vector3d(cfg.dispersion_amplitude, 0.0, 0.0));
        const double horizon = 2.0 / std::abs(rep.mu0_closed_form);
        const Trajectory tr = integrate(sys, sys.pack(s0), 0.0, horizon, horizon / kFitSamples, cfg.control);
        if (tr.failed) {
            rep.ok = false;
            rep.failure = "mu = 0: " + tr.failure;
        } else {
            std::vector<double> ts, logs;
            for (std::size_t i = 0; i < tr.states.size(); ++i) {
                const double amp = std::abs(tr.states[i][1]) / std::sqrt(cfg.length / 2.0);
                if (amp < kFitFloor) break;
                ts.push_back(tr.times[i]);
                logs.push_back(std::log(amp));
            }
            if (ts.size() >= 3) {
                rep.mu0_fitted = linear_slope(ts, logs);
                rep.mu0_rel_error = std::abs(rep.mu0_fitted - rep.mu0_closed_form) / std::abs(rep.mu0_closed_form);
            }
        }
    }
    if (dir) {
        fs::create_directories(*dir);
        write_json(*dir / "dispersion.json", rep.to_json());
    }
    return rep;
}

}  // namespace tpfilm
