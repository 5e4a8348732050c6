/// @file diagnostics.hpp
/// @brief Energy, dissipation rate, masses, minima and negativity functionals
///        of a Galerkin state, plus the linearization about a flat state.
///
/// Energy:       E = int 1/2 (R |f_x|^2 + S mu |(f+g)_x|^2) + mu Phi(Gamma)
/// Dissipation:  D = int |J_f|^2 + mu |J_g|^2 + (a_f mu^2/4)(S a_g Q3 + Sx)^2
///                     + (a_g mu/4) Sx^2 + mu Phi''(Gamma) D |Gamma_x|^2 >= 0
/// Both use the collocation quadrature, so along the semi-discrete flow
/// dE/dt = -D holds up to rounding.

#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>
#include <optional>

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>

#include "tpfilm/closures.hpp"
#include "tpfilm/fluxes.hpp"
#include "tpfilm/mollifier.hpp"
#include "tpfilm/regularization.hpp"
#include "tpfilm/spectral.hpp"

namespace tpfilm {

/// chi_delta(s).
inline double chi_delta(const MollifierKernel& k, double delta, double s) {
    if (!(delta > 0.0)) throw ParameterDomainError("chi_delta: delta must be positive");
    return k.chi(delta, s);
}

/// (L/Q) sum_q chi_delta(u(x_q)) over the grid values of a field.
inline double negativity_functional(const Vec& grid, const Basis& b, const MollifierKernel& k, double delta) {
    b.require_grid(grid, "negativity_functional");
    if (!(delta > 0.0)) throw ParameterDomainError("negativity_functional: delta must be positive");
    double acc = 0.0;
    for (Eigen::Index i = 0; i < grid.size(); ++i) acc += k.chi(delta, grid[i]);
    return b.weight() * acc;
}

/// Midpoint grid of `points` nodes on [0, L] carrying the values of a cosine series.
inline Vec synthesize_on_points(const Basis& b, const Vec& coeffs, int points) {
    b.require_coeffs(coeffs, "synthesize_on_points");
    if (points < 1) throw ParameterDomainError("synthesize_on_points: need at least one point");
    Vec out(points);
    const double L = b.length();
    for (int i = 0; i < points; ++i) {
        const double x = L * (static_cast<double>(i) + 0.5) / static_cast<double>(points);
        double s = 0.0;
        for (int k = 0; k < b.modes(); ++k) s += coeffs[k] * b.phi_at(k, x);
        out[i] = s;
    }
    return out;
}

/// int_0^L chi_delta(u) for u given by coefficients, on a midpoint grid with
/// refine * Q nodes. refine = 1 reuses the collocation grid.
inline double negativity_functional_coeffs(const Vec& coeffs, const Basis& b, const MollifierKernel& k,
                                           double delta, int refine = 1) {
    if (refine < 1) throw ParameterDomainError("negativity_functional: refine must be >= 1");
    if (refine == 1) return negativity_functional(b.phi() * coeffs, b, k, delta);
    const int points = refine * b.q();
    const Vec u = synthesize_on_points(b, coeffs, points);
    double acc = 0.0;
    for (int i = 0; i < points; ++i) acc += k.chi(delta, u[i]);
    return b.length() / static_cast<double>(points) * acc;
}

/// Energy density at every collocation node.
inline Vec energy_density(const GridFields& fl, const PhysicalParams& p, const SurfactantClosure& c) {
    const double R = p.R();
    const double Smu = p.S() * p.mu();
    Vec e(fl.f.size());
    for (Eigen::Index i = 0; i < e.size(); ++i) {
        const double fx = fl.dxf[i];
        const double sx = fl.dxf[i] + fl.dxg[i];
        e[i] = 0.5 * (R * fx * fx + Smu * sx * sx) + p.mu() * c.phi(fl.gamma[i]);
    }
    return e;
}

inline double energy(const SpectralState& s, const Basis& b, const PhysicalParams& p, const SurfactantClosure& c) {
    return integrate(b, energy_density(eval_fields(s, b, c), p, c));
}

inline double dissipation_rate(const SpectralState& s, const Basis& b, const PhysicalParams& p,
                               const SurfactantClosure& c, double eps) {
    return integrate(b, dissipation_density(eval_fluxes(s, b, p, c, eps), p));
}

/// dE/dt along the direction ds by the chain rule on the quadrature energy.
inline double energy_rate(const SpectralState& s, const SpectralState& ds, const Basis& b, const PhysicalParams& p,
                          const SurfactantClosure& c) {
    const GridFields fl = eval_fields(s, b, c);
    const Vec dfx = b.dphi() * ds.F;
    const Vec dgx = b.dphi() * ds.G;
    const Vec dv = b.phi() * ds.V;
    const double R = p.R();
    const double Smu = p.S() * p.mu();
    double acc = 0.0;
    for (Eigen::Index i = 0; i < dfx.size(); ++i) {
        const double sx = fl.dxf[i] + fl.dxg[i];
        const double wprime = 1.0 / c.phi_second(fl.gamma[i]);
        acc += R * fl.dxf[i] * dfx[i] + Smu * sx * (dfx[i] + dgx[i]) +
               p.mu() * c.phi_prime(fl.gamma[i]) * wprime * dv[i];
    }
    return b.weight() * acc;
}

/// One sampled row of the diagnostics series.
struct DiagnosticsRecord {
    double t = 0.0;
    double energy = 0.0;
    double diss_rate = 0.0;
    double diss_cum = 0.0;
    double energy_residual = 0.0;
    double mass_f = 0.0;
    double mass_g = 0.0;
    double mass_gamma = 0.0;
    double min_f = 0.0;
    double min_g = 0.0;
    double min_gamma = 0.0;
    double chi_f = 0.0;
    double chi_g = 0.0;
};

enum class DissipationAccumulation { stepper, trapezoid };

/// Turns sampled states into DiagnosticsRecords; holds the running totals.
class DiagnosticsCollector {
public:
    DiagnosticsCollector(const Basis& b, const PhysicalParams& p, const SurfactantClosure& c, double eps,
                         MollifierKernel kernel, DissipationAccumulation mode, int chi_refine = 1)
        : basis_(b), params_(p), closure_(c), eps_(eps), kernel_(std::move(kernel)), mode_(mode),
          chi_refine_(chi_refine), delta_(std::sqrt(eps)) {}

    /// Record for state s; `stepper_dissipated` is the integrated dissipation
    /// carried by the ODE state (used in stepper mode).
    DiagnosticsRecord collect(const SpectralState& s, double stepper_dissipated = 0.0) {
        const GridFields fl = eval_fields(s, basis_, closure_);
        const FluxBundle fb = eval_fluxes(fl, params_, closure_, eps_);
        DiagnosticsRecord r;
        r.t = s.t;
        r.energy = integrate(basis_, energy_density(fl, params_, closure_));
        r.diss_rate = integrate(basis_, dissipation_density(fb, params_));
        if (!started_) {
            e0_ = r.energy;
            cum_ = 0.0;
            offset_ = stepper_dissipated;
            started_ = true;
        } else if (mode_ == DissipationAccumulation::trapezoid) {
            cum_ += 0.5 * (r.t - last_t_) * (r.diss_rate + last_rate_);
        }
        if (mode_ == DissipationAccumulation::stepper) cum_ = stepper_dissipated - offset_;
        r.diss_cum = cum_;
        r.energy_residual = r.energy + r.diss_cum - e0_;
        r.mass_f = s.mass_f(basis_);
        r.mass_g = s.mass_g(basis_);
        r.mass_gamma = integrate(basis_, fl.gamma);
        r.min_f = fl.f.minCoeff();
        r.min_g = fl.g.minCoeff();
        r.min_gamma = fl.gamma.minCoeff();
        r.chi_f = negativity_functional_coeffs(s.F, basis_, kernel_, delta_, chi_refine_);
        r.chi_g = negativity_functional_coeffs(s.G, basis_, kernel_, delta_, chi_refine_);
        last_t_ = r.t;
        last_rate_ = r.diss_rate;
        return r;
    }

    /// Restores running totals when continuing from a checkpoint.
    void resume(double e0, double cum, double last_t, double last_rate, double offset) {
        started_ = true;
        e0_ = e0;
        cum_ = cum;
        last_t_ = last_t;
        last_rate_ = last_rate;
        offset_ = offset;
    }

    double e0() const noexcept { return e0_; }
    double cumulative() const noexcept { return cum_; }
    double last_t() const noexcept { return last_t_; }
    double last_rate() const noexcept { return last_rate_; }
    double offset() const noexcept { return offset_; }
    double delta() const noexcept { return delta_; }

private:
    const Basis& basis_;
    const PhysicalParams& params_;
    const SurfactantClosure& closure_;
    double eps_;
    MollifierKernel kernel_;
    DissipationAccumulation mode_;
    int chi_refine_;
    double delta_;
    bool started_ = false;
    double e0_ = 0.0;
    double cum_ = 0.0;
    double last_t_ = 0.0;
    double last_rate_ = 0.0;
    double offset_ = 0.0;
};

/// Flat state about which the dynamics are linearized.
struct FlatState {
    double f = 1.0;
    double g = 1.0;
    double gamma = 1.0;
};

/// A(k) with d/dt (df_k, dg_k, dGamma_k) = A(k) (df_k, dg_k, dGamma_k) for
/// perturbations proportional to cos(k pi x / L).
inline Eigen::Matrix3d dispersion_matrix(const PhysicalParams& p, const SurfactantClosure& c, double eps,
                                         const FlatState& flat, int k) {
    detail::require_eps(eps);
    Eigen::Matrix3d a = Eigen::Matrix3d::Zero();
    if (k == 0) return a;
    const double q = static_cast<double>(k) * std::numbers::pi / p.length();
    const double q2 = q * q;
    const double q4 = q2 * q2;
    const double R = p.R();
    const double S = p.S();
    const double mu = p.mu();
    const double af = a_eps(eps, flat.f);
    const double ag = a_eps(eps, flat.g);
    const double sp = c.sigma_prime(flat.gamma);
    const double sep = tent_eps(eps, sp);
    const double tau = tau_eps_from(eps, flat.gamma, sp);
    const double pf = R + S * mu;
    const double pg = S * mu;

    // Flux H_u = Cf d^3 f + Cg d^3 g + B dGamma/dx, so the mode amplitude obeys
    // d/dt u_k = -q^4 (Cf f_k + Cg g_k) + q^2 B Gamma_k.
    const double cf_f = pf * af * af * af / 3.0 + 0.5 * af * af * mu * S * ag;
    const double cg_f = pg * af * af * af / 3.0 + 0.5 * af * af * mu * S * ag;
    const double b_f = 0.5 * af * af * mu * sep;

    const double cf_g = 0.5 * ag * af * af * pf + mu * af * ag * ag * S + S * ag * ag * ag / 3.0;
    const double cg_g = 0.5 * ag * af * af * pg + mu * af * ag * ag * S + S * ag * ag * ag / 3.0;
    const double b_g = (ag * af * mu + 0.5 * ag * ag) * sep;

    const double cf_G = tau * (0.5 * af * af * pf + af * mu * S * ag + 0.5 * S * ag * ag);
    const double cg_G = tau * (0.5 * af * af * pg + af * mu * S * ag + 0.5 * S * ag * ag);
    const double b_G = tau * (af * mu + ag) * sep - p.diffusivity();

    a << -q4 * cf_f, -q4 * cg_f, q2 * b_f,
         -q4 * cf_g, -q4 * cg_g, q2 * b_g,
         -q4 * cf_G, -q4 * cg_G, q2 * b_G;
    return a;
}

inline Eigen::Vector3cd dispersion_eigenvalues(const Eigen::Matrix3d& a) {
    Eigen::EigenSolver<Eigen::Matrix3d> es(a, false);
    return es.eigenvalues();
}

}  // namespace tpfilm
