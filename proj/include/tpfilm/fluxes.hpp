/// @file fluxes.hpp
/// @brief Regularized fluxes on the collocation grid and the Galerkin
///        right-hand side d/dt (F, G, V) of the coefficient ODE.
///
/// With a_f = a_eps(f), a_g = a_eps(g), P = d^3((R + S mu) f + S mu g),
/// Q3 = d^3(f + g) and Sx = sigma_eps'(Gamma) dGamma/dx:
///   J_f  = sqrt(a_f) [ a_f P / sqrt3 + (sqrt3/2) mu (S a_g Q3 + Sx) ]
///   J_fg = sqrt(a_f) [ a_f P / sqrt3 + (2/sqrt3) mu (S a_g Q3 + Sx) ]
///   J_g  = sqrt(a_g) [ (S/sqrt3) a_g Q3 + (sqrt3/2) Sx ]
///   H_f  = a_f^{3/2}/sqrt3 J_f
///   H_g  = (sqrt3/2) a_g sqrt(a_f) J_fg + a_g^{3/2}/sqrt3 J_g
///   H_G  = (sqrt3/2) tau sqrt(a_f) J_fg + (sqrt3/2) tau sqrt(a_g) J_g
///          + tau a_g Sx / 4 - D dGamma/dx,         tau = tau_eps(Gamma)
/// and each field u in {f, g, W(v)} obeys du/dt + d/dx H_u = 0.

#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include <Eigen/Cholesky>
#include <Eigen/Dense>

#include "tpfilm/closures.hpp"
#include "tpfilm/errors.hpp"
#include "tpfilm/regularization.hpp"
#include "tpfilm/spectral.hpp"

namespace tpfilm {

/// Galerkin coefficients of f, g and v = Phi'(Gamma).
struct SpectralState {
    Vec F;
    Vec G;
    Vec V;
    double t = 0.0;

    double mass_f(const Basis& b) const { return std::sqrt(b.length()) * F[0]; }
    double mass_g(const Basis& b) const { return std::sqrt(b.length()) * G[0]; }
};

inline void require_state(const Basis& b, const SpectralState& s, const char* who) {
    b.require_coeffs(s.F, who);
    b.require_coeffs(s.G, who);
    b.require_coeffs(s.V, who);
}

/// State with f = f0, g = g0 and Gamma = gamma0 constant in space.
inline SpectralState constant_state(const Basis& b, const SurfactantClosure& c, double f0, double g0,
                                    double gamma0) {
    SpectralState s;
    s.F = Vec::Zero(b.modes());
    s.G = Vec::Zero(b.modes());
    s.V = Vec::Zero(b.modes());
    const double root = std::sqrt(b.length());
    s.F[0] = root * f0;
    s.G[0] = root * g0;
    s.V[0] = root * c.phi_prime(gamma0);
    return s;
}

struct GridFields {
    Vec f, g, v, gamma;
    Vec dxf, dxg, dxv, dxgamma;
    Vec d3f, d3g, d3fg;
};

/// Pointwise fields on the grid. Gamma = W(v), dGamma/dx = dv/dx / Phi''(Gamma).
inline GridFields eval_fields(const SpectralState& s, const Basis& b, const SurfactantClosure& c) {
    require_state(b, s, "eval_fields");
    GridFields out;
    out.f = b.phi() * s.F;
    out.g = b.phi() * s.G;
    out.v = b.phi() * s.V;
    out.dxf = b.dphi() * s.F;
    out.dxg = b.dphi() * s.G;
    out.dxv = b.dphi() * s.V;
    out.d3f = b.d3phi() * s.F;
    out.d3g = b.d3phi() * s.G;
    out.d3fg = out.d3f + out.d3g;
    const int q = b.q();
    out.gamma.resize(q);
    out.dxgamma.resize(q);
    for (int i = 0; i < q; ++i) {
        const double gm = c.inverse_w(out.v[i]);
        out.gamma[i] = gm;
        out.dxgamma[i] = out.dxv[i] / c.phi_second(gm);
    }
    return out;
}

struct FluxBundle {
    Vec j_f, j_fg, j_g;
    Vec h_f, h_g, h_gamma;
    Vec gamma_grid, dxgamma_grid;
    Vec a_f, a_g;
    Vec sigma_x;    ///< sigma_eps'(Gamma) dGamma/dx
    Vec marangoni;  ///< S a_g Q3 + sigma_x
    Vec tau;        ///< tau_eps(Gamma)
    Vec phi_second; ///< Phi''(Gamma)
};

/// Fluxes from precomputed grid fields.
inline FluxBundle eval_fluxes(const GridFields& fl, const PhysicalParams& p, const SurfactantClosure& c,
                              double eps) {
    detail::require_eps(eps);
    const double mu = p.mu();
    const double R = p.R();
    const double S = p.S();
    const double D = p.diffusivity();
    const double sqrt3 = std::numbers::sqrt3;
    const double half_sqrt3 = 0.5 * sqrt3;
    const double inv_sqrt3 = 1.0 / sqrt3;
    const double two_inv_sqrt3 = 2.0 / sqrt3;
    const double p_f = R + S * mu;
    const double p_g = S * mu;

    const auto q = fl.f.size();
    FluxBundle out;
    for (Vec* v : {&out.j_f, &out.j_fg, &out.j_g, &out.h_f, &out.h_g, &out.h_gamma, &out.a_f, &out.a_g,
                   &out.sigma_x, &out.marangoni, &out.tau, &out.phi_second}) {
        v->resize(q);
    }
    out.gamma_grid = fl.gamma;
    out.dxgamma_grid = fl.dxgamma;

    for (Eigen::Index i = 0; i < q; ++i) {
        const double af = a_eps_unchecked(eps, fl.f[i]);
        const double ag = a_eps_unchecked(eps, fl.g[i]);
        const double rf = std::sqrt(af);
        const double rg = std::sqrt(ag);
        const double P = p_f * fl.d3f[i] + p_g * fl.d3g[i];
        const double Q3 = fl.d3fg[i];
        const double gm = fl.gamma[i];
        const double sp = c.sigma_prime(gm);
        const double sep = tent_eps(eps, sp);
        const double tau = tau_eps_from(eps, gm, sp);
        const double sx = sep * fl.dxgamma[i];
        const double mar = S * ag * Q3 + sx;

        const double jf = rf * (af * P * inv_sqrt3 + half_sqrt3 * mu * mar);
        const double jfg = rf * (af * P * inv_sqrt3 + two_inv_sqrt3 * mu * mar);
        const double jg = rg * (S * inv_sqrt3 * ag * Q3 + half_sqrt3 * sx);

        out.j_f[i] = jf;
        out.j_fg[i] = jfg;
        out.j_g[i] = jg;
        out.h_f[i] = af * rf * inv_sqrt3 * jf;
        out.h_g[i] = half_sqrt3 * ag * rf * jfg + ag * rg * inv_sqrt3 * jg;
        out.h_gamma[i] = half_sqrt3 * tau * rf * jfg + half_sqrt3 * tau * rg * jg + 0.25 * tau * ag * sx -
                         D * fl.dxgamma[i];
        out.a_f[i] = af;
        out.a_g[i] = ag;
        out.sigma_x[i] = sx;
        out.marangoni[i] = mar;
        out.tau[i] = tau;
        out.phi_second[i] = c.phi_second(gm);
    }
    return out;
}

inline FluxBundle eval_fluxes(const SpectralState& s, const Basis& b, const PhysicalParams& p,
                              const SurfactantClosure& c, double eps) {
    return eval_fluxes(eval_fields(s, b, c), p, c, eps);
}

/// Pointwise dissipation density
///   |J_f|^2 + mu |J_g|^2 + (a_f mu^2/4) (S a_g Q3 + Sx)^2 + (a_g mu/4) Sx^2 + mu Phi'' D |dGamma/dx|^2,
/// every term non-negative.
inline Vec dissipation_density(const FluxBundle& fb, const PhysicalParams& p) {
    const double mu = p.mu();
    const double D = p.diffusivity();
    const auto q = fb.j_f.size();
    Vec out(q);
    for (Eigen::Index i = 0; i < q; ++i) {
        const double gx = fb.dxgamma_grid[i];
        out[i] = fb.j_f[i] * fb.j_f[i] + mu * fb.j_g[i] * fb.j_g[i] +
                 0.25 * fb.a_f[i] * mu * mu * fb.marangoni[i] * fb.marangoni[i] +
                 0.25 * fb.a_g[i] * mu * fb.sigma_x[i] * fb.sigma_x[i] + mu * fb.phi_second[i] * D * gx * gx;
    }
    return out;
}

struct RhsParts {
    Vec dF;
    Vec dG;
    Vec rhs_v;
};

/// dF_j = <H_f, dphi_j>, dG_j = <H_g, dphi_j>, rhs_v_j = <H_G, dphi_j>.
inline RhsParts assemble_rhs(const FluxBundle& fb, const Basis& b) {
    return {test_against_dx_basis(b, fb.h_f), test_against_dx_basis(b, fb.h_g),
            test_against_dx_basis(b, fb.h_gamma)};
}

inline RhsParts assemble_rhs(const SpectralState& s, const Basis& b, const PhysicalParams& p,
                             const SurfactantClosure& c, double eps) {
    return assemble_rhs(eval_fluxes(s, b, p, c, eps), b);
}

/// M_jk = <W'(v) phi_k, phi_j>_Q with W'(v) = 1/Phi''(W(v)).
inline Mat mass_matrix_from_grid(const Vec& v, const Basis& b, const SurfactantClosure& c) {
    b.require_grid(v, "mass_matrix");
    Vec wprime(v.size());
    for (Eigen::Index i = 0; i < v.size(); ++i) wprime[i] = c.inverse_w_prime(v[i]);
    const Mat weighted = (b.weight() * wprime).asDiagonal() * b.phi();
    Mat m = b.phi().transpose() * weighted;
    return 0.5 * (m + m.transpose());
}

inline Mat mass_matrix(const SpectralState& s, const Basis& b, const SurfactantClosure& c) {
    require_state(b, s, "mass_matrix");
    return mass_matrix_from_grid(b.phi() * s.V, b, c);
}

/// Solves M dV = rhs_v. For constant Phi'' = beta the matrix is I/beta and dV = beta rhs_v.
inline Vec solve_v_rate(const Vec& v_grid, const Vec& rhs_v, const Basis& b, const SurfactantClosure& c) {
    if (c.constant_curvature) return *c.constant_curvature * rhs_v;
    const Mat m = mass_matrix_from_grid(v_grid, b, c);
    Eigen::LLT<Mat> llt(m);
    if (llt.info() != Eigen::Success) {
        throw NumericalError("mass matrix is not positive definite (closure violates A2 at this state?)");
    }
    return llt.solve(rhs_v);
}

/// (dF, dG, dV) of the Galerkin ODE.
inline SpectralState time_derivative(const SpectralState& s, const Basis& b, const PhysicalParams& p,
                                     const SurfactantClosure& c, double eps) {
    const GridFields fl = eval_fields(s, b, c);
    const FluxBundle fb = eval_fluxes(fl, p, c, eps);
    RhsParts r = assemble_rhs(fb, b);
    SpectralState d;
    d.t = s.t;
    d.F = std::move(r.dF);
    d.G = std::move(r.dG);
    d.V = solve_v_rate(fl.v, r.rhs_v, b, c);
    return d;
}

/// Spectral radius of the local 2x2 fourth-order mobility matrix acting on (d^3 f, d^3 g).
inline double mobility_radius(double af, double ag, const PhysicalParams& p) {
    const double R = p.R();
    const double S = p.S();
    const double mu = p.mu();
    const double af2 = af * af;
    const double af3 = af2 * af;
    const double ag3 = ag * ag * ag;
    const double c12 = S * mu * (af3 / 3.0 + 0.5 * af2 * ag);
    const double c11 = R * af3 / 3.0 + c12;
    const double c22 = S * (ag3 / 3.0 + mu * (0.5 * af2 * ag + af * ag * ag));
    const double c21 = R * 0.5 * af2 * ag + c22;
    const double tr = c11 + c22;
    const double det = c11 * c22 - c12 * c21;
    const double disc = 0.25 * tr * tr - det;
    if (disc >= 0.0) {
        const double r = std::sqrt(disc);
        return std::max(std::abs(0.5 * tr + r), std::abs(0.5 * tr - r));
    }
    return std::sqrt(std::max(det, 0.0));
}

/// The Galerkin ODE as a flat system y = (F, G, V[, z]) where the optional last
/// entry z integrates the dissipation rate alongside the state.
class GalerkinSystem {
public:
    GalerkinSystem(Basis basis, PhysicalParams params, SurfactantClosure closure, double eps,
                   bool track_dissipation = true)
        : basis_(std::move(basis)),
          params_(std::move(params)),
          closure_(std::move(closure)),
          eps_(eps),
          track_(track_dissipation) {
        detail::require_eps(eps);
    }

    const Basis& basis() const noexcept { return basis_; }
    const PhysicalParams& params() const noexcept { return params_; }
    const SurfactantClosure& closure() const noexcept { return closure_; }
    double eps() const noexcept { return eps_; }
    bool tracks_dissipation() const noexcept { return track_; }

    int dimension() const noexcept { return 3 * basis_.modes() + (track_ ? 1 : 0); }

    Vec pack(const SpectralState& s, double dissipated = 0.0) const {
        require_state(basis_, s, "GalerkinSystem::pack");
        const int m = basis_.modes();
        Vec y(dimension());
        y.segment(0, m) = s.F;
        y.segment(m, m) = s.G;
        y.segment(2 * m, m) = s.V;
        if (track_) y[3 * m] = dissipated;
        return y;
    }

    SpectralState unpack(const Vec& y, double t) const {
        if (y.size() != dimension()) throw ShapeError("GalerkinSystem::unpack: wrong state length");
        const int m = basis_.modes();
        SpectralState s;
        s.F = y.segment(0, m);
        s.G = y.segment(m, m);
        s.V = y.segment(2 * m, m);
        s.t = t;
        return s;
    }

    double dissipated(const Vec& y) const { return track_ ? y[3 * basis_.modes()] : 0.0; }

    void rhs(double t, const Vec& y, Vec& dy) const {
        const SpectralState s = unpack(y, t);
        const GridFields fl = eval_fields(s, basis_, closure_);
        const FluxBundle fb = eval_fluxes(fl, params_, closure_, eps_);
        const RhsParts r = assemble_rhs(fb, basis_);
        const int m = basis_.modes();
        dy.resize(dimension());
        dy.segment(0, m) = r.dF;
        dy.segment(m, m) = r.dG;
        dy.segment(2 * m, m) = solve_v_rate(fl.v, r.rhs_v, basis_, closure_);
        if (track_) dy[3 * m] = integrate(basis_, dissipation_density(fb, params_));
    }

    /// Upper estimate of the largest decay rate: m_max k^4 + D_eff k^2 with k = n pi / L.
    double stiffness_bound(double, const Vec& y) const {
        const int m = basis_.modes();
        const Vec f = basis_.phi() * y.segment(0, m);
        const Vec g = basis_.phi() * y.segment(m, m);
        const Vec v = basis_.phi() * y.segment(2 * m, m);
        double m_max = 0.0;
        double d_eff = 0.0;
        const double mu = params_.mu();
        for (Eigen::Index i = 0; i < f.size(); ++i) {
            const double af = a_eps_unchecked(eps_, f[i]);
            const double ag = a_eps_unchecked(eps_, g[i]);
            m_max = std::max(m_max, mobility_radius(af, ag, params_));
            const double gm = closure_.inverse_w(v[i]);
            const double sp = closure_.sigma_prime(gm);
            const double marangoni = std::abs(tau_eps_from(eps_, gm, sp) * tent_eps(eps_, sp));
            d_eff = std::max(d_eff, params_.diffusivity() + (mu * af + ag) * marangoni);
        }
        const double k = basis_.wavenumber(basis_.n());
        const double k2 = k * k;
        return m_max * k2 * k2 + d_eff * k2;
    }

private:
    Basis basis_;
    PhysicalParams params_;
    SurfactantClosure closure_;
    double eps_;
    bool track_;
};

}  // namespace tpfilm
