/// @file closures.hpp
/// @brief Physical constants of the two-layer film and the surfactant closure
///        (surface tension sigma, its potential Phi and the inverse W of Phi').
///
/// The closure must satisfy
///   A1  Phi(1) = Phi'(1) = 0 and Phi''(s) = -sigma'(s)/s,
///   A2  Phi''(s) >= c_Phi > 0,
///   A3  Phi''(s) <= C_Phi (|s|^r + 1), r in (0,1),
/// on the whole real line. Closures are plain callables so that users can
/// plug in their own profile; validate_closure() checks A1-A3 on a sample.

#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

#include "tpfilm/errors.hpp"

namespace tpfilm {

struct Coefficients {
    double R;
    double S;
};

/// R = sigma1c + sigma2c * mu, S = sigma2c.
/// mu = 0 is accepted: it is the single-layer reduction limit.
inline Coefficients derive_coefficients(double sigma1c, double sigma2c, double mu) {
    if (!(sigma1c > 0.0) || !(sigma2c > 0.0) || !(mu >= 0.0) || !std::isfinite(sigma1c) ||
        !std::isfinite(sigma2c) || !std::isfinite(mu)) {
        throw ParameterDomainError("derive_coefficients: require sigma1c > 0, sigma2c > 0, mu >= 0");
    }
    return {sigma1c + sigma2c * mu, sigma2c};
}

/// Fluid constants. Immutable once constructed; R and S are derived.
class PhysicalParams {
public:
    PhysicalParams(double mu, double sigma1c, double sigma2c, double diffusivity, double length)
        : mu_(mu), sigma1c_(sigma1c), sigma2c_(sigma2c), diffusivity_(diffusivity), length_(length) {
        const auto c = derive_coefficients(sigma1c, sigma2c, mu);
        if (!(diffusivity > 0.0) || !(length > 0.0) || !std::isfinite(diffusivity) ||
            !std::isfinite(length)) {
            throw ParameterDomainError("PhysicalParams: diffusivity and length must be positive");
        }
        R_ = c.R;
        S_ = c.S;
        if (!(R_ > S_ * mu_)) {
            throw ParameterDomainError("PhysicalParams: R > S*mu violated");
        }
    }

    double mu() const noexcept { return mu_; }
    double sigma1c() const noexcept { return sigma1c_; }
    double sigma2c() const noexcept { return sigma2c_; }
    double diffusivity() const noexcept { return diffusivity_; }
    double length() const noexcept { return length_; }
    double R() const noexcept { return R_; }
    double S() const noexcept { return S_; }

    /// R > S does not follow from positivity alone; reported, never assumed.
    bool r_exceeds_s() const noexcept { return R_ > S_; }

    PhysicalParams with_mu(double mu) const {
        return PhysicalParams(mu, sigma1c_, sigma2c_, diffusivity_, length_);
    }
    PhysicalParams with_diffusivity(double d) const {
        return PhysicalParams(mu_, sigma1c_, sigma2c_, d, length_);
    }

private:
    double mu_;
    double sigma1c_;
    double sigma2c_;
    double diffusivity_;
    double length_;
    double R_ = 0.0;
    double S_ = 0.0;
};

using ScalarFn = std::function<double(double)>;

/// Surface-tension closure. All callables are total functions on the reals.
struct SurfactantClosure {
    std::string name;
    ScalarFn sigma;
    ScalarFn sigma_prime;
    ScalarFn phi;
    ScalarFn phi_prime;
    ScalarFn phi_second;
    ScalarFn inverse_w;  ///< W = (Phi')^{-1}
    double c_phi = 0.0;
    double big_c_phi = 0.0;
    double growth_r = 0.5;

    /// sigma''(0), used for the removable point of Phi'' = -sigma'/s. May be empty.
    ScalarFn sigma_second;
    /// Inverse of s -> |sigma'(s)| on s >= 0 (monotone there). May be empty.
    ScalarFn abs_sigma_prime_inverse;
    /// Set when Phi'' is constant; the v-equation mass matrix is then (1/value) I.
    std::optional<double> constant_curvature;

    /// W'(v) = 1 / Phi''(W(v)).
    double inverse_w_prime(double v) const { return 1.0 / phi_second(inverse_w(v)); }
};

/// sigma'(s) = -beta s. The simplest profile satisfying A1-A3 on all of R.
inline SurfactantClosure quadratic_closure(double beta, double r = 0.5) {
    if (!(beta > 0.0) || !std::isfinite(beta)) {
        throw ParameterDomainError("quadratic_closure: beta must be positive");
    }
    if (!(r > 0.0 && r < 1.0)) {
        throw ParameterDomainError("quadratic_closure: growth exponent r must lie in (0,1)");
    }
    SurfactantClosure c;
    c.name = "quadratic";
    c.sigma = [beta](double s) { return -0.5 * beta * (s * s - 1.0); };
    c.sigma_prime = [beta](double s) { return -beta * s; };
    c.phi = [beta](double s) { return 0.5 * beta * (s - 1.0) * (s - 1.0); };
    c.phi_prime = [beta](double s) { return beta * (s - 1.0); };
    c.phi_second = [beta](double) { return beta; };
    c.inverse_w = [beta](double v) { return 1.0 + v / beta; };
    c.sigma_second = [beta](double) { return -beta; };
    c.abs_sigma_prime_inverse = [beta](double y) { return y / beta; };
    c.c_phi = beta;
    c.big_c_phi = beta;
    c.growth_r = r;
    c.constant_curvature = beta;
    return c;
}

namespace detail {

/// Inverts a strictly increasing g with g' >= slope_min > 0 by safeguarded Newton.
inline double invert_monotone(const ScalarFn& g, const ScalarFn& dg, double target, double guess,
                              double slope_min) {
    // Bracket from the slope bound: |g(x) - g(guess)| >= slope_min |x - guess|.
    const double g0 = g(guess);
    double lo = guess, hi = guess;
    const double span = std::abs(target - g0) / slope_min + 1e-300;
    if (target > g0) {
        hi = guess + span;
    } else {
        lo = guess - span;
    }
    double x = std::clamp(guess + (target - g0) / dg(guess), lo, hi);
    for (int it = 0; it < 100; ++it) {
        const double r = g(x) - target;
        if (r > 0.0) hi = x; else lo = x;
        double next = x - r / dg(x);
        if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
        if (std::abs(next - x) <= 4.0 * std::numeric_limits<double>::epsilon() * std::max(1.0, std::abs(x))) {
            return next;
        }
        x = next;
    }
    return x;
}

}  // namespace detail

/// Phi''(s) = beta + kappa s^2/(1+s^2): bounded curvature between beta and
/// beta+kappa, so A2 and A3 hold with c_Phi = beta, C_Phi = beta + kappa.
/// W has no closed form and is inverted numerically.
inline SurfactantClosure arctan_closure(double beta, double kappa, double r = 0.5) {
    if (!(beta > 0.0) || !(kappa >= 0.0) || !std::isfinite(beta) || !std::isfinite(kappa)) {
        throw ParameterDomainError("arctan_closure: need beta > 0, kappa >= 0");
    }
    if (!(r > 0.0 && r < 1.0)) {
        throw ParameterDomainError("arctan_closure: growth exponent r must lie in (0,1)");
    }
    constexpr double quarter_pi = std::numbers::pi / 4.0;
    const double ln2 = std::log(2.0);
    const double b = beta + kappa;

    SurfactantClosure c;
    c.name = "arctan";
    c.phi_second = [beta, kappa](double s) { return beta + kappa * s * s / (1.0 + s * s); };
    c.sigma_prime = [beta, kappa](double s) { return -s * (beta + kappa * s * s / (1.0 + s * s)); };
    c.sigma = [b, kappa](double s) {
        return -0.5 * b * (s * s - 1.0) + 0.5 * kappa * std::log((1.0 + s * s) / 2.0);
    };
    c.phi_prime = [b, kappa](double s) {
        return b * (s - 1.0) - kappa * (std::atan(s) - quarter_pi);
    };
    c.phi = [b, kappa, ln2](double s) {
        const double int_atan = s * std::atan(s) - 0.5 * std::log1p(s * s) - quarter_pi + 0.5 * ln2;
        return 0.5 * b * (s - 1.0) * (s - 1.0) - kappa * (int_atan - quarter_pi * (s - 1.0));
    };
    c.sigma_second = [beta](double) { return -beta; };  // only used at s = 0
    ScalarFn phi_prime = c.phi_prime;
    ScalarFn phi_second = c.phi_second;
    c.inverse_w = [phi_prime, phi_second, beta](double v) {
        return detail::invert_monotone(phi_prime, phi_second, v, 1.0 + v / beta, beta);
    };
    ScalarFn abs_sp = [beta, kappa](double s) { return s * (beta + kappa * s * s / (1.0 + s * s)); };
    ScalarFn abs_sp_d = [beta, kappa](double s) {
        const double q = 1.0 + s * s;
        return beta + kappa * (3.0 * s * s + s * s * s * s) / (q * q);
    };
    c.abs_sigma_prime_inverse = [abs_sp, abs_sp_d, beta](double y) {
        if (y <= 0.0) return 0.0;
        return detail::invert_monotone(abs_sp, abs_sp_d, y, y / beta, beta);
    };
    c.c_phi = beta;
    c.big_c_phi = b;
    c.growth_r = r;
    return c;
}

struct AssumptionCheck {
    std::string name;
    bool pass = true;
    double worst = 0.0;  ///< worst violation magnitude (0 when satisfied everywhere)
};

struct ValidationReport {
    std::vector<AssumptionCheck> checks;

    bool all_pass() const {
        return std::all_of(checks.begin(), checks.end(), [](const auto& c) { return c.pass; });
    }
    const AssumptionCheck& at(const std::string& name) const {
        for (const auto& c : checks) {
            if (c.name == name) return c;
        }
        throw UsageError("ValidationReport: no check named " + name);
    }
};

/// Checks A1-A3 and the derived properties on a uniform sample of
/// [-range_max, range_max]. Failures are reported, never thrown.
inline ValidationReport validate_closure(const SurfactantClosure& c, double range_max,
                                         std::size_t samples) {
    if (samples < 2) throw UsageError("validate_closure: need at least two samples");
    if (!(range_max > 0.0)) throw ParameterDomainError("validate_closure: range_max must be positive");

    constexpr double rel_slack = 1e-12;
    AssumptionCheck a1_root{"A1.phi_at_one"};
    AssumptionCheck a1_curv{"A1.curvature_identity"};
    AssumptionCheck a2{"A2.lower_bound"};
    AssumptionCheck a3{"A3.growth"};
    AssumptionCheck a3_exp{"A3.exponent"};
    AssumptionCheck inv{"W.inverse"};
    AssumptionCheck mono{"sigma.non_increasing"};
    AssumptionCheck lower{"phi.quadratic_lower_bound"};

    a1_root.worst = std::max(std::abs(c.phi(1.0)), std::abs(c.phi_prime(1.0)));
    a1_root.pass = a1_root.worst <= 1e-12;

    if (!(c.growth_r > 0.0 && c.growth_r < 1.0)) {
        a3_exp.pass = false;
        a3_exp.worst = c.growth_r <= 0.0 ? -c.growth_r : c.growth_r - 1.0;
    }
    if (!(c.c_phi > 0.0)) {
        a2.pass = false;
        a2.worst = std::max(a2.worst, -c.c_phi);
    }

    for (std::size_t i = 0; i < samples; ++i) {
        const double s = -range_max + 2.0 * range_max * static_cast<double>(i) / static_cast<double>(samples - 1);
        const double p2 = c.phi_second(s);

        // A1 curvature identity; s = 0 only through sigma''(0).
        double expected = std::numeric_limits<double>::quiet_NaN();
        if (s != 0.0) {
            expected = -c.sigma_prime(s) / s;
        } else if (c.sigma_second) {
            expected = -c.sigma_second(0.0);
        }
        if (!std::isnan(expected)) {
            const double rel = std::abs(p2 - expected) / std::max(std::abs(expected), 1e-300);
            a1_curv.worst = std::max(a1_curv.worst, rel);
            if (rel > 1e-10) a1_curv.pass = false;
        }

        if (p2 < c.c_phi * (1.0 - rel_slack)) {
            a2.pass = false;
            a2.worst = std::max(a2.worst, c.c_phi - p2);
        }
        const double growth = c.big_c_phi * (std::pow(std::abs(s), c.growth_r) + 1.0);
        if (p2 > growth * (1.0 + rel_slack)) {
            a3.pass = false;
            a3.worst = std::max(a3.worst, p2 - growth);
        }

        const double back = c.inverse_w(c.phi_prime(s));
        const double inv_err = std::abs(back - s) / std::max(1.0, std::abs(s));
        inv.worst = std::max(inv.worst, inv_err);
        if (inv_err > 1e-10) inv.pass = false;

        if (s >= 0.0 && c.sigma_prime(s) > 0.0) {
            mono.pass = false;
            mono.worst = std::max(mono.worst, c.sigma_prime(s));
        }

        const double bound = 0.5 * c.c_phi * (s - 1.0) * (s - 1.0);
        if (c.phi(s) < bound - rel_slack * std::max(1.0, bound)) {
            lower.pass = false;
            lower.worst = std::max(lower.worst, bound - c.phi(s));
        }
    }
    return {{a1_root, a1_curv, a2, a3, a3_exp, inv, mono, lower}};
}

}  // namespace tpfilm
