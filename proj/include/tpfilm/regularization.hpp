/// @file regularization.hpp
/// @brief The eps-regularization: mobility floor a_eps, the tent truncation
///        applied to sigma', the identity truncation tau_eps and its threshold.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "tpfilm/closures.hpp"
#include "tpfilm/errors.hpp"

namespace tpfilm {

/// Regularization parameter eps in (0, 1].
class RegularizationParams {
public:
    explicit RegularizationParams(double eps) : eps_(eps) {
        if (!(eps > 0.0 && eps <= 1.0)) {
            throw ParameterDomainError("regularization: eps must lie in (0, 1]");
        }
    }
    double eps() const noexcept { return eps_; }

private:
    double eps_;
};

namespace detail {
inline void require_eps(double eps) {
    if (!(eps > 0.0 && eps <= 1.0)) {
        throw ParameterDomainError("regularization: eps must lie in (0, 1]");
    }
}
}  // namespace detail

/// a_eps(s) = eps + max{0, s}; never below eps.
inline double a_eps(double eps, double s) {
    detail::require_eps(eps);
    return eps + std::max(0.0, s);
}

/// Unchecked variant for inner loops where eps was validated upstream.
inline double a_eps_unchecked(double eps, double s) noexcept { return eps + std::max(0.0, s); }

/// Tent: s on (0,1), 2-s on [1,2], 0 beyond 2, extended to s < 0 as an odd function.
inline double tent(double s) noexcept {
    const double a = std::abs(s);
    double t = 0.0;
    if (a < 1.0) {
        t = a;
    } else if (a <= 2.0) {
        t = 2.0 - a;
    }
    return s < 0.0 ? -t : t;
}

/// T_eps(y) = eps^{-1} T(eps y), written in terms of 1/eps so that the identity
/// branch returns y bit-exactly and the descending branch never exceeds |y|.
inline double tent_eps(double eps, double y) noexcept {
    const double inv = 1.0 / eps;
    const double a = std::abs(y);
    double t = 0.0;
    if (a < inv) {
        return y;
    } else if (a <= 2.0 * inv) {
        t = 2.0 * inv - a;  // exact by Sterbenz since a in [inv, 2 inv]
    }
    return y < 0.0 ? -t : t;
}

/// sigma_eps'(s) = T_eps(sigma'(s)).
inline double sigma_eps_prime(double eps, double s, const SurfactantClosure& closure) {
    detail::require_eps(eps);
    return tent_eps(eps, closure.sigma_prime(s));
}

/// Ratio sigma_eps'/sigma' below which sigma' counts as zero (limit value 1).
inline constexpr double kSigmaPrimeZero = 1e-30;

/// tau_eps from an already evaluated sigma'(s).
inline double tau_eps_from(double eps, double s, double sigma_prime) noexcept {
    if (std::abs(sigma_prime) <= kSigmaPrimeZero) return s;
    return s * (tent_eps(eps, sigma_prime) / sigma_prime);
}

/// tau_eps(s) = s sigma_eps'(s) / sigma'(s): identity near the origin, |tau_eps(s)| <= |s|,
/// zero once |sigma'(s)| >= 2/eps.
inline double tau_eps(double eps, double s, const SurfactantClosure& closure) {
    detail::require_eps(eps);
    return tau_eps_from(eps, s, closure.sigma_prime(s));
}

struct ThresholdResult {
    double generic = 0.0;          ///< bound from the growth assumption alone
    std::optional<double> exact;   ///< sup{s >= 0 : eps |sigma'(s)| <= 1}, when computable
    bool degenerate = false;       ///< eps C_Phi >= 1; the generic bound collapses to 0

    /// Best available threshold: the exact one when known.
    double best() const { return exact.value_or(generic); }
};

/// s_eps = [ (1/(eps C_Phi))^{r/(r+1)} - 1 ]^{1/r}, plus the exact identity
/// threshold when the closure can invert |sigma'|.
inline ThresholdResult s_threshold(double eps, const SurfactantClosure& closure) {
    detail::require_eps(eps);
    ThresholdResult out;
    const double r = closure.growth_r;
    const double base = 1.0 / (eps * closure.big_c_phi);
    const double bracket = std::pow(base, r / (r + 1.0)) - 1.0;
    if (eps * closure.big_c_phi >= 1.0 || !(bracket > 0.0)) {
        out.degenerate = true;
        out.generic = 0.0;
    } else {
        out.generic = std::pow(bracket, 1.0 / r);
    }
    if (closure.abs_sigma_prime_inverse) {
        out.exact = closure.abs_sigma_prime_inverse(1.0 / eps);
    }
    return out;
}

/// sigma_eps(s) = int_1^s T_eps(sigma'(t)) dt, by adaptive Gauss-Kronrod on the
/// pieces between the kinks where |sigma'| crosses 1/eps or 2/eps.
/// Diagnostics only: the dynamics need sigma_eps' alone.
inline double sigma_eps(double eps, double s, const SurfactantClosure& closure) {
    detail::require_eps(eps);
    if (s == 1.0) return 0.0;
    auto integrand = [&](double t) { return tent_eps(eps, closure.sigma_prime(t)); };
    std::vector<double> cuts{1.0, s};
    constexpr int scan = 256;
    for (double level : {1.0 / eps, 2.0 / eps}) {
        auto gap = [&](double t) { return std::abs(closure.sigma_prime(t)) - level; };
        for (int i = 0; i < scan; ++i) {
            double a = 1.0 + (s - 1.0) * i / scan;
            double b = 1.0 + (s - 1.0) * (i + 1) / scan;
            double ga = gap(a);
            if ((ga < 0.0) == (gap(b) < 0.0)) continue;
            for (int it = 0; it < 200 && a != b; ++it) {
                const double m = 0.5 * (a + b);
                if (m == a || m == b) break;
                const double gm = gap(m);
                if ((gm < 0.0) == (ga < 0.0)) {
                    a = m;
                    ga = gm;
                } else {
                    b = m;
                }
            }
            cuts.push_back(0.5 * (a + b));
        }
    }
    std::sort(cuts.begin(), cuts.end());
    using boost::math::quadrature::gauss_kronrod;
    double total = 0.0;
    for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
        if (cuts[i + 1] > cuts[i]) total += gauss_kronrod<double, 31>::integrate(integrand, cuts[i], cuts[i + 1], 15, 1e-14);
    }
    return s > 1.0 ? total : -total;
}

struct RegularizationProperty {
    std::string name;
    bool pass = true;
    std::int64_t violations = 0;
    std::int64_t tested = 0;
    double worst = 0.0;  ///< largest excess over the bound (0 when never exceeded)
};

struct RegularizationReport {
    std::int64_t samples = 0;
    std::vector<RegularizationProperty> properties;
    bool all_pass() const {
        return std::all_of(properties.begin(), properties.end(), [](const auto& p) { return p.pass; });
    }
};

/// Random (eps, s) pairs with log-uniform eps in [eps_min, 1]. Half of the s
/// values are uniform on [-3 s*, 3 s*] with s* = max(1, s_eps), the rest have
/// log-uniform magnitude in [1e-6, 1e6] and random sign. Checked exactly:
///   "sigma_prime.bound"  |sigma_eps'(s)| <= min(|sigma'(s)|, 1/eps)
///   "tau.identity"       tau_eps(s) = s for 0 <= s <= s_eps
///   "tau.bound"          |tau_eps(s)| <= |s|
inline RegularizationReport regularization_property_check(const SurfactantClosure& closure, std::int64_t samples,
                                                          std::uint64_t seed = 2024, double eps_min = 1e-4) {
    if (samples < 1) throw UsageError("regularization_property_check: need at least one sample");
    detail::require_eps(eps_min);
    RegularizationProperty bound{"sigma_prime.bound"}, ident{"tau.identity"}, tau_bound{"tau.bound"};
    auto note = [](RegularizationProperty& p, double excess) {
        ++p.tested;
        if (excess > 0.0) {
            p.pass = false;
            ++p.violations;
            p.worst = std::max(p.worst, excess);
        }
    };
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    const double log_eps_min = std::log(eps_min);
    for (std::int64_t i = 0; i < samples; ++i) {
        const double eps = std::min(1.0, std::exp(log_eps_min * unit(rng)));
        const double s_eps = s_threshold(eps, closure).best();
        double s = 0.0;
        if (i % 2 == 0) {
            const double span = 3.0 * std::max(1.0, s_eps);
            s = span * (2.0 * unit(rng) - 1.0);
        } else {
            const double mag = std::exp(std::log(1e-6) + unit(rng) * (std::log(1e6) - std::log(1e-6)));
            s = unit(rng) < 0.5 ? -mag : mag;
        }
        const double sp = closure.sigma_prime(s);
        const double sep = sigma_eps_prime(eps, s, closure);
        note(bound, std::abs(sep) - std::min(std::abs(sp), 1.0 / eps));
        const double tau = tau_eps(eps, s, closure);
        if (s >= 0.0 && s <= s_eps) note(ident, tau == s ? 0.0 : std::max(std::abs(tau - s), 1e-300));
        note(tau_bound, std::abs(tau) - std::abs(s));
    }
    RegularizationReport rep;
    rep.samples = samples;
    rep.properties = {bound, ident, tau_bound};
    return rep;
}

}  // namespace tpfilm
