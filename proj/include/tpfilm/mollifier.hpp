/// @file mollifier.hpp
/// @brief Kernel psi on [-1, 0], its convex double primitive chi_1 and the
///        scaled family chi_delta(s) = delta chi_1(s / delta).
///
/// chi_1(x) = int_x^0 int_s^inf psi(t) dt ds, so chi_1' = -Psi with
/// Psi(x) = int_x^0 psi, chi_1'' = psi, chi_1 = 0 on [0, inf) and
/// chi_1(x) = chi_1(-1) - 1 - x for x < -1.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <random>
#include <string>
#include <vector>

#include <boost/math/quadrature/gauss.hpp>

#include "tpfilm/errors.hpp"

namespace tpfilm {

enum class KernelKind { polynomial, bump };

inline KernelKind parse_kernel_kind(const std::string& s) {
    if (s == "polynomial") return KernelKind::polynomial;
    if (s == "bump") return KernelKind::bump;
    throw UsageError("unknown mollifier kernel '" + s + "' (expected polynomial or bump)");
}

class MollifierKernel {
public:
    /// Polynomial kernel psi(x) = 30 x^2 (1 + x)^2.
    static MollifierKernel polynomial() { return MollifierKernel(KernelKind::polynomial); }

    /// Smooth bump psi(x) = c exp(-1 / (1 - (2x + 1)^2)) normalized to unit mass;
    /// Psi and chi_1 are tabulated and evaluated by cubic Hermite interpolation.
    static MollifierKernel bump(int table_size = 4096) {
        MollifierKernel k(KernelKind::bump);
        k.build_bump_table(table_size);
        return k;
    }

    static MollifierKernel make(KernelKind kind) { return kind == KernelKind::bump ? bump() : polynomial(); }

    KernelKind kind() const noexcept { return kind_; }

    /// K = sup psi.
    double psi_sup() const noexcept { return psi_sup_; }

    double psi(double x) const {
        if (!(x > -1.0 && x < 0.0)) return 0.0;
        if (kind_ == KernelKind::polynomial) {
            const double u = x + 1.0;
            const double m = u * (1.0 - u);
            return 30.0 * m * m;
        }
        return bump_raw(x) / bump_mass_;
    }

    /// Psi(x) = int_x^0 psi; 1 for x <= -1, 0 for x >= 0.
    double big_psi(double x) const {
        if (x <= -1.0) return 1.0;
        if (x >= 0.0) return 0.0;
        if (kind_ == KernelKind::polynomial) {
            const double u = x + 1.0;
            const double u3 = u * u * u;
            return 1.0 - u3 * (10.0 - 15.0 * u + 6.0 * u * u);
        }
        return hermite(x, psi_tab_, [this](double t) { return -psi(t); });
    }

    double chi1(double x) const {
        if (x >= 0.0) return 0.0;
        if (x < -1.0) return chi1_at_minus_one_ - 1.0 - x;
        if (kind_ == KernelKind::polynomial) {
            const double u = x + 1.0;
            const double u4 = u * u * u * u;
            return 0.5 - u + u4 * (2.5 - 3.0 * u + u * u);
        }
        return hermite(x, chi_tab_, [this](double t) { return -big_psi(t); });
    }
    double chi1_prime(double x) const { return -big_psi(x); }
    double chi1_second(double x) const { return psi(x); }

    /// chi_delta(s) = delta chi_1(s / delta) and its first two derivatives.
    double chi(double delta, double s) const { return delta * chi1(s / delta); }
    double chi_prime(double delta, double s) const { return chi1_prime(s / delta); }
    double chi_second(double delta, double s) const { return psi(s / delta) / delta; }

private:
    explicit MollifierKernel(KernelKind kind) : kind_(kind) {
        if (kind == KernelKind::polynomial) {
            psi_sup_ = 1.875;
            chi1_at_minus_one_ = 0.5;
        }
    }

    static double bump_raw(double x) {
        const double z = 2.0 * x + 1.0;
        const double d = 1.0 - z * z;
        return d > 0.0 ? std::exp(-1.0 / d) : 0.0;
    }

    void build_bump_table(int m) {
        if (m < 16) throw ParameterDomainError("MollifierKernel: bump table too small");
        using boost::math::quadrature::gauss;
        bump_mass_ = 0.0;
        for (int i = 0; i < 64; ++i) bump_mass_ += gauss<double, 30>::integrate(bump_raw, -1.0 + i / 64.0, -1.0 + (i + 1) / 64.0);
        psi_sup_ = bump_raw(-0.5) / bump_mass_;
        // Nodes x_i = -1 + i h; integrate backwards from x = 0 panel by panel.
        h_ = 1.0 / static_cast<double>(m);
        psi_tab_.assign(m + 1, 0.0);
        chi_tab_.assign(m + 1, 0.0);
        auto p = [this](double t) { return psi(t); };
        for (int i = m - 1; i >= 0; --i) {
            const double a = -1.0 + i * h_;
            psi_tab_[i] = psi_tab_[i + 1] + gauss<double, 20>::integrate(p, a, a + h_);
        }
        psi_tab_[0] = 1.0;
        // Exact integral of the cubic Hermite interpolant of Psi, whose slope is -psi.
        for (int i = m - 1; i >= 0; --i) {
            const double a = -1.0 + i * h_;
            const double m0 = -psi(a), m1 = -psi(a + h_);
            chi_tab_[i] = chi_tab_[i + 1] + 0.5 * h_ * (psi_tab_[i] + psi_tab_[i + 1]) + h_ * h_ * (m0 - m1) / 12.0;
        }
        chi1_at_minus_one_ = chi_tab_[0];
    }

    template <class Deriv>
    double hermite(double x, const std::vector<double>& tab, Deriv deriv) const {
        const int m = static_cast<int>(tab.size()) - 1;
        int i = static_cast<int>(std::floor((x + 1.0) / h_));
        i = std::clamp(i, 0, m - 1);
        const double x0 = -1.0 + i * h_;
        const double t = (x - x0) / h_;
        const double y0 = tab[i], y1 = tab[i + 1];
        const double d0 = deriv(x0) * h_, d1 = deriv(x0 + h_) * h_;
        const double t2 = t * t, t3 = t2 * t;
        return (2 * t3 - 3 * t2 + 1) * y0 + (t3 - 2 * t2 + t) * d0 + (-2 * t3 + 3 * t2) * y1 + (t3 - t2) * d1;
    }

    KernelKind kind_;
    double psi_sup_ = 0.0;
    double chi1_at_minus_one_ = 0.0;
    double bump_mass_ = 1.0;
    double h_ = 0.0;
    std::vector<double> psi_tab_;
    std::vector<double> chi_tab_;
};

struct LemmaProperty {
    std::string name;
    bool pass = true;
    double worst = 0.0;  ///< largest excess over the bound (<= 0 when satisfied)
    std::int64_t violations = 0;
};

struct MollifierReport {
    double delta = 0.0;
    std::int64_t samples = 0;
    std::vector<LemmaProperty> properties;
    bool all_pass() const {
        return std::all_of(properties.begin(), properties.end(), [](const auto& p) { return p.pass; });
    }
};

/// Checks on random points of [-4 delta, 2 delta]:
///   (i)   |chi_delta(s) - max(-s, 0)| <= delta
///   (ii)  |chi_delta'| <= 1 and |chi_delta''| <= K / delta
///   (iii) |s chi_delta''(s)| <= K for s in [-delta, delta]
///   (iv)  chi_delta'' = 0 outside [-delta, 0]
/// Each bound is allowed an absolute slack of `slack` times its size.
inline MollifierReport mollifier_lemma_check(const MollifierKernel& k, double delta, std::int64_t samples,
                                             std::uint64_t seed = 12345, double slack = 1e-12) {
    if (!(delta > 0.0)) throw ParameterDomainError("mollifier_lemma_check: delta must be positive");
    if (samples < 1) throw UsageError("mollifier_lemma_check: need at least one sample");
    MollifierReport rep;
    rep.delta = delta;
    rep.samples = samples;
    LemmaProperty p1{"i.sup_distance"}, p2a{"ii.first_derivative"}, p2b{"ii.second_derivative"},
        p3{"iii.weighted_second"}, p4{"iv.support"};
    const double K = k.psi_sup();
    auto note = [&](LemmaProperty& p, double value, double bound) {
        const double excess = value - bound;
        p.worst = std::max(p.worst, excess);
        if (excess > slack * std::max(bound, 1.0)) {
            p.pass = false;
            ++p.violations;
        }
    };
    for (auto* p : {&p1, &p2a, &p2b, &p3, &p4}) p->worst = -std::numeric_limits<double>::infinity();

    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> dist(-4.0 * delta, 2.0 * delta);
    for (std::int64_t i = 0; i < samples; ++i) {
        const double s = dist(rng);
        const double c0 = k.chi(delta, s);
        const double c1 = k.chi_prime(delta, s);
        const double c2 = k.chi_second(delta, s);
        note(p1, std::abs(c0 - std::max(-s, 0.0)), delta);
        note(p2a, std::abs(c1), 1.0);
        note(p2b, std::abs(c2), K / delta);
        if (s >= -delta && s <= delta) note(p3, std::abs(s * c2), K);
        if (s < -delta || s > 0.0) note(p4, std::abs(c2), 0.0);
    }
    for (auto* p : {&p1, &p2a, &p2b, &p3, &p4}) {
        if (!std::isfinite(p->worst)) p->worst = 0.0;
    }
    rep.properties = {p1, p2a, p2b, p3, p4};
    return rep;
}

}  // namespace tpfilm
