/// @file initial_data.hpp
/// @brief Initial fields f0, g0, Gamma0 and their Galerkin coefficients.

#pragma once

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <string>

#include "tpfilm/closures.hpp"
#include "tpfilm/errors.hpp"
#include "tpfilm/fluxes.hpp"
#include "tpfilm/scenarios/config.hpp"
#include "tpfilm/spectral.hpp"

namespace tpfilm {

/// A field as an exact point function plus, when the field is a finite cosine
/// sum, its coefficients in the orthonormal basis (mode index -> coefficient).
class InitialField {
public:
    InitialField(const FieldSpec& spec, double length, std::uint64_t seed) : spec_(spec), length_(length) {
        switch (spec.kind) {
            case FieldKind::constant:
                terms_.emplace_back(0, spec.value);
                break;
            case FieldKind::cosine:
                terms_.emplace_back(0, spec.mean);
                for (const auto& [k, a] : spec.modes) terms_.emplace_back(k, a);
                break;
            case FieldKind::clipped:
                if (spec.mode < 1) throw ParameterDomainError("clipped initial data: mode must be >= 1");
                break;
            case FieldKind::random: {
                if (spec.max_mode < 1) throw ParameterDomainError("random initial data: max_mode must be >= 1");
                std::mt19937_64 rng(seed);
                std::uniform_real_distribution<double> u(-1.0, 1.0);
                terms_.emplace_back(0, spec.mean);
                for (int k = 1; k <= spec.max_mode; ++k) {
                    terms_.emplace_back(k, spec.amplitude * u(rng) / static_cast<double>(k));
                }
                // Shift up so that the band-limited field respects the floor on a fine grid.
                double lo = std::numeric_limits<double>::infinity();
                const int probe = 64 * spec.max_mode + 1;
                for (int i = 0; i < probe; ++i) lo = std::min(lo, (*this)(length * i / (probe - 1)));
                if (lo < spec.floor) terms_[0].second += spec.floor - lo;
                break;
            }
        }
    }

    bool band_limited() const { return spec_.kind != FieldKind::clipped; }

    double operator()(double x) const {
        if (spec_.kind == FieldKind::clipped) {
            const double w = static_cast<double>(spec_.mode) * std::numbers::pi / length_;
            return std::max(0.0, spec_.mean + spec_.amplitude * std::cos(w * x));
        }
        double s = 0.0;
        for (const auto& [k, a] : terms_) {
            s += k == 0 ? a : a * std::cos(static_cast<double>(k) * std::numbers::pi * x / length_);
        }
        return s;
    }

    /// Cosine-sum coefficients in the orthonormal basis, modes above n dropped.
    Vec exact_coefficients(const Basis& b) const {
        Vec c = Vec::Zero(b.modes());
        for (const auto& [k, a] : terms_) {
            if (k > b.n()) continue;
            c[k] += k == 0 ? a * std::sqrt(b.length()) : a * std::sqrt(b.length() / 2.0);
        }
        return c;
    }

private:
    FieldSpec spec_;
    double length_;
    std::vector<std::pair<int, double>> terms_;
};

/// Damping factors applied to coefficients of non band-limited data.
inline double projection_factor(Projection p, int k, int n) {
    switch (p) {
        case Projection::l2:
            return 1.0;
        case Projection::fejer:
            return 1.0 - static_cast<double>(k) / static_cast<double>(n + 1);
        case Projection::jackson: {
            const double m = static_cast<double>(n + 2);
            const double a = std::numbers::pi / m;
            return ((m - k) * std::cos(a * k) + std::sin(a * k) / std::tan(a)) / m;
        }
    }
    return 1.0;
}

/// <u, phi_k> by a composite midpoint rule with `points` nodes.
template <class Fn>
Vec dense_projection(const Fn& u, const Basis& b, int points) {
    Vec c = Vec::Zero(b.modes());
    const double h = b.length() / static_cast<double>(points);
    for (int i = 0; i < points; ++i) {
        const double x = (static_cast<double>(i) + 0.5) * h;
        const double ux = u(x);
        for (int k = 0; k < b.modes(); ++k) c[k] += ux * b.phi_at(k, x);
    }
    return h * c;
}

inline constexpr int kDenseProjectionPoints = 65536;

inline Vec project_field(const InitialField& field, const Basis& b, Projection p) {
    if (field.band_limited()) return field.exact_coefficients(b);
    Vec c = dense_projection(field, b, kDenseProjectionPoints);
    for (int k = 0; k < b.modes(); ++k) c[k] *= projection_factor(p, k, b.n());
    return c;
}

/// Initial Galerkin state; rejects data that are negative on the collocation grid.
inline SpectralState build_initial_state(const ScenarioConfig& cfg, const Basis& b, const SurfactantClosure& c) {
    const InitialField f0(cfg.f, cfg.length, cfg.seed);
    const InitialField g0(cfg.g, cfg.length, cfg.seed + 1);
    const InitialField gamma0(cfg.gamma, cfg.length, cfg.seed + 2);
    for (int i = 0; i < b.q(); ++i) {
        const double x = b.nodes()[i];
        const double fx = f0(x), gx = g0(x), cx = gamma0(x);
        const double tol = 1e-12;
        if (fx < -tol || gx < -tol || cx < -tol) {
            throw ParameterDomainError("initial data must be non-negative (violated at x = " + std::to_string(x) + ")");
        }
    }
    SpectralState s;
    s.t = 0.0;
    s.F = project_field(f0, b, cfg.projection);
    s.G = project_field(g0, b, cfg.projection);
    if (gamma0.band_limited() && c.constant_curvature && cfg.gamma.kind != FieldKind::random) {
        // Phi' is affine, so v = Phi'(Gamma0) is a cosine sum as well.
        Vec gc = gamma0.exact_coefficients(b);
        s.V = *c.constant_curvature * gc;
        s.V[0] = std::sqrt(b.length()) * c.phi_prime(gc[0] / std::sqrt(b.length()));
    } else {
        Vec v = dense_projection([&](double x) { return c.phi_prime(gamma0(x)); }, b, kDenseProjectionPoints);
        if (!gamma0.band_limited()) {
            for (int k = 0; k < b.modes(); ++k) v[k] *= projection_factor(cfg.projection, k, b.n());
        }
        s.V = v;
    }
    return s;
}

}  // namespace tpfilm
