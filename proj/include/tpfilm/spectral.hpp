/// @file spectral.hpp
/// @brief Cosine basis on [0, L] with homogeneous Neumann data, midpoint
///        collocation grid, synthesis/analysis and odd-order derivatives.
///
/// phi_0 = sqrt(1/L), phi_k = sqrt(2/L) cos(k pi x / L). The midpoint rule with
/// Q nodes integrates cos(m pi x / L) exactly for 1 <= m < 2Q, so the discrete
/// inner product reproduces orthonormality whenever Q >= n + 1.

#pragma once

#include <cmath>
#include <cstddef>
#include <numbers>
#include <string>

#include <Eigen/Dense>

#include "tpfilm/errors.hpp"

namespace tpfilm {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

class Basis {
public:
    /// @param length   domain length L > 0
    /// @param n        highest mode index (modes 0..n), n >= 0
    /// @param oversample  rho >= 1; Q = ceil(rho (n+1))
    Basis(double length, int n, double oversample = 4.0)
        : length_(length), n_(n), oversample_(oversample) {
        if (!(length > 0.0) || !std::isfinite(length)) {
            throw ParameterDomainError("Basis: length must be positive");
        }
        if (n < 0) throw ParameterDomainError("Basis: n must be non-negative");
        if (!(oversample >= 1.0) || !std::isfinite(oversample)) {
            throw ParameterDomainError("Basis: oversample must be >= 1");
        }
        q_ = static_cast<int>(std::ceil(oversample * static_cast<double>(n + 1) - 1e-12));
        if (q_ < n + 1) q_ = n + 1;
        weight_ = length / static_cast<double>(q_);
        build();
    }

    double length() const noexcept { return length_; }
    int n() const noexcept { return n_; }
    int modes() const noexcept { return n_ + 1; }
    double oversample() const noexcept { return oversample_; }
    int q() const noexcept { return q_; }
    double weight() const noexcept { return weight_; }
    const Vec& nodes() const noexcept { return nodes_; }

    /// Q x (n+1) tables of phi_k, d/dx phi_k and d^3/dx^3 phi_k at the nodes.
    const Mat& phi() const noexcept { return phi_; }
    const Mat& dphi() const noexcept { return dphi_; }
    const Mat& d3phi() const noexcept { return d3phi_; }

    /// Wavenumber k pi / L.
    double wavenumber(int k) const noexcept { return static_cast<double>(k) * std::numbers::pi / length_; }

    /// phi_k(x) at an arbitrary point.
    double phi_at(int k, double x) const {
        if (k == 0) return std::sqrt(1.0 / length_);
        return std::sqrt(2.0 / length_) * std::cos(wavenumber(k) * x);
    }
    /// d^m/dx^m phi_k(x) for m in {0, 1, 2, 3}.
    double dphi_at(int k, int order, double x) const {
        if (k == 0) return order == 0 ? std::sqrt(1.0 / length_) : 0.0;
        const double c = std::sqrt(2.0 / length_);
        const double w = wavenumber(k);
        switch (order) {
            case 0: return c * std::cos(w * x);
            case 1: return -c * w * std::sin(w * x);
            case 2: return -c * w * w * std::cos(w * x);
            case 3: return c * w * w * w * std::sin(w * x);
            default: throw UsageError("Basis::dphi_at: order must be 0..3");
        }
    }

    void require_coeffs(const Vec& c, const char* who) const {
        if (c.size() != modes()) {
            throw ShapeError(std::string(who) + ": expected " + std::to_string(modes()) +
                             " coefficients, got " + std::to_string(c.size()));
        }
    }
    void require_grid(const Vec& u, const char* who) const {
        if (u.size() != q_) {
            throw ShapeError(std::string(who) + ": expected " + std::to_string(q_) +
                             " grid values, got " + std::to_string(u.size()));
        }
    }

private:
    void build() {
        const int m = modes();
        nodes_.resize(q_);
        phi_.resize(q_, m);
        dphi_.resize(q_, m);
        d3phi_.resize(q_, m);
        for (int i = 0; i < q_; ++i) {
            nodes_[i] = length_ * (static_cast<double>(i) + 0.5) / static_cast<double>(q_);
        }
        for (int k = 0; k < m; ++k) {
            for (int i = 0; i < q_; ++i) {
                phi_(i, k) = dphi_at(k, 0, nodes_[i]);
                dphi_(i, k) = dphi_at(k, 1, nodes_[i]);
                d3phi_(i, k) = dphi_at(k, 3, nodes_[i]);
            }
        }
    }

    double length_;
    int n_;
    double oversample_;
    int q_ = 0;
    double weight_ = 0.0;
    Vec nodes_;
    Mat phi_;
    Mat dphi_;
    Mat d3phi_;
};

/// u(x_q) = sum_k c_k phi_k(x_q).
inline Vec synthesize(const Basis& b, const Vec& coeffs) {
    b.require_coeffs(coeffs, "synthesize");
    return b.phi() * coeffs;
}

/// c_k = (L/Q) sum_q u(x_q) phi_k(x_q).
inline Vec analyze(const Basis& b, const Vec& grid) {
    b.require_grid(grid, "analyze");
    return b.weight() * (b.phi().transpose() * grid);
}

/// sum_k c_k d^m phi_k at the nodes, m in {1, 3}.
inline Vec derivative_on_grid(const Basis& b, const Vec& coeffs, int order) {
    b.require_coeffs(coeffs, "derivative_on_grid");
    if (order == 1) return b.dphi() * coeffs;
    if (order == 3) return b.d3phi() * coeffs;
    throw UsageError("derivative_on_grid: order must be 1 or 3, got " + std::to_string(order));
}

/// r_j = <H, d/dx phi_j>_Q. Component 0 is exactly zero.
inline Vec test_against_dx_basis(const Basis& b, const Vec& grid) {
    b.require_grid(grid, "test_against_dx_basis");
    Vec r = b.weight() * (b.dphi().transpose() * grid);
    r[0] = 0.0;
    return r;
}

/// (L/Q) sum_q u(x_q).
inline double integrate(const Basis& b, const Vec& grid) {
    b.require_grid(grid, "integrate");
    return b.weight() * grid.sum();
}

}  // namespace tpfilm
