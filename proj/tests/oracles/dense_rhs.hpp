/// @file dense_rhs.hpp
/// @brief <H, d/dx phi_j> for the three equations by a dense midpoint rule,
///        evaluating fields pointwise from the coefficients.

#pragma once

#include <functional>

#include <Eigen/Dense>

#include "oracles/expanded_flux.hpp"
#include "oracles/series.hpp"

namespace oracle {

struct DenseRhs {
    Eigen::VectorXd dF, dG, rhs_v;
};

/// gamma_of_v maps v = Phi'(Gamma) back to Gamma; dgamma_dv is its derivative.
inline DenseRhs dense_rhs(const Eigen::VectorXd& F, const Eigen::VectorXd& G, const Eigen::VectorXd& V, double length,
                          const Constants& c, const std::function<double(double)>& sigma_prime,
                          const std::function<double(double)>& gamma_of_v,
                          const std::function<double(double)>& dgamma_dv, int nodes) {
    const auto m = F.size();
    DenseRhs out{Eigen::VectorXd::Zero(m), Eigen::VectorXd::Zero(m), Eigen::VectorXd::Zero(m)};
    const double h = length / nodes;
    for (int i = 0; i < nodes; ++i) {
        const double x = (i + 0.5) * h;
        PointFields p;
        p.f = cosine_series(F, length, x, 0);
        p.g = cosine_series(G, length, x, 0);
        const double v = cosine_series(V, length, x, 0);
        p.gamma = gamma_of_v(v);
        p.dxgamma = dgamma_dv(v) * cosine_series(V, length, x, 1);
        p.d3f = cosine_series(F, length, x, 3);
        p.d3g = cosine_series(G, length, x, 3);
        const Fluxes fl = expanded_fluxes(p, c, sigma_prime);
        for (Eigen::Index j = 1; j < m; ++j) {
            const double dphi = basis_derivative(static_cast<int>(j), length, x);
            out.dF[j] += h * fl.h_f * dphi;
            out.dG[j] += h * fl.h_g * dphi;
            out.rhs_v[j] += h * fl.h_gamma * dphi;
        }
    }
    return out;
}

}  // namespace oracle
