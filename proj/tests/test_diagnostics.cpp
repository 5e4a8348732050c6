#include <cmath>
#include <numbers>
#include <random>

#include <gtest/gtest.h>

#include "oracles/random_states.hpp"
#include "tpfilm/diagnostics.hpp"

using namespace tpfilm;

namespace {

SpectralState axpy(const SpectralState& s, double h, const SpectralState& d) {
    SpectralState r = s;
    r.F += h * d.F;
    r.G += h * d.G;
    r.V += h * d.V;
    return r;
}

}  // namespace

TEST(Energy, RateEqualsMinusDissipation) {
    const Basis b(1.0, 10);
    const PhysicalParams p(0.8, 1.0, 1.5, 0.7, 1.0);
    for (const auto& c : {quadratic_closure(1.0), arctan_closure(1.0, 2.0)}) {
        std::mt19937_64 rng(17);
        for (int trial = 0; trial < 5; ++trial) {
            const SpectralState s = oracle::random_positive_state(b, rng, 0.5);
            const SpectralState d = time_derivative(s, b, p, c, 0.02);
            const double diss = dissipation_rate(s, b, p, c, 0.02);
            EXPECT_GT(diss, 0.0);
            EXPECT_NEAR(energy_rate(s, d, b, p, c), -diss, 1e-11 * diss) << c.name;
        }
    }
}

TEST(Energy, CentralDifferenceAlongTheFlow) {
    const Basis b(1.0, 8);
    const PhysicalParams p(1.0, 1.0, 1.0, 1.0, 1.0);
    const auto c = arctan_closure(0.8, 1.0);
    std::mt19937_64 rng(2);
    const SpectralState s = oracle::random_positive_state(b, rng, 0.4);
    const SpectralState d = time_derivative(s, b, p, c, 0.05);
    const double h = 1e-6 / d.F.cwiseAbs().maxCoeff();
    const double fd = (energy(axpy(s, h, d), b, p, c) - energy(axpy(s, -h, d), b, p, c)) / (2 * h);
    const double diss = dissipation_rate(s, b, p, c, 0.05);
    EXPECT_NEAR(fd, -diss, 1e-6 * diss);
}

TEST(Energy, FlatStateHasZeroGradientEnergy) {
    const Basis b(2.0, 4);
    const PhysicalParams p(1.0, 1.0, 1.0, 1.0, 2.0);
    const auto c = quadratic_closure(3.0);
    const SpectralState s = constant_state(b, c, 1.0, 2.0, 1.5);
    EXPECT_NEAR(energy(s, b, p, c), p.mu() * 2.0 * c.phi(1.5), 1e-14);
    EXPECT_NEAR(dissipation_rate(s, b, p, c, 0.1), 0.0, 1e-20);
}

TEST(Negativity, ZeroForPositiveFieldsAndExactForConstants) {
    const Basis b(1.0, 6);
    const auto k = MollifierKernel::polynomial();
    Vec pos = Vec::Constant(b.q(), 0.3);
    EXPECT_EQ(negativity_functional(pos, b, k, 0.1), 0.0);
    const Vec neg = Vec::Constant(b.q(), -0.05);
    EXPECT_NEAR(negativity_functional(neg, b, k, 0.1), 0.1 * k.chi1(-0.5), 1e-15);
    EXPECT_THROW(negativity_functional(neg, b, k, 0.0), ParameterDomainError);
    EXPECT_THROW(negativity_functional(Vec::Zero(2), b, k, 0.1), ShapeError);
}

TEST(Negativity, RefinedGridConverges) {
    const Basis b(1.0, 4);
    const auto k = MollifierKernel::polynomial();
    Vec c = Vec::Zero(5);
    c[0] = 0.1;
    c[2] = 0.3 * std::sqrt(0.5);  // 0.1 + 0.3 cos(2 pi x)
    const double coarse = negativity_functional_coeffs(c, b, k, 0.2, 1);
    const double fine = negativity_functional_coeffs(c, b, k, 0.2, 64);
    EXPECT_GT(coarse, 0.0);
    EXPECT_NEAR(coarse, fine, 0.05 * fine);
    EXPECT_THROW(negativity_functional_coeffs(c, b, k, 0.2, 0), ParameterDomainError);
    EXPECT_NEAR(chi_delta(k, 0.2, -1.0), 0.2 * k.chi1(-5.0), 1e-15);
}

TEST(Collector, RecordsMassesMinimaAndTotals) {
    const Basis b(1.0, 6);
    const PhysicalParams p(1.0, 1.0, 1.0, 1.0, 1.0);
    const auto c = quadratic_closure(1.0);
    std::mt19937_64 rng(3);
    const SpectralState s = oracle::random_positive_state(b, rng, 0.3);
    DiagnosticsCollector stepper(b, p, c, 0.01, MollifierKernel::polynomial(), DissipationAccumulation::stepper);
    const auto r0 = stepper.collect(s, 5.0);
    EXPECT_EQ(r0.diss_cum, 0.0);
    EXPECT_EQ(r0.energy_residual, 0.0);
    EXPECT_NEAR(r0.mass_f, s.F[0], 1e-15);
    EXPECT_NEAR(r0.mass_gamma, integrate(b, eval_fields(s, b, c).gamma), 1e-15);
    EXPECT_EQ(r0.min_f, (b.phi() * s.F).minCoeff());
    SpectralState s1 = s;
    s1.t = 0.5;
    const auto r1 = stepper.collect(s1, 5.25);
    EXPECT_DOUBLE_EQ(r1.diss_cum, 0.25);
    EXPECT_DOUBLE_EQ(r1.energy_residual, r1.energy + 0.25 - r0.energy);
    EXPECT_DOUBLE_EQ(stepper.delta(), 0.1);

    DiagnosticsCollector trap(b, p, c, 0.01, MollifierKernel::polynomial(), DissipationAccumulation::trapezoid);
    const auto t0 = trap.collect(s);
    const auto t1 = trap.collect(s1);
    EXPECT_NEAR(t1.diss_cum, 0.5 * (t0.diss_rate + t1.diss_rate) * 0.5, 1e-15);

    DiagnosticsCollector resumed(b, p, c, 0.01, MollifierKernel::polynomial(), DissipationAccumulation::stepper);
    resumed.resume(r0.energy, 0.25, 0.5, r1.diss_rate, 5.0);
    SpectralState s2 = s;
    s2.t = 1.0;
    EXPECT_DOUBLE_EQ(resumed.collect(s2, 5.5).diss_cum, 0.5);
}

TEST(Dispersion, MatrixMatchesFiniteDifferenceLinearization) {
    const Basis b(1.0, 6);
    const PhysicalParams p(0.9, 1.2, 0.8, 0.6, 1.0);
    for (const auto& c : {quadratic_closure(1.3), arctan_closure(1.0, 1.5)}) {
        const FlatState flat{0.9, 1.1, 1.4};
        const double eps = 0.05;
        const SpectralState s0 = constant_state(b, c, flat.f, flat.g, flat.gamma);
        const double curv = c.phi_second(flat.gamma);
        for (int k = 1; k <= 4; ++k) {
            const Eigen::Matrix3d a = dispersion_matrix(p, c, eps, flat, k);
            Eigen::Matrix3d fd;
            for (int j = 0; j < 3; ++j) {
                const double h = 1e-6;
                auto shifted = [&](double sign) {
                    SpectralState s = s0;
                    if (j == 0) s.F[k] += sign * h;
                    if (j == 1) s.G[k] += sign * h;
                    if (j == 2) s.V[k] += sign * h * curv;
                    const SpectralState d = time_derivative(s, b, p, c, eps);
                    return Eigen::Vector3d(d.F[k], d.G[k], d.V[k] / curv);
                };
                fd.col(j) = (shifted(1.0) - shifted(-1.0)) / (2 * h);
            }
            EXPECT_LT((fd - a).cwiseAbs().maxCoeff(), 1e-6 * a.cwiseAbs().maxCoeff()) << c.name << " k=" << k;
        }
    }
}

TEST(Dispersion, MassModeAndMuZeroClosedForm) {
    const auto c = quadratic_closure(1.0);
    const PhysicalParams p(0.0, 1.0, 1.0, 1.0, 1.0);
    EXPECT_EQ(dispersion_matrix(p, c, 0.1, FlatState{}, 0), Eigen::Matrix3d::Zero());
    const double af = 1.0 + 0.01;
    const double q = std::numbers::pi;
    const auto eig = dispersion_eigenvalues(dispersion_matrix(p, c, 0.01, FlatState{}, 1));
    const double expected = -p.R() * af * af * af * q * q * q * q / 3.0;
    double best = 1e300;
    for (int i = 0; i < 3; ++i) best = std::min(best, std::abs(eig[i].real() - expected));
    EXPECT_LT(best, 1e-10 * std::abs(expected));
}
