/// @file timestepper.hpp
/// @brief Embedded Dormand-Prince 5(4) integrator with FSAL, error-per-step
///        control, a spectral stability cap and sampled output.
///
/// A system is any type providing
///   int  dimension() const;
///   void rhs(double t, const Vec& y, Vec& dy) const;
/// and optionally
///   double stiffness_bound(double t, const Vec& y) const;
/// which, when present, limits every step to c_stab / stiffness_bound.

#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <concepts>
#include <cstdint>
#include <functional>
#include <limits>
#include <string>
#include <vector>

#include "tpfilm/errors.hpp"
#include "tpfilm/spectral.hpp"

namespace tpfilm {

template <class S>
concept OdeSystem = requires(const S& s, double t, const Vec& y, Vec& dy) {
    { s.dimension() } -> std::convertible_to<int>;
    s.rhs(t, y, dy);
};

template <class S>
concept HasStiffnessBound = requires(const S& s, double t, const Vec& y) {
    { s.stiffness_bound(t, y) } -> std::convertible_to<double>;
};

struct StepControl {
    double rel_tol = 1e-7;
    double abs_tol = 1e-10;
    double dt_init = 1e-10;
    double dt_max = 1.0;
    double dt_min = 1e-20;
    double safety = 0.9;
    /// Steps are capped at c_stab / (m_max k_max^4 + D_eff k_max^2).
    double c_stab = 3.0;
    bool stability_cap = true;
    /// Upper bound on accepted steps per integrate() call; 0 means unlimited.
    std::int64_t max_steps = 0;

    void validate() const {
        if (!(rel_tol > 0.0) || !(abs_tol > 0.0)) throw ParameterDomainError("StepControl: tolerances must be positive");
        if (!(dt_min > 0.0 && dt_min <= dt_init && dt_init <= dt_max)) {
            throw ParameterDomainError("StepControl: require 0 < dt_min <= dt_init <= dt_max");
        }
        if (!(safety > 0.0 && safety <= 1.0)) throw ParameterDomainError("StepControl: safety must lie in (0, 1]");
        if (!(c_stab > 0.0)) throw ParameterDomainError("StepControl: c_stab must be positive");
        if (max_steps < 0) throw ParameterDomainError("StepControl: max_steps must be >= 0");
    }
};

namespace dopri {
inline constexpr double c2 = 1.0 / 5.0, c3 = 3.0 / 10.0, c4 = 4.0 / 5.0, c5 = 8.0 / 9.0;
inline constexpr double a21 = 1.0 / 5.0;
inline constexpr double a31 = 3.0 / 40.0, a32 = 9.0 / 40.0;
inline constexpr double a41 = 44.0 / 45.0, a42 = -56.0 / 15.0, a43 = 32.0 / 9.0;
inline constexpr double a51 = 19372.0 / 6561.0, a52 = -25360.0 / 2187.0, a53 = 64448.0 / 6561.0,
                        a54 = -212.0 / 729.0;
inline constexpr double a61 = 9017.0 / 3168.0, a62 = -355.0 / 33.0, a63 = 46732.0 / 5247.0, a64 = 49.0 / 176.0,
                        a65 = -5103.0 / 18656.0;
inline constexpr double b1 = 35.0 / 384.0, b3 = 500.0 / 1113.0, b4 = 125.0 / 192.0, b5 = -2187.0 / 6784.0,
                        b6 = 11.0 / 84.0;
inline constexpr double e1 = 71.0 / 57600.0, e3 = -71.0 / 16695.0, e4 = 71.0 / 1920.0, e5 = -17253.0 / 339200.0,
                        e6 = 22.0 / 525.0, e7 = -1.0 / 40.0;
}  // namespace dopri

/// Scratch storage for one integrator; k1 holds f(t, y) on entry (FSAL).
struct Dopri5Work {
    Vec k1, k2, k3, k4, k5, k6, k7, tmp, y_new, err;
    void resize(int n) {
        for (Vec* v : {&k1, &k2, &k3, &k4, &k5, &k6, &k7, &tmp, &y_new, &err}) v->resize(n);
    }
};

/// One trial step of size h from (t, y) with w.k1 = f(t, y). Fills w.y_new,
/// w.err (embedded difference) and w.k7 = f(t + h, y_new).
template <OdeSystem System>
void dopri5_trial(const System& sys, double t, const Vec& y, double h, Dopri5Work& w, double t_new) {
    using namespace dopri;
    w.tmp = y + h * (a21 * w.k1);
    sys.rhs(t + c2 * h, w.tmp, w.k2);
    w.tmp = y + h * (a31 * w.k1 + a32 * w.k2);
    sys.rhs(t + c3 * h, w.tmp, w.k3);
    w.tmp = y + h * (a41 * w.k1 + a42 * w.k2 + a43 * w.k3);
    sys.rhs(t + c4 * h, w.tmp, w.k4);
    w.tmp = y + h * (a51 * w.k1 + a52 * w.k2 + a53 * w.k3 + a54 * w.k4);
    sys.rhs(t + c5 * h, w.tmp, w.k5);
    w.tmp = y + h * (a61 * w.k1 + a62 * w.k2 + a63 * w.k3 + a64 * w.k4 + a65 * w.k5);
    sys.rhs(t + h, w.tmp, w.k6);
    w.y_new = y + h * (b1 * w.k1 + b3 * w.k3 + b4 * w.k4 + b5 * w.k5 + b6 * w.k6);
    sys.rhs(t_new, w.y_new, w.k7);
    w.err = h * (e1 * w.k1 + e3 * w.k3 + e4 * w.k4 + e5 * w.k5 + e6 * w.k6 + e7 * w.k7);
}

/// sqrt(mean((err_i / (atol + rtol max(|y_i|, |y_new_i|)))^2)); +inf if anything is non-finite.
inline double error_norm(const Vec& err, const Vec& y, const Vec& y_new, const StepControl& ctl) {
    double acc = 0.0;
    for (Eigen::Index i = 0; i < err.size(); ++i) {
        const double scale = ctl.abs_tol + ctl.rel_tol * std::max(std::abs(y[i]), std::abs(y_new[i]));
        const double r = err[i] / scale;
        acc += r * r;
    }
    const double e = std::sqrt(acc / static_cast<double>(std::max<Eigen::Index>(err.size(), 1)));
    return std::isfinite(e) && y_new.allFinite() ? e : std::numeric_limits<double>::infinity();
}

/// Largest step allowed by the spectral stability estimate (+inf without one).
template <OdeSystem System>
double stability_limit(const System& sys, double t, const Vec& y, const StepControl& ctl) {
    if constexpr (HasStiffnessBound<System>) {
        if (ctl.stability_cap) {
            const double lam = sys.stiffness_bound(t, y);
            if (lam > 0.0 && std::isfinite(lam)) return ctl.c_stab / lam;
        }
    }
    return std::numeric_limits<double>::infinity();
}

/// Single classical step of fixed size h (no error control). Used for order checks.
template <OdeSystem System>
Vec fixed_step(const System& sys, double t, const Vec& y, double h) {
    Dopri5Work w;
    w.resize(static_cast<int>(y.size()));
    sys.rhs(t, y, w.k1);
    dopri5_trial(sys, t, y, h, w, t + h);
    return w.y_new;
}

struct StepResult {
    Vec y;
    double t = 0.0;
    double dt_used = 0.0;
    double error_estimate = 0.0;
    double dt_next = 0.0;
    int rejections = 0;
};

namespace detail {

inline double step_factor(double err, double safety) {
    if (err == 0.0) return 5.0;
    if (!std::isfinite(err)) return 0.2;
    return std::clamp(safety * std::pow(err, -0.2), 0.2, 5.0);
}

/// Attempts steps from (t, y) until one is accepted. w.k1 must hold f(t, y);
/// on return w.k1 holds f(t_new, y_new). h_try is clipped to t_stop.
template <OdeSystem System>
StepResult advance(const System& sys, double t, const Vec& y, double h_try, double t_stop, const StepControl& ctl,
                   Dopri5Work& w) {
    if (!w.k1.allFinite()) {
        throw NumericalError("non-finite time derivative at t = " + std::to_string(t));
    }
    const double cap = std::min(ctl.dt_max, stability_limit(sys, t, y, ctl));
    double h_free = std::min(h_try, cap);
    StepResult out;
    for (;;) {
        if (h_free < ctl.dt_min) {
            throw StiffnessAbort("step size fell below dt_min at t = " + std::to_string(t), t, h_free,
                                 out.error_estimate);
        }
        if (t + h_free == t) {
            throw StiffnessAbort("step size below the resolution of t = " + std::to_string(t), t, h_free,
                                 out.error_estimate);
        }
        const bool clipped = t + h_free >= t_stop;
        const double h = clipped ? t_stop - t : h_free;
        const double t_new = clipped ? t_stop : t + h;
        dopri5_trial(sys, t, y, h, w, t_new);
        double err = error_norm(w.err, y, w.y_new, ctl);
        if (!w.k7.allFinite()) err = std::numeric_limits<double>::infinity();
        out.error_estimate = err;
        if (err <= 1.0) {
            out.y = w.y_new;
            out.t = t_new;
            out.dt_used = h;
            double next = h * detail::step_factor(err, ctl.safety);
            if (out.rejections > 0) next = std::min(next, h);
            if (clipped) next = std::max(next, std::min(h_free, h_try));
            out.dt_next = std::min(next, ctl.dt_max);
            std::swap(w.k1, w.k7);
            return out;
        }
        ++out.rejections;
        h_free = h * std::min(1.0, detail::step_factor(err, ctl.safety));
    }
}

}  // namespace detail

/// One accepted adaptive step starting from dt_try.
template <OdeSystem System>
StepResult step(const System& sys, double t, const Vec& y, const StepControl& ctl, double dt_try) {
    ctl.validate();
    Dopri5Work w;
    w.resize(static_cast<int>(y.size()));
    if (!y.allFinite()) throw NumericalError("step: non-finite state");
    sys.rhs(t, y, w.k1);
    return detail::advance(sys, t, y, dt_try, std::numeric_limits<double>::infinity(), ctl, w);
}

/// Everything needed to continue an integration bit-for-bit.
struct StepperCheckpoint {
    double t_origin = 0.0;      ///< time of sample 0
    double sample_every = 0.0;
    std::int64_t sample_index = 0;  ///< index of the sample at time t
    double t = 0.0;
    Vec y;
    double dt_next = 0.0;
    std::int64_t steps = 0;
    std::int64_t rejections = 0;
};

struct Sample {
    std::int64_t index = 0;
    double t = 0.0;
    const Vec* y = nullptr;
    const StepperCheckpoint* checkpoint = nullptr;
};

struct Trajectory {
    std::vector<double> times;
    std::vector<Vec> states;
    bool failed = false;
    bool halted = false;  ///< stopped early at the requested sample index
    std::string failure;
    StepperCheckpoint last;  ///< state at the final recorded sample
    std::int64_t steps = 0;
    std::int64_t rejections = 0;
};

using SampleCallback = std::function<void(const Sample&)>;

/// Target time of sample k: t_origin + k * sample_every, capped by t_end.
/// Targets within a relative 1e-9 of a sample interval from t_end snap to t_end.
inline double sample_time(double t_origin, double sample_every, std::int64_t k, double t_end) {
    const double t = t_origin + static_cast<double>(k) * sample_every;
    if (t >= t_end - 1e-9 * sample_every) return t_end;
    return t;
}

/// Continues from a checkpoint up to t_end, emitting samples at every multiple
/// of sample_every and at t_end. The starting sample is emitted only when
/// emit_start is true. A non-negative halt_at_sample stops the run right after
/// the sample with that index has been emitted.
template <OdeSystem System>
Trajectory integrate_from(const System& sys, const StepperCheckpoint& start, double t_end, const StepControl& ctl,
                          const SampleCallback& on_sample = {}, bool emit_start = true, bool keep_states = true,
                          std::int64_t halt_at_sample = -1) {
    ctl.validate();
    if (!(t_end >= start.t)) throw UsageError("integrate: t_end must not precede the start time");
    if (!(start.sample_every > 0.0)) throw UsageError("integrate: sample_every must be positive");
    if (start.y.size() != sys.dimension()) throw ShapeError("integrate: state length does not match the system");

    Trajectory traj;
    StepperCheckpoint cp = start;
    auto record = [&]() {
        if (keep_states) {
            traj.times.push_back(cp.t);
            traj.states.push_back(cp.y);
        }
        traj.last = cp;
        if (on_sample) on_sample(Sample{cp.sample_index, cp.t, &cp.y, &cp});
    };
    if (emit_start) record();
    traj.last = cp;

    Dopri5Work w;
    w.resize(static_cast<int>(cp.y.size()));
    if (cp.t >= t_end) return traj;
    sys.rhs(cp.t, cp.y, w.k1);

    std::int64_t steps_here = 0;
    try {
        while (cp.t < t_end) {
            const double target = sample_time(cp.t_origin, cp.sample_every, cp.sample_index + 1, t_end);
            while (cp.t < target) {
                if (ctl.max_steps > 0 && steps_here >= ctl.max_steps) {
                    throw NumericalError("step budget exhausted at t = " + std::to_string(cp.t));
                }
                StepResult r = detail::advance(sys, cp.t, cp.y, cp.dt_next, target, ctl, w);
                cp.y = std::move(r.y);
                cp.t = r.t;
                cp.dt_next = r.dt_next;
                ++cp.steps;
                ++steps_here;
                cp.rejections += r.rejections;
            }
            ++cp.sample_index;
            record();
            if (halt_at_sample >= 0 && cp.sample_index >= halt_at_sample && cp.t < t_end) {
                traj.halted = true;
                break;
            }
        }
    } catch (const NumericalError& e) {
        traj.failed = true;
        traj.failure = e.what();
    }
    traj.steps = cp.steps;
    traj.rejections = cp.rejections;
    return traj;
}

/// Integrates y0 from t0 to t_end with samples at t0 + k sample_every and t_end.
template <OdeSystem System>
Trajectory integrate(const System& sys, const Vec& y0, double t0, double t_end, double sample_every,
                     const StepControl& ctl, const SampleCallback& on_sample = {}, bool keep_states = true) {
    StepperCheckpoint cp;
    cp.t_origin = t0;
    cp.sample_every = sample_every;
    cp.t = t0;
    cp.y = y0;
    cp.dt_next = ctl.dt_init;
    return integrate_from(sys, cp, t_end, ctl, on_sample, true, keep_states);
}

}  // namespace tpfilm
