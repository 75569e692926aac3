#pragma once

// Dormand-Prince 5(4) with Hairer's 4th-order continuous extension, for
// planar autonomous fields. Header-only so the field functor inlines.

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "wolbachia/error.hpp"

namespace wolbachia::detail {

struct Vec2 {
    double x = 0.0;
    double y = 0.0;
};

inline Vec2 operator+(Vec2 a, Vec2 b) { return {a.x + b.x, a.y + b.y}; }
inline Vec2 operator-(Vec2 a, Vec2 b) { return {a.x - b.x, a.y - b.y}; }
inline Vec2 operator*(double s, Vec2 a) { return {s * a.x, s * a.y}; }

/// One accepted step plus the coefficients of its interpolant.
struct DenseStep {
    double t0 = 0.0;
    double h = 0.0;
    Vec2 r1, r2, r3, r4, r5;

    double t1() const { return t0 + h; }

    Vec2 eval(double t) const {
        const double th = (t - t0) / h;
        const double th1 = 1.0 - th;
        return r1 + th * (r2 + th1 * (r3 + th * (r4 + th1 * r5)));
    }
};

struct StepperSettings {
    double rel_tol = 1e-9;
    double abs_tol = 1e-12;
    double max_step = std::numeric_limits<double>::infinity();
    long max_steps = 20'000'000;
    /// Snap components in (-abs_tol, 0) to 0 after each step; report leaving
    /// the quadrant when a component goes below -abs_tol.
    bool clamp_to_quadrant = true;
};

enum class StepLoopEnd { reached_end, stopped, left_domain };

struct StepLoopResult {
    StepLoopEnd end = StepLoopEnd::reached_end;
    double t = 0.0;
    Vec2 y;
};

namespace dp {
// Butcher tableau.
inline constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
inline constexpr double a21 = 1.0 / 5;
inline constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
inline constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
inline constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561,
                        a54 = -212.0 / 729;
inline constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247,
                        a64 = 49.0 / 176, a65 = -5103.0 / 18656;
inline constexpr double a71 = 35.0 / 384, a73 = 500.0 / 1113, a74 = 125.0 / 192,
                        a75 = -2187.0 / 6784, a76 = 11.0 / 84;
// Error weights: 5th-order minus embedded 4th-order.
inline constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920,
                        e5 = -17253.0 / 339200, e6 = 22.0 / 525, e7 = -1.0 / 40;
// Continuous extension.
inline constexpr double d1 = -12715105075.0 / 11282082432.0, d3 = 87487479700.0 / 32700410799.0,
                        d4 = -10690763975.0 / 1880347072.0, d5 = 701980252875.0 / 199316789632.0,
                        d6 = -1453857185.0 / 822651844.0, d7 = 69997945.0 / 29380423.0;
}  // namespace dp

inline double error_norm(Vec2 err, Vec2 y0, Vec2 y1, const StepperSettings& s) {
    const double sx = s.abs_tol + s.rel_tol * std::max(std::abs(y0.x), std::abs(y1.x));
    const double sy = s.abs_tol + s.rel_tol * std::max(std::abs(y0.y), std::abs(y1.y));
    const double ex = err.x / sx;
    const double ey = err.y / sy;
    return std::sqrt(0.5 * (ex * ex + ey * ey));
}

template <class Field>
double initial_step(Field& f, Vec2 y0, Vec2 f0, double span, const StepperSettings& s) {
    auto scaled = [&](Vec2 v) {
        const double sx = s.abs_tol + s.rel_tol * std::abs(y0.x);
        const double sy = s.abs_tol + s.rel_tol * std::abs(y0.y);
        return std::sqrt(0.5 * ((v.x / sx) * (v.x / sx) + (v.y / sy) * (v.y / sy)));
    };
    const double d0 = scaled(y0);
    const double d1 = scaled(f0);
    double h0 = (d0 < 1e-5 || d1 < 1e-5) ? 1e-6 : 0.01 * d0 / d1;
    h0 = std::min(h0, span);
    const Vec2 y1 = y0 + h0 * f0;
    const Vec2 f1 = f(y1);
    const double d2 = scaled(f1 - f0) / h0;
    const double dm = std::max(d1, d2);
    const double h1 = dm <= 1e-15 ? std::max(1e-6, h0 * 1e-3) : std::pow(0.01 / dm, 1.0 / 5.0);
    return std::min({100.0 * h0, h1, span, s.max_step});
}

inline double snap(double v, double abs_tol) { return (v < 0.0 && v > -abs_tol) ? 0.0 : v; }

/// Integrates dy/dt = f(y) from (t0, y0) towards t_end (> t0). `on_step`
/// receives each accepted step, its end time and end state, and returns true
/// to stop.
template <class Field, class OnStep>
StepLoopResult integrate_dopri5(Field&& f, double t0, Vec2 y0, double t_end, const StepperSettings& s,
                                OnStep&& on_step) {
    using namespace dp;
    StepLoopResult res;
    res.t = t0;
    res.y = y0;
    if (!(t_end > t0)) return res;

    Vec2 k1 = f(y0);
    double h = initial_step(f, y0, k1, t_end - t0, s);
    double t = t0;
    Vec2 y = y0;
    double fac_old = 1e-4;
    bool last_rejected = false;

    for (long step = 0;; ++step) {
        if (step >= s.max_steps) {
            std::ostringstream os;
            os << "integrator exceeded " << s.max_steps << " steps at t=" << t << ", state=(" << y.x << ", "
               << y.y << ")";
            throw NumericalError(os.str());
        }
        bool final_step = false;
        if (t + h >= t_end) {
            h = t_end - t;
            final_step = true;
        }
        if (h <= 16.0 * std::numeric_limits<double>::epsilon() * std::max(1.0, std::abs(t))) {
            std::ostringstream os;
            os.precision(17);
            os << "step size underflow at t=" << t << "; last valid state=(" << y.x << ", " << y.y << ")";
            throw NumericalError(os.str());
        }

        const Vec2 k2 = f(y + h * (a21 * k1));
        const Vec2 k3 = f(y + h * (a31 * k1 + a32 * k2));
        const Vec2 k4 = f(y + h * (a41 * k1 + a42 * k2 + a43 * k3));
        const Vec2 k5 = f(y + h * (a51 * k1 + a52 * k2 + a53 * k3 + a54 * k4));
        const Vec2 k6 = f(y + h * (a61 * k1 + a62 * k2 + a63 * k3 + a64 * k4 + a65 * k5));
        const Vec2 y_new = y + h * (a71 * k1 + a73 * k3 + a74 * k4 + a75 * k5 + a76 * k6);
        const Vec2 k7 = f(y_new);
        const Vec2 err = h * (e1 * k1 + e3 * k3 + e4 * k4 + e5 * k5 + e6 * k6 + e7 * k7);
        const double en = error_norm(err, y, y_new, s);

        if (!std::isfinite(en)) {
            h *= 0.1;
            last_rejected = true;
            continue;
        }

        // PI step-size control (Hairer's DOPRI5 constants).
        constexpr double beta = 0.04;
        constexpr double expo = 0.2 - beta * 0.75;
        double fac11 = std::pow(std::max(en, 1e-300), expo);
        double fac = fac11 / std::pow(fac_old, beta) / 0.9;
        fac = std::clamp(fac, 1.0 / 10.0, 1.0 / 0.2);
        double h_new = h / fac;

        if (en > 1.0) {
            h = h / std::min(1.0 / 0.2, fac11 / 0.9);
            last_rejected = true;
            continue;
        }

        fac_old = std::max(en, 1e-4);
        DenseStep ds;
        ds.t0 = t;
        ds.h = h;
        ds.r1 = y;
        ds.r2 = y_new - y;
        ds.r3 = h * k1 - ds.r2;
        ds.r4 = ds.r2 - h * k7 - ds.r3;
        ds.r5 = h * (d1 * k1 + d3 * k3 + d4 * k4 + d5 * k5 + d6 * k6 + d7 * k7);

        Vec2 y_acc = y_new;
        Vec2 k_next = k7;
        if (s.clamp_to_quadrant) {
            if (y_acc.x < -s.abs_tol || y_acc.y < -s.abs_tol) {
                res.end = StepLoopEnd::left_domain;
                res.t = t + h;
                res.y = y_acc;
                on_step(ds, t + h, y_acc);
                return res;
            }
            const Vec2 snapped{snap(y_acc.x, s.abs_tol), snap(y_acc.y, s.abs_tol)};
            if (snapped.x != y_acc.x || snapped.y != y_acc.y) {
                y_acc = snapped;
                k_next = f(y_acc);
            }
        }

        t = final_step ? t_end : t + h;
        y = y_acc;
        k1 = k_next;

        if (on_step(ds, t, y)) {
            res.end = StepLoopEnd::stopped;
            res.t = t;
            res.y = y;
            return res;
        }
        if (final_step) {
            res.end = StepLoopEnd::reached_end;
            res.t = t;
            res.y = y;
            return res;
        }
        if (last_rejected) h_new = std::min(h_new, h);
        last_rejected = false;
        h = std::min(h_new, s.max_step);
    }
}

}  // namespace wolbachia::detail
