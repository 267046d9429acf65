#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <complex>
#include <stdexcept>
#include <string>

// Embedded Dormand-Prince 5(4) integrator with PI step-size control.
// State is any dynamically sized Eigen vector (real or complex scalar).

namespace sapa {

struct OdeOptions {
    double rtol = 1e-9;
    double atol = 1e-12;
    double h_init = 0.0;   // 0 -> choose automatically
    long max_steps = 50'000'000;
};

namespace detail {

// Dormand-Prince coefficients (FSAL: the 7th stage equals the next k1).
inline constexpr double dp_c[7] = {0.0,    1.0 / 5, 3.0 / 10, 4.0 / 5,
                                   8.0 / 9, 1.0,     1.0};
inline constexpr double dp_a[7][6] = {
    {},
    {1.0 / 5},
    {3.0 / 40, 9.0 / 40},
    {44.0 / 45, -56.0 / 15, 32.0 / 9},
    {19372.0 / 6561, -25360.0 / 2187, 64448.0 / 6561, -212.0 / 729},
    {9017.0 / 3168, -355.0 / 33, 46732.0 / 5247, 49.0 / 176, -5103.0 / 18656},
    {35.0 / 384, 0.0, 500.0 / 1113, 125.0 / 192, -2187.0 / 6784, 11.0 / 84},
};
// 5th-order solution weights equal the last a-row; e = b5 - b4.
inline constexpr double dp_e[7] = {
    71.0 / 57600,  0.0,          -71.0 / 16695, 71.0 / 1920,
    -17253.0 / 339200, 22.0 / 525, -1.0 / 40};

}  // namespace detail

/// Advances y in place from t0 to t1. Rhs signature:
///   rhs(double t, const State& y, State& dydt).
/// Returns the last accepted step size, usable as h_init for a
/// continuation segment.
template <typename Rhs, typename State>
double integrate_adaptive(Rhs&& rhs, State& y, double t0, double t1,
                          const OdeOptions& opt = {})
{
    using std::abs;
    if (!(t1 > t0)) {
        throw std::invalid_argument("integrate_adaptive: t1 must exceed t0");
    }
    const Eigen::Index n = y.size();
    State k[7];
    for (auto& stage : k) {
        stage.resize(n);
    }
    State y_try(n), y_err(n);

    auto error_norm = [&](const State& y0, const State& y1v,
                          const State& err) {
        double acc = 0;
        for (Eigen::Index i = 0; i < n; ++i) {
            const double scale =
                opt.atol +
                opt.rtol * std::max(abs(y0[i]), abs(y1v[i]));
            const double q = abs(err[i]) / scale;
            acc += q * q;
        }
        return std::sqrt(acc / static_cast<double>(n));
    };

    double t = t0;
    rhs(t, y, k[0]);

    double h = opt.h_init;
    if (h <= 0) {
        // Conservative automatic start: based on the first derivative scale.
        double ynorm = 0, fnorm = 0;
        for (Eigen::Index i = 0; i < n; ++i) {
            ynorm = std::max(ynorm, static_cast<double>(abs(y[i])));
            fnorm = std::max(fnorm, static_cast<double>(abs(k[0][i])));
        }
        h = (fnorm > 0) ? 0.01 * (ynorm + opt.atol) / fnorm : (t1 - t0) / 100;
        h = std::min(h, (t1 - t0) / 10);
        if (!(h > 0)) {
            h = (t1 - t0) / 100;
        }
    }

    double err_prev = 1.0;
    bool rejected_last = false;
    for (long step = 0; step < opt.max_steps; ++step) {
        if (t >= t1) {
            return h;
        }
        bool clipped = false;
        const double h_natural = h;
        if (t + h >= t1) {
            h = t1 - t;
            clipped = true;
        }

        for (int s = 1; s < 7; ++s) {
            y_try = y;
            for (int j = 0; j < s; ++j) {
                if (detail::dp_a[s][j] != 0.0) {
                    y_try += (h * detail::dp_a[s][j]) * k[j];
                }
            }
            rhs(t + detail::dp_c[s] * h, y_try, k[s]);
        }
        // Stage 6 evaluation above already produced the 5th-order solution
        // in y_try (a-row 6 equals the b weights).
        y_err.setZero();
        for (int s = 0; s < 7; ++s) {
            if (detail::dp_e[s] != 0.0) {
                y_err += (h * detail::dp_e[s]) * k[s];
            }
        }

        const double err = error_norm(y, y_try, y_err);
        if (!std::isfinite(err)) {
            throw std::runtime_error(
                "integrate_adaptive: non-finite state at t = " +
                std::to_string(t));
        }
        if (err <= 1.0) {
            t = clipped ? t1 : t + h;
            y.swap(y_try);
            k[0].swap(k[6]);  // FSAL
            if (clipped) {
                // A step shortened to hit t1 carries no step-size signal.
                h = h_natural;
            } else {
                const double fac =
                    0.9 * std::pow(std::max(err, 1e-10), -0.7 / 5.0) *
                    std::pow(err_prev, 0.4 / 5.0);
                double growth = std::clamp(fac, 0.2, 5.0);
                if (rejected_last) {
                    growth = std::min(growth, 1.0);
                }
                h *= growth;
                err_prev = std::max(err, 1e-10);
            }
            rejected_last = false;
        } else {
            h *= std::max(0.2, 0.9 * std::pow(err, -0.2));
            rejected_last = true;
            if (!(h > 0) || t + h == t) {
                throw std::runtime_error(
                    "integrate_adaptive: step size underflow at t = " +
                    std::to_string(t));
            }
        }
    }
    throw std::runtime_error("integrate_adaptive: max step count exceeded");
}

}  // namespace sapa
