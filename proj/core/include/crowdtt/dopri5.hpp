#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

namespace crowdtt {

struct Dopri5Options {
    double atol = 1e-4;
    double rtol = 1e-4;
    double initial_step = 0.05;
    double max_step = 0.2;
    double min_step = 1e-10;
    double safety = 0.9;
    double min_factor = 0.2;
    double max_factor = 5.0;
};

struct Dopri5Stats {
    std::size_t accepted = 0;
    std::size_t rejected = 0;
    std::size_t rhs_evaluations = 0;
};

// Embedded Dormand-Prince 5(4) pair with local extrapolation (the 5th-order
// solution is propagated) and Hairer's RMS error norm.
//
// The right-hand side has the signature
//     void rhs(double t, std::span<const double> y, std::span<double> dydt);
//
// `step` carries the suggested step size between calls so a caller
// integrating over a sequence of output intervals keeps its adaptivity.
// `after_step(t, y)` runs after every accepted step and may project the
// state (e.g. clamp velocities); the derivative is re-evaluated afterwards.
// Returns false if the step size underflows min_step.
template <typename Rhs, typename AfterStep>
bool dopri5_advance(Rhs&& rhs, double t0, double t1, std::vector<double>& y, double& step,
                    const Dopri5Options& opt, AfterStep&& after_step, Dopri5Stats* stats = nullptr) {
    // Butcher tableau.
    constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
    constexpr double a21 = 1.0 / 5;
    constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
    constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
    constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561, a54 = -212.0 / 729;
    constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247, a64 = 49.0 / 176,
                     a65 = -5103.0 / 18656;
    constexpr double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192, b5 = -2187.0 / 6784, b6 = 11.0 / 84;
    // b - b* (error weights).
    constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920, e5 = -17253.0 / 339200,
                     e6 = 22.0 / 525, e7 = -1.0 / 40;

    const std::size_t n = y.size();
    if (n == 0 || !(t1 > t0)) return true;

    std::vector<double> k1(n), k2(n), k3(n), k4(n), k5(n), k6(n), k7(n), tmp(n), ynew(n);
    auto eval = [&](double t, const std::vector<double>& state, std::vector<double>& out) {
        rhs(t, std::span<const double>(state), std::span<double>(out));
        if (stats) ++stats->rhs_evaluations;
    };

    double t = t0;
    double h = std::clamp(step > 0 ? step : opt.initial_step, opt.min_step, opt.max_step);
    eval(t, y, k1);

    while (t < t1) {
        bool last = false;
        const double proposal = h;
        if (t + h >= t1 || t + h * 1.0000001 >= t1) {
            h = t1 - t;
            last = true;
        }

        for (std::size_t i = 0; i < n; ++i) tmp[i] = y[i] + h * a21 * k1[i];
        eval(t + c2 * h, tmp, k2);
        for (std::size_t i = 0; i < n; ++i) tmp[i] = y[i] + h * (a31 * k1[i] + a32 * k2[i]);
        eval(t + c3 * h, tmp, k3);
        for (std::size_t i = 0; i < n; ++i) tmp[i] = y[i] + h * (a41 * k1[i] + a42 * k2[i] + a43 * k3[i]);
        eval(t + c4 * h, tmp, k4);
        for (std::size_t i = 0; i < n; ++i)
            tmp[i] = y[i] + h * (a51 * k1[i] + a52 * k2[i] + a53 * k3[i] + a54 * k4[i]);
        eval(t + c5 * h, tmp, k5);
        for (std::size_t i = 0; i < n; ++i)
            tmp[i] = y[i] + h * (a61 * k1[i] + a62 * k2[i] + a63 * k3[i] + a64 * k4[i] + a65 * k5[i]);
        eval(t + h, tmp, k6);
        for (std::size_t i = 0; i < n; ++i)
            ynew[i] = y[i] + h * (b1 * k1[i] + b3 * k3[i] + b4 * k4[i] + b5 * k5[i] + b6 * k6[i]);
        eval(t + h, ynew, k7);

        double err = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const double e = h * (e1 * k1[i] + e3 * k3[i] + e4 * k4[i] + e5 * k5[i] + e6 * k6[i] + e7 * k7[i]);
            const double sc = opt.atol + opt.rtol * std::max(std::abs(y[i]), std::abs(ynew[i]));
            err += (e / sc) * (e / sc);
        }
        err = std::sqrt(err / static_cast<double>(n));

        if (err <= 1.0) {
            t = last ? t1 : t + h;
            y.swap(ynew);
            if (stats) ++stats->accepted;
            if (after_step(t, y))
                eval(t, y, k1);
            else
                k1.swap(k7);
            const double factor =
                err == 0.0 ? opt.max_factor
                           : std::clamp(opt.safety * std::pow(err, -0.2), opt.min_factor, opt.max_factor);
            h = std::min(h * factor, opt.max_step);
            // A step shortened to land on t1 says little about the scale;
            // keep the larger of the two proposals.
            step = last ? std::min(std::max(proposal, h), opt.max_step) : h;
        } else {
            if (stats) ++stats->rejected;
            h *= std::clamp(opt.safety * std::pow(err, -0.2), opt.min_factor, 1.0);
            if (h < opt.min_step) {
                step = h;
                return false;
            }
        }
    }
    return true;
}

template <typename Rhs>
bool dopri5_advance(Rhs&& rhs, double t0, double t1, std::vector<double>& y, double& step,
                    const Dopri5Options& opt = {}, Dopri5Stats* stats = nullptr) {
    return dopri5_advance(std::forward<Rhs>(rhs), t0, t1, y, step, opt,
                          [](double, std::vector<double>&) { return false; }, stats);
}

}  // namespace crowdtt
