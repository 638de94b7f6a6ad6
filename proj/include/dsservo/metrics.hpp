#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <stdexcept>

#include "dsservo/errors.hpp"

namespace dsservo::metrics {

constexpr double kFitnessFloor = -1000.0;

/// Normalized root-mean-square fit in percent:
/// 100 (1 - ||d - d_hat|| / ||d - mean(d)||). 100 means exact agreement, 0
/// matches the mean predictor.
inline double fitness(std::span<const double> d, std::span<const double> d_hat) {
    if (d.size() != d_hat.size() || d.size() < 2)
        throw std::invalid_argument("fitness needs two equal-length sequences of size >= 2");
    double mean = 0.0;
    for (double v : d) mean += v;
    mean /= static_cast<double>(d.size());
    double num = 0.0, den = 0.0;
    for (std::size_t i = 0; i < d.size(); ++i) {
        num += (d[i] - d_hat[i]) * (d[i] - d_hat[i]);
        den += (d[i] - mean) * (d[i] - mean);
    }
    if (den == 0.0) throw DegenerateReference("reference sequence is constant");
    return std::max(kFitnessFloor, 100.0 * (1.0 - std::sqrt(num / den)));
}

/// Variance-accounted-for alternative: 100 (1 - var(d - d_hat) / var(d)).
inline double fitness_vaf(std::span<const double> d, std::span<const double> d_hat) {
    if (d.size() != d_hat.size() || d.size() < 2)
        throw std::invalid_argument("fitness needs two equal-length sequences of size >= 2");
    double mean_d = 0.0, mean_e = 0.0;
    for (std::size_t i = 0; i < d.size(); ++i) {
        mean_d += d[i];
        mean_e += d[i] - d_hat[i];
    }
    mean_d /= static_cast<double>(d.size());
    mean_e /= static_cast<double>(d.size());
    double var_e = 0.0, var_d = 0.0;
    for (std::size_t i = 0; i < d.size(); ++i) {
        const double e = d[i] - d_hat[i] - mean_e;
        var_e += e * e;
        var_d += (d[i] - mean_d) * (d[i] - mean_d);
    }
    if (var_d == 0.0) throw DegenerateReference("reference sequence is constant");
    return std::max(kFitnessFloor, 100.0 * (1.0 - var_e / var_d));
}

/// Peak excess over the steady-state value, percent of |y_ss|.
inline double overshoot(std::span<const double> y, double y_ss) {
    if (y_ss == 0.0) throw ZeroReference("steady-state value is zero");
    if (y.empty()) throw std::invalid_argument("empty response");
    double peak = y.front();
    for (double v : y) peak = std::max(peak, v);
    return 100.0 * std::max(0.0, (peak - y_ss) / std::abs(y_ss));
}

/// First time (relative to the trace start) after which the response stays
/// inside the +-band about y_ss.
inline double settling_time(std::span<const double> y, std::span<const double> t, double y_ss,
                            double band = 0.02) {
    if (y.size() != t.size() || y.empty())
        throw std::invalid_argument("response and time must be equal-length and non-empty");
    if (y_ss == 0.0) throw ZeroReference("steady-state value is zero");
    const double tol = band * std::abs(y_ss);
    std::size_t last_outside = y.size();  // sentinel: never outside
    for (std::size_t i = 0; i < y.size(); ++i)
        if (std::abs(y[i] - y_ss) > tol) last_outside = i;
    if (last_outside == y.size()) return 0.0;
    if (last_outside + 1 >= y.size()) throw NeverSettles("response never stays inside the band");
    return t[last_outside + 1] - t.front();
}

/// 10%-to-90% rise time with linear interpolation between samples.
inline double rise_time(std::span<const double> y, std::span<const double> t, double y_ss) {
    if (y.size() != t.size() || y.empty())
        throw std::invalid_argument("response and time must be equal-length and non-empty");
    if (y_ss == 0.0) throw ZeroReference("steady-state value is zero");
    auto crossing = [&](double frac) {
        const double level = frac;  // on the normalized response
        double prev = y.front() / y_ss;
        if (prev >= level) return t.front();
        for (std::size_t i = 1; i < y.size(); ++i) {
            const double cur = y[i] / y_ss;
            if (cur >= level) {
                const double f = (level - prev) / (cur - prev);
                return t[i - 1] + f * (t[i] - t[i - 1]);
            }
            prev = cur;
        }
        throw NoCrossing("response never crosses the rise level");
    };
    const double t10 = crossing(0.1);
    const double t90 = crossing(0.9);
    return t90 - t10;
}

/// Largest |y| over the trailing window of the trace.
inline double steady_state_peak(std::span<const double> y, std::span<const double> t,
                                double window) {
    if (y.size() != t.size() || y.empty())
        throw std::invalid_argument("response and time must be equal-length and non-empty");
    if (window > t.back() - t.front() + 1e-15)
        throw std::invalid_argument("window exceeds trace duration");
    const double start = t.back() - window;
    double peak = 0.0;
    for (std::size_t i = 0; i < y.size(); ++i)
        if (t[i] >= start) peak = std::max(peak, std::abs(y[i]));
    return peak;
}

}  // namespace dsservo::metrics
