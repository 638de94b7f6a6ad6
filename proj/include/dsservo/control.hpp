#pragma once

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "dsservo/errors.hpp"

namespace dsservo::control {

/// Parallel-form gains: u = P e + I (integral of e) + D N s/(s+N) e.
struct PidGains {
    double p = 0.0;
    double i = 0.0;
    double d = 0.0;
    double n = 1.0;  // derivative filter coefficient, rad/s
};

inline void validate(const PidGains& g) {
    if (!(g.n > 0.0)) throw std::invalid_argument("derivative filter coefficient must be positive");
    if (!std::isfinite(g.p) || !std::isfinite(g.i) || !std::isfinite(g.d) || !std::isfinite(g.n))
        throw std::invalid_argument("PID gains must be finite");
}

/// Discrete parallel-form PID. Integrator and derivative filter are both
/// bilinear-transformed, so the integral term is the trapezoid rule and the
/// derivative filter is 2DN(z-1) / ((2+NT)z - (2-NT)).
class PidController {
public:
    PidController(const PidGains& gains, double ts) : gains_(gains), ts_(ts) {
        validate(gains_);
        if (!(ts_ > 0.0)) throw std::invalid_argument("sample interval must be positive");
    }

    double step(double e) {
        if (!std::isfinite(e)) throw NonFinite("PID error input is not finite");
        integral_ += 0.5 * ts_ * (e + e_prev_);
        const double nt = gains_.n * ts_;
        deriv_ = ((2.0 - nt) * deriv_ + 2.0 * gains_.d * gains_.n * (e - e_prev_)) / (2.0 + nt);
        e_prev_ = e;
        return gains_.p * e + gains_.i * integral_ + deriv_;
    }

    void reset() {
        integral_ = 0.0;
        e_prev_ = 0.0;
        deriv_ = 0.0;
    }

    const PidGains& gains() const { return gains_; }
    double ts() const { return ts_; }

private:
    PidGains gains_;
    double ts_ = 0.0;
    double integral_ = 0.0;
    double e_prev_ = 0.0;
    double deriv_ = 0.0;
};

/// Hard clamp on an actuator command.
struct Saturation {
    double lower = -1.0;
    double upper = 1.0;

    Saturation(double lo, double hi) : lower(lo), upper(hi) {
        if (!(lower <= upper)) throw std::invalid_argument("saturation bounds are inverted");
    }

    double clamp(double u) const { return std::clamp(u, lower, upper); }
};

inline double saturate(const Saturation& s, double u) { return s.clamp(u); }

}  // namespace dsservo::control
