#pragma once

#include <stdexcept>
#include <string>

namespace dsservo {

struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// A transfer-function denominator vanishes at the evaluation point s = 0.
struct PoleAtZero : Error {
    using Error::Error;
};

/// A signal or state left the representable range (overflow/NaN).
struct NonFinite : Error {
    using Error::Error;
};

/// Estimator queried before it has seen enough samples.
struct InsufficientData : Error {
    using Error::Error;
};

/// Reference sequence is constant; fit metric undefined.
struct DegenerateReference : Error {
    using Error::Error;
};

/// Steady-state value is zero; relative metric undefined.
struct ZeroReference : Error {
    using Error::Error;
};

/// Response never stays inside the settling band.
struct NeverSettles : Error {
    using Error::Error;
};

/// Response never crosses the required rise levels.
struct NoCrossing : Error {
    using Error::Error;
};

struct ConfigError : Error {
    using Error::Error;
};

struct IoError : Error {
    using Error::Error;
};

}  // namespace dsservo
