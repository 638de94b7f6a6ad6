#pragma once

#include "dsservo/control.hpp"
#include "dsservo/lti.hpp"

namespace dsservo::servo {

/// Voice coil motor: double integrator cascaded with one lightly damped
/// resonance, in micrometers of head travel per unit command.
inline lti::RationalTransferFunction vcm_transfer_function() {
    lti::RationalTransferFunction tf;
    tf.gain = 3.548e7;
    tf.sections.push_back({{1.0}, {1.0, 0.0, 0.0}});
    tf.sections.push_back({{5.536e8}, {1.0, 1280.0, 5.536e8}});
    tf.input_unit = "control signal";
    tf.output_unit = "um";
    return tf;
}

/// Micro-actuator: two resonant section pairs with a 0.366 static gain.
inline lti::RationalTransferFunction micro_actuator_transfer_function() {
    lti::RationalTransferFunction tf;
    tf.gain = 0.366;
    tf.sections.push_back({{2.975e9}, {1.0, 2450.0, 1.7e9}});
    tf.sections.push_back({{1.0, 4524.0, 2.08e9}, {1.0, 6032.0, 3.64e9}});
    tf.input_unit = "control signal";
    tf.output_unit = "um";
    return tf;
}

inline control::PidGains vcm_pid_gains() {
    return {0.0328608, 0.8955647, 9.86285e-05, 3316.4};
}

inline control::PidGains micro_actuator_pid_gains() {
    return {0.0650849, 4.7032010, 1.99346e-04, 1402745.0};
}

/// Default disturbance dynamics G = (z^-1 + z^-2) / (1 + z^-1 + 0.5 z^-2).
inline std::vector<double> default_disturbance_a() { return {1.0, 0.5}; }
inline std::vector<double> default_disturbance_b() { return {1.0, 1.0}; }

constexpr double kDefaultSampleInterval = 2e-4;  // seconds
constexpr int kDefaultOversample = 10;
constexpr double kDefaultCovarianceScale = 1e4;  // P(1) = 1e4 * I
constexpr double kDefaultSineAmplitude = 1e4;

}  // namespace dsservo::servo
