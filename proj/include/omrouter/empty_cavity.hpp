#pragma once

#include <numbers>

#include "omrouter/errors.hpp"

// Bare double-ended Fabry-Perot cavity with equal mirrors, each leaking at 2*kappa.
// Kept independent of the optomechanical response so it can serve as an oracle.

namespace omrouter {

struct EmptyCavityParams {
    double resonance = 0.0; // omega_0, rad/s
    double decay = 0.0;     // kappa, rad/s
};

inline double empty_reflectance(double omega, const EmptyCavityParams& p) {
    const double x = omega - p.resonance;
    return x * x / (4.0 * p.decay * p.decay + x * x);
}

inline double empty_transmittance(double omega, const EmptyCavityParams& p) {
    const double x = omega - p.resonance;
    const double w2 = 4.0 * p.decay * p.decay;
    return w2 / (w2 + x * x);
}

/// Normalized Lorentzian probe spectrum of half-width `bandwidth`, in s/rad.
inline double lorentzian_input(double omega, double center, double bandwidth) {
    if (!(bandwidth > 0.0)) throw InvalidParameter("input_bandwidth", "must be > 0");
    const double x = omega - center;
    return (bandwidth / std::numbers::pi) / (x * x + bandwidth * bandwidth);
}

} // namespace omrouter
