#pragma once

#include <cmath>
#include <complex>
#include <numbers>
#include <string>
#include <vector>

#include "omrouter/errors.hpp"

namespace omrouter {

using cplx = std::complex<double>;

/// CODATA constants in SI units.
struct PhysConstants {
    static constexpr double hbar = 1.0545718e-34;   // J s
    static constexpr double k_B = 1.380649e-23;     // J / K
    static constexpr double c_light = 2.99792458e8; // m / s
};

/**
 * User-facing parameters of the membrane-in-the-middle cavity.
 *
 * Cavity decay follows the double-ended convention: photons leak at rate 2*kappa
 * through each mirror, every port couples with sqrt(2*kappa), and the cavity
 * half-width is therefore 2*kappa. All angular frequencies are in rad/s, and
 * the probe frequencies are measured in the frame rotating at the drive.
 */
struct SystemParams {
    double wavelength = 0.0;      // m
    double cavity_length = 0.0;   // m
    double mass = 0.0;            // kg
    double mech_freq = 0.0;       // rad/s
    double quality = 0.0;         // dimensionless
    double cavity_decay = 0.0;    // rad/s
    double drive_power = 0.0;     // W
    double bath_temp = 0.0;       // K
    double detuning = 0.0;        // effective detuning Delta, rad/s
    double input_center = 0.0;    // probe line center, rad/s
    double input_bandwidth = 0.0; // probe Lorentzian half-width Gamma, rad/s

    bool operator==(const SystemParams&) const = default;
};

/// Steady state of the driven system around which fluctuations are linearized.
struct OperatingPoint {
    SystemParams params;
    double drive_freq = 0.0;  // omega_c, rad/s
    double coupling = 0.0;    // g, rad s^-1 m^-1, negative
    double mech_damping = 0.0; // gamma_m, 1/s
    double drive_amp = 0.0;   // epsilon_c, 1/s
    cplx cavity_amp{};        // c_s
    double photon_number = 0.0; // |c_s|^2
    double displacement = 0.0;  // q_s, m

    /// Bare detuning omega_0 - omega_c implied by the fixed effective detuning.
    double implied_bare_detuning() const { return params.detuning - coupling * displacement; }
};

/// Parameters of the reference membrane device; drive 5 uW, bath 20 mK, probe at Delta.
inline SystemParams default_params() {
    SystemParams p;
    p.wavelength = 1054e-9;
    p.cavity_length = 6.7e-2;
    p.mass = 40e-12;
    p.mech_freq = 2.0 * std::numbers::pi * 134e3;
    p.quality = 1.1e6;
    p.cavity_decay = p.mech_freq / 10.0;
    p.drive_power = 5e-6;
    p.bath_temp = 20e-3;
    p.detuning = p.mech_freq;
    p.input_center = p.mech_freq;
    p.input_bandwidth = 0.01 * p.mech_freq;
    return p;
}

namespace detail {

inline void require_positive(double v, const char* field) {
    if (!(v > 0.0) || !std::isfinite(v)) throw InvalidParameter(field, "must be finite and > 0");
}

inline void require_non_negative(double v, const char* field) {
    if (!(v >= 0.0) || !std::isfinite(v)) throw InvalidParameter(field, "must be finite and >= 0");
}

inline void require_finite(double v, const char* field) {
    if (!std::isfinite(v)) throw InvalidParameter(field, "must be finite");
}

} // namespace detail

/// Throws InvalidParameter naming the first field that breaks its invariant.
inline void validate(const SystemParams& p) {
    detail::require_positive(p.wavelength, "wavelength");
    detail::require_positive(p.cavity_length, "cavity_length");
    detail::require_positive(p.mass, "mass");
    detail::require_positive(p.mech_freq, "mech_freq");
    detail::require_positive(p.quality, "quality");
    detail::require_positive(p.cavity_decay, "cavity_decay");
    detail::require_non_negative(p.drive_power, "drive_power");
    detail::require_non_negative(p.bath_temp, "bath_temp");
    detail::require_finite(p.detuning, "detuning");
    detail::require_finite(p.input_center, "input_center");
    detail::require_positive(p.input_bandwidth, "input_bandwidth");
}

/// Soft checks for the transparency regime gamma_m << kappa << omega_m.
/// "Much less than" is taken as a factor of at least 5.
inline std::vector<std::string> regime_warnings(const SystemParams& p) {
    constexpr double margin = 5.0;
    std::vector<std::string> out;
    const double gamma_m = p.mech_freq / p.quality;
    if (!(gamma_m * margin <= p.cavity_decay))
        out.emplace_back("mechanical damping is not much smaller than cavity decay");
    if (!(p.cavity_decay * margin <= p.mech_freq))
        out.emplace_back("cavity decay is not much smaller than the mechanical frequency "
                         "(outside the resolved-sideband regime)");
    return out;
}

/// Derives omega_c, g, epsilon_c, c_s and q_s. The effective detuning is taken as given.
inline OperatingPoint derive_operating_point(const SystemParams& params) {
    validate(params);
    constexpr double hbar = PhysConstants::hbar;

    OperatingPoint op;
    op.params = params;
    op.drive_freq = 2.0 * std::numbers::pi * PhysConstants::c_light / params.wavelength;
    op.coupling = -op.drive_freq / params.cavity_length;
    op.mech_damping = params.mech_freq / params.quality;
    op.drive_amp = std::sqrt(2.0 * params.cavity_decay * params.drive_power / (hbar * op.drive_freq));
    op.cavity_amp = op.drive_amp / cplx(2.0 * params.cavity_decay, params.detuning);
    op.photon_number = std::norm(op.cavity_amp);
    op.displacement = -hbar * op.coupling * op.photon_number / (params.mass * params.mech_freq * params.mech_freq);
    return op;
}

} // namespace omrouter
