#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <span>
#include <vector>

#include "omrouter/empty_cavity.hpp"
#include "omrouter/errors.hpp"
#include "omrouter/operating_point.hpp"

// Linearized response of the driven membrane cavity to a weak probe.
//
// Frequencies here are rotating-frame sideband frequencies: a probe photon at
// lab frequency omega_c + omega sits at `omega`. The transparency window opens
// at omega = Delta, and for the reference device Delta = omega_m.

namespace omrouter {

/// Probe line: normalized Lorentzian centred at `center` with half-width `bandwidth`.
struct ProbeLine {
    double center = 0.0;
    double bandwidth = 0.0;
};

inline ProbeLine probe_line(const SystemParams& p) { return {p.input_center, p.input_bandwidth}; }

namespace detail {

inline cplx mech_factor(double omega, const OperatingPoint& op) {
    const auto& p = op.params;
    return p.mass * cplx(p.mech_freq * p.mech_freq - omega * omega, -op.mech_damping * omega);
}

/// hbar g^2 |c_s|^2, the only drive-dependent combination in d and E.
inline double coupling_strength(const OperatingPoint& op) {
    return PhysConstants::hbar * op.coupling * op.coupling * op.photon_number;
}

/// Magnitude against which |d| is judged singular.
inline double denominator_scale(double omega, const OperatingPoint& op) {
    const auto& p = op.params;
    const double wm2 = p.mech_freq * p.mech_freq;
    const double k2 = 4.0 * p.cavity_decay * p.cavity_decay;
    return p.mass * std::max(wm2, omega * omega) * (k2 + p.detuning * p.detuning + omega * omega);
}

inline cplx checked_denominator(double omega, const OperatingPoint& op);

} // namespace detail

/// Characteristic denominator d(omega); its zeros are the system's normal modes.
inline cplx denominator_d(double omega, const OperatingPoint& op) {
    const auto& p = op.params;
    const cplx cav = cplx(2.0 * p.cavity_decay, -omega);
    return detail::mech_factor(omega, op) * (cav * cav + p.detuning * p.detuning)
           - 2.0 * detail::coupling_strength(op) * p.detuning;
}

inline cplx detail::checked_denominator(double omega, const OperatingPoint& op) {
    const cplx d = denominator_d(omega, op);
    if (!(std::abs(d) > 1e-12 * denominator_scale(omega, op)))
        throw NumericalFailure("d(omega) vanishes at omega = " + std::to_string(omega)
                               + " rad/s; operating point is at an instability boundary");
    return d;
}

/// Probe amplitude transmitted to the right port.
inline cplx response_E(double omega, const OperatingPoint& op) {
    const auto& p = op.params;
    const cplx d = detail::checked_denominator(omega, op);
    const cplx num = detail::mech_factor(omega, op) * cplx(2.0 * p.cavity_decay, -(p.detuning + omega))
                     + cplx(0.0, detail::coupling_strength(op));
    return 2.0 * p.cavity_decay / d * num;
}

inline double reflection_R(double omega, const OperatingPoint& op) { return std::norm(response_E(omega, op) - 1.0); }

inline double transmission_T(double omega, const OperatingPoint& op) { return std::norm(response_E(omega, op)); }

/// Output photons converted from the incoming vacuum by the drive. Depends on |c_s|^4 only.
inline double vacuum_noise(double omega, const OperatingPoint& op) {
    const cplx d = detail::checked_denominator(omega, op);
    const double amp = op.params.cavity_decay * detail::coupling_strength(op) / std::abs(d);
    return 8.0 * amp * amp;
}

/**
 * Bath factor (-omega) * [1 + coth(-hbar omega / 2 k_B T)] in rad/s.
 *
 * For omega > 0 this equals 2 omega nbar(omega), with nbar the Bose occupation;
 * for omega < 0 it is 2 |omega| (nbar(|omega|) + 1). The omega -> 0 limit is
 * 2 k_B T / hbar and the T -> 0 limit keeps only the spontaneous part.
 */
inline double thermal_bath_factor(double omega, double temperature) {
    constexpr double hbar = PhysConstants::hbar;
    constexpr double kB = PhysConstants::k_B;
    const double aw = std::abs(omega);
    if (temperature <= 0.0) return omega < 0.0 ? 2.0 * aw : 0.0;
    if (omega == 0.0) return 2.0 * kB * temperature / hbar;
    const double x = hbar * aw / (kB * temperature);
    const double nbar = x > 60.0 ? std::exp(-x) : 1.0 / std::expm1(x);
    return omega > 0.0 ? 2.0 * aw * nbar : 2.0 * aw * (nbar + 1.0);
}

/// Amplitude with which the mirror's Brownian force reaches either output port.
inline cplx thermal_response_V(double omega, const OperatingPoint& op) {
    const auto& p = op.params;
    const cplx d = detail::checked_denominator(omega, op);
    const cplx num = cplx(0.0, -op.coupling) * op.cavity_amp * cplx(2.0 * p.cavity_decay, -(p.detuning + omega));
    return std::sqrt(2.0 * p.cavity_decay) / d * num;
}

inline double thermal_noise(double omega, const OperatingPoint& op) {
    if (op.params.bath_temp < 0.0) throw InvalidParameter("bath_temp", "must be >= 0");
    const double factor = thermal_bath_factor(omega, op.params.bath_temp);
    if (factor == 0.0) return 0.0;
    return std::norm(thermal_response_V(omega, op)) * PhysConstants::hbar * op.mech_damping * op.params.mass * factor;
}

/// Analytic transparency half-width gamma_m/2 + hbar g^2 eps^2 / (4 m omega_m kappa (4 kappa^2 + omega_m^2)).
inline double eit_linewidth(const OperatingPoint& op) {
    const auto& p = op.params;
    const double drive = PhysConstants::hbar * op.coupling * op.coupling * op.drive_amp * op.drive_amp
                         / (4.0 * p.mass * p.mech_freq * p.cavity_decay
                            * (4.0 * p.cavity_decay * p.cavity_decay + p.mech_freq * p.mech_freq));
    return op.mech_damping / 2.0 + drive;
}

/// Output channels on a frequency grid.
///
/// `Scin`, `Scout` and `Sdout` are densities per unit of omega/omega_m, so they
/// are dimensionless like `R`, `Tx`, `Sv` and `St` and the sums are well formed.
struct ChannelSpectra {
    std::vector<double> grid; // rad/s
    std::vector<double> R;
    std::vector<double> Tx;
    std::vector<double> Sv;
    std::vector<double> St;
    std::vector<double> Scin;
    std::vector<double> Scout;
    std::vector<double> Sdout;

    std::size_t size() const { return grid.size(); }
};

inline ChannelSpectra output_spectra(std::span<const double> grid, const OperatingPoint& op, const ProbeLine& input) {
    if (grid.empty()) throw InvalidParameter("grid", "must not be empty");
    for (std::size_t i = 1; i < grid.size(); ++i)
        if (!(grid[i] > grid[i - 1])) throw InvalidParameter("grid", "must be strictly increasing");

    const std::size_t n = grid.size();
    ChannelSpectra s;
    s.grid.assign(grid.begin(), grid.end());
    for (auto* v : {&s.R, &s.Tx, &s.Sv, &s.St, &s.Scin, &s.Scout, &s.Sdout}) v->resize(n);

    const double wm = op.params.mech_freq;
    for (std::size_t i = 0; i < n; ++i) {
        const double w = grid[i];
        const cplx e = response_E(w, op);
        s.R[i] = std::norm(e - 1.0);
        s.Tx[i] = std::norm(e);
        s.Sv[i] = vacuum_noise(w, op);
        s.St[i] = thermal_noise(w, op);
        s.Scin[i] = lorentzian_input(w, input.center, input.bandwidth) * wm;
        const double noise = s.Sv[i] + s.St[i];
        s.Scout[i] = s.Scin[i] * s.R[i] + noise;
        s.Sdout[i] = s.Scin[i] * s.Tx[i] + noise;
    }
    return s;
}

/// `n` evenly spaced points over [lo, hi] (inclusive), given in units of omega_m.
inline std::vector<double> uniform_grid(double lo_over_wm, double hi_over_wm, std::size_t n, double mech_freq) {
    if (n < 2) throw InvalidParameter("grid", "needs at least 2 points");
    if (!(lo_over_wm < hi_over_wm) || !std::isfinite(lo_over_wm) || !std::isfinite(hi_over_wm))
        throw InvalidParameter("grid", "requires finite lo < hi");
    std::vector<double> g(n);
    const double step = (hi_over_wm - lo_over_wm) / static_cast<double>(n - 1);
    for (std::size_t i = 0; i < n; ++i) g[i] = (lo_over_wm + step * static_cast<double>(i)) * mech_freq;
    g.back() = hi_over_wm * mech_freq;
    return g;
}

/// Transparency-dip geometry measured directly on T(omega).
struct DipScan {
    double center = 0.0;  // location of the transmission minimum, rad/s
    double min_T = 0.0;
    double left = 0.0;    // half-depth crossings, rad/s
    double right = 0.0;
    double half_width() const { return 0.5 * (right - left); }
    double full_width() const { return right - left; }
};

/**
 * Locates the transmission dip nearest to Delta and its half-depth crossings.
 *
 * Depth is measured from the unit off-dip baseline, so the crossing level is
 * (1 + T_min) / 2. Crossings are refined by bisection to ~1e-10 relative.
 */
inline DipScan scan_transparency_dip(const OperatingPoint& op, std::size_t samples = 20001) {
    const auto& p = op.params;
    if (!(op.photon_number > 0.0)) throw ContractViolation("dip scan needs a driven cavity");
    const double span = std::max(8.0 * p.cavity_decay, 4.0 * eit_linewidth(op));
    const double lo = p.detuning - span, hi = p.detuning + span;
    const double step = (hi - lo) / static_cast<double>(samples - 1);
    auto T = [&](double w) { return transmission_T(w, op); };

    std::size_t imin = 0;
    double tmin = T(lo);
    for (std::size_t i = 1; i < samples; ++i) {
        const double t = T(lo + step * static_cast<double>(i));
        if (t < tmin) tmin = t, imin = i;
    }
    // golden-section refinement of the minimum within one step either side
    double a = lo + step * (static_cast<double>(imin) - 1.0), b = a + 2.0 * step;
    const double phi = (std::sqrt(5.0) - 1.0) / 2.0;
    for (int it = 0; it < 100 && (b - a) > 1e-12 * std::abs(p.detuning); ++it) {
        const double c = b - phi * (b - a), d = a + phi * (b - a);
        if (T(c) < T(d)) b = d; else a = c;
    }
    DipScan out;
    out.center = 0.5 * (a + b);
    out.min_T = T(out.center);
    const double level = 0.5 * (1.0 + out.min_T);

    auto crossing = [&](double inside, double dir) {
        double outside = inside;
        do {
            outside += dir * step;
            if (std::abs(outside - out.center) > 2.0 * span)
                throw NumericalFailure("transparency dip does not recover to half depth");
        } while (T(outside) < level);
        double in = outside - dir * step;
        in = dir > 0 ? std::max(in, inside) : std::min(in, inside);
        for (int it = 0; it < 200 && std::abs(outside - in) > 1e-10 * std::abs(out.center); ++it) {
            const double mid = 0.5 * (in + outside);
            (T(mid) < level ? in : outside) = mid;
        }
        return 0.5 * (in + outside);
    };
    out.left = crossing(out.center, -1.0);
    out.right = crossing(out.center, +1.0);
    return out;
}

} // namespace omrouter
