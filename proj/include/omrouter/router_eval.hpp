#pragma once

#include <algorithm>
#include <cmath>
#include <numbers>
#include <vector>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "omrouter/empty_cavity.hpp"
#include "omrouter/errors.hpp"
#include "omrouter/operating_point.hpp"
#include "omrouter/response.hpp"

// Routing figures of merit: overlaps of the single-photon input spectrum with
// the reflection and transmission channels, plus the noise photons the probe
// would see in its own spectral mode.

namespace omrouter {

struct Band {
    double lo = 0.0; // rad/s
    double hi = 0.0;
};

/// [0.5, 1.5] omega_m, widened when needed to hold the probe center +/- 10 bandwidths.
inline Band default_band(const SystemParams& p) {
    const double reach = 10.0 * p.input_bandwidth;
    return {std::min(0.5 * p.mech_freq, p.input_center - reach), std::max(1.5 * p.mech_freq, p.input_center + reach)};
}

/**
 * All probabilities are normalized by the fraction of the input line that
 * falls inside the band, so a lossless undriven cavity gives
 * p_reflect + p_transmit = 1 regardless of how much Lorentzian tail is cut off.
 *
 * The leaks weight S_v and S_T by the same normalized input profile: they are
 * noise photons per probe photon landing in each port within the probe's mode.
 * p_reflect may exceed 1 by a few percent near the dip because R(omega_m) is
 * about 1 + kappa^2/omega_m^2; that is physical and left unclamped.
 */
struct RoutingReport {
    double p_reflect = 0.0;
    double p_transmit = 0.0;
    double vacuum_leak = 0.0;
    double thermal_leak = 0.0;
    double input_mass = 0.0; // fraction of the probe line inside the band
    double contrast = 0.0;   // filled by switching_contrast; 0 from routing_probabilities
    Band band;
};

namespace detail {

// Adaptive Gauss-Kronrod per panel. A single-rule pass first sizes the whole
// integral; each panel then gets an equal share of the absolute error budget,
// so negligible tail panels are not refined to relative precision.
template <class F>
double integrate_panels(F&& f, const std::vector<double>& nodes, double rel_tol) {
    using Quad = boost::math::quadrature::gauss_kronrod<double, 31>;
    const std::size_t panels = nodes.size() - 1;
    std::vector<double> l1(panels);
    double scale = 0.0;
    for (std::size_t i = 0; i < panels; ++i) {
        Quad::integrate(f, nodes[i], nodes[i + 1], 0, 0.0, nullptr, &l1[i]);
        scale += l1[i];
    }
    const double budget = 1e-2 * rel_tol * scale / static_cast<double>(panels);

    double total = 0.0, err_total = 0.0, abs_total = 0.0;
    for (std::size_t i = 0; i < panels; ++i) {
        double err = 0.0, panel_l1 = 0.0;
        const double tol = l1[i] > 0.0 ? std::max(1e-2 * rel_tol, budget / l1[i]) : 1.0;
        total += Quad::integrate(f, nodes[i], nodes[i + 1], 15, tol, &err, &panel_l1);
        err_total += err;
        abs_total += panel_l1;
    }
    if (!std::isfinite(total) || err_total > rel_tol * abs_total + 1e-300)
        throw NumericalFailure("band quadrature did not reach relative tolerance "
                               + std::to_string(rel_tol));
    return total;
}

inline std::vector<double> panel_nodes(const Band& band, std::size_t panels, std::initializer_list<double> features) {
    std::vector<double> nodes;
    nodes.reserve(panels + 1 + features.size());
    const double step = (band.hi - band.lo) / static_cast<double>(panels);
    for (std::size_t i = 0; i <= panels; ++i) nodes.push_back(band.lo + step * static_cast<double>(i));
    nodes.back() = band.hi;
    for (double x : features)
        if (x > band.lo && x < band.hi) nodes.push_back(x);
    std::sort(nodes.begin(), nodes.end());
    nodes.erase(std::unique(nodes.begin(), nodes.end()), nodes.end());
    return nodes;
}

} // namespace detail

/// Integrated routing probabilities over `band` for the probe line in `op.params`.
inline RoutingReport routing_probabilities(const OperatingPoint& op, const Band& band, std::size_t quad_points = 200) {
    const auto& p = op.params;
    if (quad_points < 200) throw InvalidParameter("quad_points", "must be >= 200");
    const ProbeLine in = probe_line(p);
    if (!(band.lo <= in.center - 10.0 * in.bandwidth && band.hi >= in.center + 10.0 * in.bandwidth))
        throw ContractViolation("integration band must contain the probe line center +/- 10 bandwidths");

    constexpr double rel_tol = 1e-6;
    const double lw = eit_linewidth(op);
    const auto nodes = detail::panel_nodes(band, quad_points,
        {in.center, in.center - in.bandwidth, in.center + in.bandwidth, p.detuning - lw, p.detuning, p.detuning + lw});

    auto scin = [&](double w) { return lorentzian_input(w, in.center, in.bandwidth); };
    RoutingReport r;
    r.band = band;
    r.input_mass = (std::atan((band.hi - in.center) / in.bandwidth) - std::atan((band.lo - in.center) / in.bandwidth))
                   / std::numbers::pi;
    r.p_reflect = detail::integrate_panels([&](double w) { return scin(w) * reflection_R(w, op); }, nodes, rel_tol)
                  / r.input_mass;
    r.p_transmit = detail::integrate_panels([&](double w) { return scin(w) * transmission_T(w, op); }, nodes, rel_tol)
                   / r.input_mass;
    if (op.photon_number > 0.0) {
        r.vacuum_leak = detail::integrate_panels([&](double w) { return scin(w) * vacuum_noise(w, op); }, nodes, rel_tol)
                        / r.input_mass;
        if (p.bath_temp > 0.0)
            r.thermal_leak = detail::integrate_panels([&](double w) { return scin(w) * thermal_noise(w, op); },
                                                      nodes, rel_tol)
                             / r.input_mass;
    }
    return r;
}

inline RoutingReport routing_probabilities(const OperatingPoint& op) {
    return routing_probabilities(op, default_band(op.params));
}

/// On/off figure of merit and the two reports it was built from.
struct SwitchingReport {
    RoutingReport off; // drive_power = 0
    RoutingReport on;  // drive_power = power_on
    double contrast = 0.0;
    /// Contrast after charging each state with the noise photons (vacuum + thermal)
    /// that reach the port the probe should have avoided.
    double noise_penalized = 0.0;
};

inline SwitchingReport switching_report(const SystemParams& params, double power_on) {
    if (!(power_on >= 0.0) || !std::isfinite(power_on)) throw InvalidParameter("power_on", "must be finite and >= 0");
    SystemParams off = params, on = params;
    off.drive_power = 0.0;
    on.drive_power = power_on;
    SwitchingReport s;
    s.off = routing_probabilities(derive_operating_point(off));
    s.on = routing_probabilities(derive_operating_point(on));
    s.contrast = std::min(s.off.p_transmit, s.on.p_reflect);
    s.noise_penalized = std::min(s.off.p_transmit - s.off.vacuum_leak - s.off.thermal_leak,
                                 s.on.p_reflect - s.on.vacuum_leak - s.on.thermal_leak);
    s.off.contrast = s.on.contrast = s.contrast;
    return s;
}

/// min(p_transmit with no drive, p_reflect at power_on); near 1 means both states route correctly.
inline double switching_contrast(const SystemParams& params, double power_on) {
    return switching_report(params, power_on).contrast;
}

} // namespace omrouter
