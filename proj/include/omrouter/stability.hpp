#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <limits>
#include <string>

#include <Eigen/Dense>

#include "omrouter/errors.hpp"
#include "omrouter/operating_point.hpp"

// Linear stability from the zeros of d(omega). With the e^{-i omega t}
// convention of the fluctuation equations a mode decays iff Im(omega) < 0, so
// the operating point is stable iff all four zeros lie in the open lower half plane.

namespace omrouter {

/// Coefficients of d(omega) in ascending powers: d = sum_k coeffs[k] * omega^k.
using QuarticCoeffs = std::array<cplx, 5>;

/**
 * Expands d(omega) = m (omega_m^2 - omega^2 - i gamma_m omega) [(2 kappa - i omega)^2 + Delta^2]
 *                    - 2 hbar g^2 |c_s|^2 Delta.
 * The leading coefficient is +m; only the constant term depends on the drive.
 */
inline QuarticCoeffs d_polynomial_coeffs(const OperatingPoint& op) {
    const auto& p = op.params;
    const double m = p.mass, k = p.cavity_decay, g = op.mech_damping;
    const double wm2 = p.mech_freq * p.mech_freq;
    const double cav0 = 4.0 * k * k + p.detuning * p.detuning;
    const double drive = PhysConstants::hbar * op.coupling * op.coupling * op.photon_number;

    // mechanical factor: a2 w^2 + a1 w + a0, cavity factor: b2 w^2 + b1 w + b0
    const cplx a2 = -1.0, a1 = cplx(0.0, -g), a0 = wm2;
    const cplx b2 = -1.0, b1 = cplx(0.0, -4.0 * k), b0 = cav0;
    QuarticCoeffs c;
    c[4] = m * a2 * b2;
    c[3] = m * (a2 * b1 + a1 * b2);
    c[2] = m * (a2 * b0 + a1 * b1 + a0 * b2);
    c[1] = m * (a1 * b0 + a0 * b1);
    c[0] = m * a0 * b0 - 2.0 * drive * p.detuning;
    return c;
}

inline cplx eval_poly(const QuarticCoeffs& c, cplx z) {
    cplx acc = c[4];
    for (int k = 3; k >= 0; --k) acc = acc * z + c[static_cast<std::size_t>(k)];
    return acc;
}

/// Sum of |c_k| |z|^k: the size of the terms that cancel at a root.
inline double poly_scale(const QuarticCoeffs& c, cplx z) {
    double s = 0.0, r = 1.0;
    for (const auto& ck : c) s += std::abs(ck) * r, r *= std::abs(z);
    return s;
}

/**
 * Zeros of a quartic via the eigenvalues of its companion matrix.
 *
 * The variable is rescaled so the constant and leading coefficients have equal
 * magnitude, which takes the ~1e30 spread out of the raw SI coefficients; each
 * eigenvalue then gets a few Newton steps on the unscaled polynomial.
 */
inline std::array<cplx, 4> quartic_roots(const QuarticCoeffs& c) {
    if (c[4] == 0.0) throw NumericalFailure("quartic has vanishing leading coefficient");
    const double s = c[0] == 0.0 ? 1.0 : std::pow(std::abs(c[0]) / std::abs(c[4]), 0.25);

    Eigen::Matrix4cd comp = Eigen::Matrix4cd::Zero();
    double sk = 1.0;
    for (int k = 0; k < 4; ++k) {
        // monic coefficients in z = omega / s
        comp(k, 3) = -c[static_cast<std::size_t>(k)] * sk / (c[4] * s * s * s * s);
        sk *= s;
        if (k > 0) comp(k, k - 1) = 1.0;
    }
    Eigen::ComplexEigenSolver<Eigen::Matrix4cd> solver(comp, false);
    if (solver.info() != Eigen::Success) throw NumericalFailure("companion-matrix eigensolver did not converge");

    std::array<cplx, 4> roots;
    for (int i = 0; i < 4; ++i) {
        cplx z = solver.eigenvalues()(i) * s;
        for (int it = 0; it < 3; ++it) {
            cplx dp = 4.0 * c[4];
            for (int k = 3; k >= 1; --k) dp = dp * z + static_cast<double>(k) * c[static_cast<std::size_t>(k)];
            if (dp == 0.0) break;
            const cplx step = eval_poly(c, z) / dp;
            if (!std::isfinite(step.real()) || !std::isfinite(step.imag())) break;
            const cplx next = z - step;
            if (std::abs(eval_poly(c, next)) >= std::abs(eval_poly(c, z))) break;
            z = next;
        }
        roots[static_cast<std::size_t>(i)] = z;
    }
    std::sort(roots.begin(), roots.end(), [](cplx a, cplx b) {
        return a.real() != b.real() ? a.real() < b.real() : a.imag() < b.imag();
    });
    return roots;
}

struct StabilityReport {
    std::array<cplx, 4> roots{}; // rad/s, sorted by real part
    bool stable = false;
    /// min over roots of -Im(root): distance of the closest mode to the real axis,
    /// positive when stable, negative by the growth rate of the worst mode otherwise.
    double margin = 0.0;
    double max_residual = 0.0; // max |d(root)| / poly_scale(root)
};

inline StabilityReport assess_stability(const OperatingPoint& op) {
    const auto c = d_polynomial_coeffs(op);
    StabilityReport r;
    r.roots = quartic_roots(c);
    r.margin = std::numeric_limits<double>::infinity();
    for (const auto& z : r.roots) {
        r.margin = std::min(r.margin, -z.imag());
        r.max_residual = std::max(r.max_residual, std::abs(eval_poly(c, z)) / poly_scale(c, z));
    }
    if (!(r.max_residual < 1e-6))
        throw NumericalFailure("root residual " + std::to_string(r.max_residual) + " exceeds 1e-6");
    r.stable = r.margin > 0.0;
    return r;
}

/**
 * Largest drive power in [0, max_power] that is still stable, to 1% relative.
 * Assumes the stable set along the power axis is an interval starting at zero.
 */
inline double max_stable_power(const SystemParams& params, double max_power) {
    if (!(max_power >= 0.0) || !std::isfinite(max_power)) throw InvalidParameter("max_power", "must be finite and >= 0");
    auto stable_at = [&](double power) {
        SystemParams p = params;
        p.drive_power = power;
        return assess_stability(derive_operating_point(p)).stable;
    };
    if (!stable_at(0.0)) throw ContractViolation("operating point is unstable without drive");
    if (max_power == 0.0 || stable_at(max_power)) return max_power;

    double lo = 0.0, hi = max_power;
    for (int it = 0; it < 400 && hi - lo > 0.01 * hi; ++it) {
        // bisect geometrically once a positive lower bound exists
        const double mid = lo > 0.0 ? std::sqrt(lo * hi) : 0.5 * hi;
        (stable_at(mid) ? lo : hi) = mid;
        if (lo == 0.0 && hi < 1e-300) break;
    }
    return lo;
}

} // namespace omrouter
