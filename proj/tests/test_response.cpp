#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <random>
#include <vector>

#include "omrouter/empty_cavity.hpp"
#include "omrouter/response.hpp"
#include "omrouter/stability.hpp"

using namespace omrouter;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {

OperatingPoint op_at(double power, double temp = 20e-3) {
    auto p = default_params();
    p.drive_power = power;
    p.bath_temp = temp;
    return derive_operating_point(p);
}

// d(omega) for complex omega written straight from the closed form.
cplx d_direct(cplx w, const OperatingPoint& op) {
    const auto& p = op.params;
    const cplx mech = p.mass * (p.mech_freq * p.mech_freq - w * w - cplx(0.0, op.mech_damping) * w);
    const cplx cav = 2.0 * p.cavity_decay - cplx(0.0, 1.0) * w;
    return mech * (cav * cav + p.detuning * p.detuning)
           - 2.0 * PhysConstants::hbar * op.coupling * op.coupling * op.photon_number * p.detuning;
}

std::vector<std::size_t> local_maxima(const std::vector<double>& v) {
    std::vector<std::size_t> out;
    for (std::size_t i = 1; i + 1 < v.size(); ++i)
        if (v[i] > v[i - 1] && v[i] > v[i + 1]) out.push_back(i);
    return out;
}

} // namespace

TEST_CASE("denominator d(omega)", "[response]") {
    const auto op0 = op_at(0.0);
    const auto& p = op0.params;
    CHECK_THAT(denominator_d(0.0, op0).real(),
               WithinRel(p.mass * p.mech_freq * p.mech_freq * (4.0 * p.cavity_decay * p.cavity_decay + p.detuning * p.detuning), 1e-14));
    CHECK(denominator_d(0.0, op0).imag() == 0.0);

    const auto op = op_at(5e-6);
    const double drive = 2.0 * PhysConstants::hbar * op.coupling * op.coupling * op.photon_number * p.mech_freq;
    CHECK_THAT(std::abs(denominator_d(p.mech_freq, op)), WithinRel(drive, 0.05));
}

TEST_CASE("d(omega) is the quartic given by its expanded coefficients", "[response][property]") {
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> u(-2.0, 2.0);
    for (double power : {0.0, 5e-6, 20e-6}) {
        const auto op = op_at(power);
        const auto c = d_polynomial_coeffs(op);
        const double wm = op.params.mech_freq;
        for (int i = 0; i < 100; ++i) {
            const cplx w(u(rng) * wm, 0.2 * u(rng) * wm);
            const cplx direct = d_direct(w, op);
            CHECK(std::abs(eval_poly(c, w) - direct) <= 1e-9 * poly_scale(c, w));
            const double wr = u(rng) * wm;
            CHECK(std::abs(eval_poly(c, wr) - denominator_d(wr, op)) <= 1e-9 * poly_scale(c, wr));
        }
    }
}

TEST_CASE("undriven response reduces to the empty cavity", "[response]") {
    const auto op = op_at(0.0);
    const auto& p = op.params;
    const EmptyCavityParams bare{p.detuning, p.cavity_decay};
    CHECK(response_E(p.detuning, op) == cplx(1.0, 0.0));

    double worst = 0.0;
    for (int i = 0; i <= 20000; ++i) {
        const double w = p.detuning + (-5.0 + 10.0 * i / 20000.0) * p.cavity_decay;
        if (std::abs(w - p.mech_freq) < 1e3 * op.mech_damping) continue;
        const cplx expected = 2.0 * p.cavity_decay / cplx(2.0 * p.cavity_decay, p.detuning - w);
        CHECK(std::abs(response_E(w, op) - expected) < 1e-12);
        worst = std::max(worst, std::abs(reflection_R(w, op) - empty_reflectance(w, bare)));
        CHECK_THAT(reflection_R(w, op) + transmission_T(w, op), WithinAbs(1.0, 1e-12));
    }
    CHECK(worst < 1e-6);
    CHECK(reflection_R(p.mech_freq, op) < 1e-12);
    CHECK_THAT(transmission_T(p.mech_freq, op), WithinAbs(1.0, 1e-12));
}

TEST_CASE("transparency dip at 5 uW", "[response]") {
    const auto op = op_at(5e-6);
    const auto& p = op.params;
    const double wm = p.mech_freq;

    // asymptotic oracle: drop the mechanical factor at omega_m from d and from E's numerator
    const double hg2n = PhysConstants::hbar * op.coupling * op.coupling * op.photon_number;
    const cplx e_asym = 2.0 * p.cavity_decay * cplx(0.0, hg2n) / (-2.0 * hg2n * p.detuning);
    CHECK_THAT(e_asym.imag(), WithinRel(-p.cavity_decay / wm, 1e-14));
    CHECK(std::abs(e_asym.real()) < 1e-15);

    const cplx e = response_E(wm, op);
    CHECK(std::abs(e - e_asym) < 0.1 * std::abs(e_asym));
    // frozen from an independent numpy evaluation
    CHECK_THAT(transmission_T(wm, op), WithinRel(0.009999618225429904, 1e-8));
    CHECK_THAT(reflection_R(wm, op), WithinRel(1.009980715689122, 1e-10));
    CHECK_THAT(transmission_T(wm, op), WithinRel(0.01, 0.2));

    CHECK(std::abs(response_E(5.0 * wm, op)) < 0.1);
}

TEST_CASE("vacuum noise", "[response]") {
    const auto op0 = op_at(0.0);
    for (double x : {0.5, 0.9, 1.0, 1.3}) CHECK(vacuum_noise(x * op0.params.mech_freq, op0) == 0.0);

    const auto op5 = op_at(5e-6);
    const double wm = op5.params.mech_freq;
    CHECK_THAT(vacuum_noise(wm, op5), WithinRel(0.019999618132457857, 1e-8));
    CHECK_THAT(vacuum_noise(wm, op5), WithinRel(2.0 * op5.params.cavity_decay * op5.params.cavity_decay / (wm * wm), 1e-3));

    const auto op20 = op_at(20e-6);
    const auto grid = uniform_grid(0.5, 1.5, 4001, wm);
    std::vector<double> sv20, sv5;
    for (double w : grid) sv20.push_back(vacuum_noise(w, op20)), sv5.push_back(vacuum_noise(w, op5));
    const auto peaks20 = local_maxima(sv20);
    REQUIRE(peaks20.size() == 2);
    CHECK_THAT(grid[peaks20[0]] / wm, WithinAbs(0.8267, 1e-3));
    CHECK_THAT(grid[peaks20[1]] / wm, WithinAbs(1.1004, 1e-3));
    CHECK(local_maxima(sv5).size() == 1);
}

TEST_CASE("vacuum noise scales with the square of drive power", "[response][property]") {
    // weak drive keeps d(omega) drive-independent to ~1e-5
    const auto a = op_at(1e-9), b = op_at(2e-9);
    for (double x : {0.6, 0.8, 1.2, 1.4}) {
        const double w = x * a.params.mech_freq;
        CHECK_THAT(vacuum_noise(w, b) / vacuum_noise(w, a), WithinRel(4.0, 1e-3));
    }
    const auto g = a.mech_damping / 2.0;
    CHECK_THAT((eit_linewidth(b) - g) / (eit_linewidth(a) - g), WithinRel(2.0, 1e-3));
}

TEST_CASE("thermal bath factor limits", "[response]") {
    constexpr double hbar = PhysConstants::hbar, kB = PhysConstants::k_B;
    const double w = 8.4e5;
    CHECK(thermal_bath_factor(w, 0.0) == 0.0);
    CHECK_THAT(thermal_bath_factor(-w, 0.0), WithinRel(2.0 * w, 1e-15));
    CHECK_THAT(thermal_bath_factor(0.0, 0.2), WithinRel(2.0 * kB * 0.2 / hbar, 1e-15));
    const double nbar = 1.0 / std::expm1(hbar * w / (kB * 0.02));
    CHECK_THAT(thermal_bath_factor(w, 0.02), WithinRel(2.0 * w * nbar, 1e-14));
    CHECK_THAT(thermal_bath_factor(-w, 0.02), WithinRel(2.0 * w * (nbar + 1.0), 1e-14));
    // continuity at omega -> 0
    CHECK_THAT(thermal_bath_factor(1e-3, 0.2), WithinRel(thermal_bath_factor(0.0, 0.2), 1e-6));
    // deep quantum regime: no overflow, asymptotic nbar
    const double cold = hbar * w / (kB * 100.0);
    CHECK(thermal_bath_factor(w, cold) > 0.0);
    CHECK_THAT(thermal_bath_factor(w, cold), WithinRel(2.0 * w * std::exp(-100.0), 1e-12));
    CHECK(thermal_bath_factor(w, hbar * w / (kB * 1000.0)) == 0.0);
}

TEST_CASE("thermal noise", "[response]") {
    const double wm = default_params().mech_freq;
    CHECK(thermal_noise(wm, op_at(5e-6, 0.0)) == 0.0);

    // frozen from an independent numpy evaluation
    CHECK_THAT(thermal_noise(wm, op_at(5e-6)), WithinRel(0.059963180843468515, 1e-6));
    CHECK_THAT(thermal_noise(wm, op_at(20e-6)), WithinRel(0.014991009882879547, 1e-6));
    CHECK_THAT(thermal_noise(wm, op_at(20e-6)) / thermal_noise(wm, op_at(5e-6)), WithinRel(0.25, 0.3));

    const auto hot = op_at(20e-6, 0.2);
    double peak = 0.0;
    for (double w : uniform_grid(0.5, 1.5, 4001, wm)) peak = std::max(peak, thermal_noise(w, hot));
    CHECK_THAT(peak, WithinRel(0.23325469694629883, 2e-3));

    // non-negative on both sides of zero frequency
    for (double x : {-1.5, -1.0, -0.2, 0.0, 0.2}) CHECK(thermal_noise(x * wm, hot) >= 0.0);
}

TEST_CASE("output spectra bookkeeping", "[response]") {
    const auto p = default_params();
    const auto grid = uniform_grid(0.5, 1.5, 801, p.mech_freq);
    const ProbeLine line{p.mech_freq, 0.01 * p.mech_freq};

    SECTION("undriven, zero temperature conserves flux") {
        const auto s = output_spectra(grid, op_at(0.0, 0.0), line);
        for (std::size_t i = 0; i < s.size(); ++i)
            CHECK_THAT(s.Scout[i] + s.Sdout[i], WithinRel(s.Scin[i], 1e-9));
    }
    SECTION("noise terms cancel in the port difference") {
        for (double power : {0.0, 5e-6, 20e-6}) {
            const auto s = output_spectra(grid, op_at(power, 0.2), line);
            for (std::size_t i = 0; i < s.size(); ++i) {
                CHECK_THAT(s.Scout[i] - s.Sdout[i], WithinAbs(s.Scin[i] * (s.R[i] - s.Tx[i]), 1e-12 * (s.Scout[i] + s.Sdout[i])));
                CHECK(s.R[i] >= 0.0);
                CHECK(s.Tx[i] >= 0.0);
                CHECK(s.Sv[i] >= 0.0);
                CHECK(s.St[i] >= 0.0);
            }
        }
    }
    SECTION("router on: little leaves through the right port") {
        const auto s = output_spectra(grid, op_at(5e-6, 0.0), line);
        const std::size_t mid = 400;
        REQUIRE(s.grid[mid] == Catch::Approx(p.mech_freq));
        CHECK(s.Sdout[mid] / s.Scin[mid] < 0.05);
    }
    SECTION("grid validation") {
        CHECK_THROWS_AS(output_spectra(std::vector<double>{}, op_at(0.0), line), InvalidParameter);
        CHECK_THROWS_AS(output_spectra(std::vector<double>{2.0, 1.0}, op_at(0.0), line), InvalidParameter);
        CHECK_THROWS_AS(uniform_grid(0.5, 1.5, 1, p.mech_freq), InvalidParameter);
    }
}

TEST_CASE("analytic and scanned transparency linewidth", "[response]") {
    const double wm = default_params().mech_freq;
    const auto op0 = op_at(0.0);
    CHECK(eit_linewidth(op0) == op0.mech_damping / 2.0);
    CHECK_THAT(eit_linewidth(op_at(5e-6)) / wm, WithinRel(0.04761266736490852, 1e-9));
    CHECK_THAT(eit_linewidth(op_at(20e-6)) / wm, WithinRel(0.19044930582327044, 1e-9));

    // half-depth crossings from scipy brentq on the same T(omega)
    const auto d5 = scan_transparency_dip(op_at(5e-6));
    CHECK_THAT(d5.center / wm, WithinAbs(0.99526, 2e-5));
    CHECK_THAT((wm - d5.left) / wm, WithinAbs(0.044283, 2e-4));
    CHECK_THAT((d5.right - wm) / wm, WithinAbs(0.034846, 2e-4));
    const auto d20 = scan_transparency_dip(op_at(20e-6));
    CHECK_THAT(d20.full_width() / wm, WithinAbs(0.24140, 5e-4));
    CHECK_THROWS_AS(scan_transparency_dip(op0), ContractViolation);
}
