#include <cmath>
#include <limits>

#include "doctest.h"
#include "rofsim/errors.hpp"
#include "rofsim/tuner.hpp"
#include "test_helpers.hpp"

using namespace rofsim;
using namespace rofsim::testing;

namespace {

// Power series of J_n, independent of the standard library's Bessel code.
double bessel_series(int n, double x) {
    double term = 1.0;
    for (int k = 1; k <= n; ++k) term *= x / (2.0 * k);
    double sum = term;
    for (int k = 1; k < 40; ++k) {
        term *= -(x * x / 4.0) / (k * (k + n));
        sum += term;
    }
    return sum;
}

double alpha_oracle(double m1, double m2, double m3) {
    return std::sqrt(2.0) * bessel_series(0, m2) * bessel_series(0, m3) * bessel_series(1, m2) * bessel_series(1, m3) /
           (2.0 * bessel_series(0, m1) * bessel_series(1, m1));
}

double depth(const LinkScenario& s, const SicSettings& sic) { return run_full(s, sic).metrics.depth_db; }

double phase_error(double got, double want) { return std::abs(wrap_phase(got - want)); }

}  // namespace

TEST_CASE("analytic_alpha") {
    CHECK(analytic_alpha(0.2, 0.2, 0.2) == doctest::Approx(0.0697).epsilon(1e-3));
    for (double m1 : {0.05, 0.2, 0.9})
        for (double m2 : {0.1, 0.4})
            for (double m3 : {0.01, 0.3}) CHECK(analytic_alpha(m1, m2, m3) == doctest::Approx(alpha_oracle(m1, m2, m3)));

    CHECK(analytic_alpha(0.2, 0.0, 0.2) == 0.0);
    CHECK(analytic_alpha(0.2, 0.2, 0.0) == 0.0);
    const double m = 1e-3;
    CHECK(analytic_alpha(m, m, m) == doctest::Approx(std::sqrt(2.0) * m / 4.0).epsilon(1e-5));

    CHECK_THROWS_AS(analytic_alpha(0.0, 0.2, 0.2), DivisionByZero);
    CHECK_THROWS_AS(analytic_alpha(1e-4, 1.0, 1.0), AttenuatorInfeasible);
    CHECK_THROWS_AS(analytic_alpha(-0.1, 0.2, 0.2), RangeError);
}

TEST_CASE("analytic_tau2") {
    const double w_if = kTwoPi * 2e9, w_s = kTwoPi * 8e9, max = 4e-6;
    CHECK(analytic_tau2(w_if, w_s, 10e-9, max) == doctest::Approx(39.6875e-9).epsilon(1e-12));
    CHECK(analytic_tau2(w_if, w_s, 0.0, max) == doctest::Approx(0.1875e-9).epsilon(1e-12));
    CHECK(analytic_tau2(w_if, w_s, 10e-9, max, true) == doctest::Approx(40e-9).epsilon(1e-12));
    // Too long for the record: moved down by whole IF periods.
    const double t = analytic_tau2(w_if, w_s, 2e-6, max);
    CHECK(t < max);
    const double periods = (4.0 * 2e-6 - 0.3125e-9 - t) * 2e9;
    CHECK(periods == doctest::Approx(std::round(periods)).epsilon(1e-6));
    CHECK_THROWS_AS(analytic_tau2(0.0, w_s, 1e-9, max), RangeError);
}

TEST_CASE("ResidualEvaluator agrees with the full simulation") {
    auto s = tone_scenario(2e9, 6e9, 3e-9);
    const auto a = analytic_settings(s);
    const ResidualEvaluator ev(s, a);
    for (const SicSettings& sic : {a, SicSettings{a.alpha * 1.05, a.tau2, std::nullopt},
                                   SicSettings{a.alpha, a.tau2 + 3e-12, std::nullopt},
                                   SicSettings{a.alpha * 0.7, a.tau2 + 100e-12, std::nullopt}}) {
        CAPTURE(sic.alpha);
        CAPTURE(sic.tau2);
        CHECK(-ev.residual_db(sic.alpha, sic.tau2) == doctest::Approx(depth(s, sic)).epsilon(0.01));
    }
}

TEST_CASE("analytic settings match a brute-force grid scan") {
    // Small indices so the first-order formula holds to well under the grid step.
    auto s = tone_scenario(2.1e9, 5e9, 2e-9);
    const auto a = analytic_settings(s);
    const ResidualEvaluator ev(s, a);
    constexpr double kAlphaStep = 0.0025;  // relative
    constexpr double kTauStep = 0.5e-12;
    double best = std::numeric_limits<double>::infinity(), best_alpha = 0.0, best_tau = 0.0;
    for (int i = -20; i <= 20; ++i) {
        const double alpha = a.alpha * (1.0 + kAlphaStep * i);
        for (int j = -100; j <= 100; ++j) {
            const double tau = a.tau2 + kTauStep * j;
            const double r = ev.residual_db(alpha, tau);
            if (r < best) best = r, best_alpha = alpha, best_tau = tau;
        }
    }
    CHECK(std::abs(best_alpha / a.alpha - 1.0) <= 2 * kAlphaStep);
    CHECK(std::abs(best_tau - a.tau2) <= 2 * kTauStep);
}

TEST_CASE("analytic seed and refine on single tones") {
    for (double f_lo : {5e9, 6e9}) {
        CAPTURE(f_lo);
        auto s = tone_scenario(2e9, f_lo, 3e-9);
        const auto report = refine(s, analytic_settings(s));
        CHECK(report.depth_seed >= 35.0);
        CHECK(report.depth_refined >= 50.0);
        CHECK(report.depth_refined >= report.depth_seed - 0.1);
    }
}

TEST_CASE("refine from an optimal seed stays put") {
    auto s = tone_scenario(2e9, 5e9, 1e-9);
    const auto first = refine(s, analytic_settings(s));
    const auto again = refine(s, first.refined);
    CHECK(again.iterations <= 2);
    CHECK(std::abs(again.refined.tau2 - first.refined.tau2) <= 0.01e-12);
    CHECK(std::abs(again.refined.alpha - first.refined.alpha) <= 1e-5);
}

TEST_CASE("refine from a zero alpha seed") {
    auto s = qam_scenario(2e9, 6e9, 10e6, 0.8e-9);
    const auto analytic = analytic_settings(s);
    const auto from_analytic = refine(s, analytic);
    const auto from_zero = refine(s, {0.0, analytic.tau2, std::nullopt});
    CHECK(from_zero.depth_seed == doctest::Approx(0.0).epsilon(1e-9).scale(1.0));
    CHECK(std::abs(from_zero.depth_refined - from_analytic.depth_refined) < 1.0);
    CHECK(from_analytic.depth_refined >= from_analytic.depth_seed - 0.1);
}

TEST_CASE("alpha scales with the SI drive") {
    auto s = tone_scenario(2e9, 5e9, 3e-9);
    const double base = depth(s, analytic_settings(s));
    auto louder = s;
    louder.si_path.gain_db += 6.0206;
    const double rescaled = depth(louder, analytic_settings(louder));
    CHECK(std::abs(rescaled - base) < 1.0);
    // Keeping the old alpha instead leaves the SI half-cancelled.
    CHECK(depth(louder, analytic_settings(s)) < base - 20.0);
}

TEST_CASE("depth is periodic in tau2 with the IF period") {
    auto s = tone_scenario(2e9, 6e9, 3e-9);
    const auto a = analytic_settings(s);
    const double period = 1.0 / s.if_frequency();
    for (double offset : {0.0, 20e-12, 0.2e-9}) {
        const double d0 = depth(s, {a.alpha, a.tau2 + offset, std::nullopt});
        const double d1 = depth(s, {a.alpha, a.tau2 + offset + period, std::nullopt});
        CHECK(std::abs(d0 - d1) < 0.2);
    }
}

TEST_CASE("verify_phase_constant") {
    const double expected = -5.0 * kPi / 4.0;
    const double phi = verify_phase_constant(tone_scenario(2e9, 6e9, 3e-9));
    CHECK(phase_error(phi, expected) < 0.02);
    for (double tau1 : {1e-9, 7e-9}) CHECK(phase_error(verify_phase_constant(tone_scenario(2e9, 6e9, tau1)), phi) < 0.02);
    CHECK(phase_error(verify_phase_constant(tone_scenario(2e9, 5e9, 3e-9)), phi) < 0.02);

    auto dark = tone_scenario(2e9, 6e9, 3e-9);
    dark.si_path.gain_db = -std::numeric_limits<double>::infinity();
    CHECK_THROWS_AS(verify_phase_constant(dark), DegenerateScan);
    CHECK_THROWS_AS(verify_phase_constant(qam_scenario(2e9, 6e9, 10e6, 1e-9)), ValidationError);
}

TEST_CASE("wideband compensation") {
    SUBCASE("the phase shifter and the delay formula agree when the SI path has no delay") {
        auto s = qam_scenario(2e9, 6e9, 20e6, 0.0);
        const auto w = analytic_settings(s, true);
        REQUIRE(w.rf_phase_comp.has_value());
        CHECK(*w.rf_phase_comp == doctest::Approx(kWidebandPhaseComp));
        CHECK(w.tau2 == 0.0);
        CHECK(depth(s, w) >= 40.0);
    }
    SUBCASE("matching the envelope delay and moving the LO phase into the shifter cancels at any delay") {
        const double tau1 = 0.8e-9;
        auto s = qam_scenario(2e9, 6e9, 20e6, tau1);
        const auto a = analytic_settings(s);
        const SicSettings matched{a.alpha, tau1, kTwoPi * s.lo_frequency() * tau1 + kWidebandPhaseComp};
        CHECK(depth(s, matched) >= 40.0);
    }
}
