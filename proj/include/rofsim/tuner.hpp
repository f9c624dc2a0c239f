#pragma once

#include <cstddef>
#include <vector>

#include "rofsim/link.hpp"
#include "rofsim/units.hpp"

namespace rofsim {

struct TuneReport {
    SicSettings seed;
    SicSettings refined;
    double depth_seed = 0.0;     // dB, measured with run_full
    double depth_refined = 0.0;  // dB
    int iterations = 0;          // completed sweeps
};

/// Modulation indices of the IF, LO and uplink modulators for a scenario.
/// The uplink index uses the RMS-equivalent amplitude of the received SI.
struct ModulationIndices {
    double m1 = 0.0;
    double m2 = 0.0;
    double m3 = 0.0;
};

/// Reference-arm power ratio that matches the down-converted SI, to first
/// order in the Bessel expansion:
///   alpha = sqrt2 J0(m2) J0(m3) J1(m2) J1(m3) / (2 J0(m1) J1(m1)).
double analytic_alpha(double m1, double m2, double m3);

/// Delay that aligns the reference arm with the SI at the IF:
///   tau2 = omega_s tau1 / omega_if - 5 pi / (4 omega_if),
/// moved by whole IF periods into [0, max_delay). With `wideband` the
/// 5 pi / 4 term is left to an explicit RF phase shifter.
double analytic_tau2(double omega_if, double omega_s, double tau1, double max_delay, bool wideband = false);

ModulationIndices modulation_indices(const LinkScenario& s, const SampledWaveform& downlink_rf);

/// Analytic (alpha, tau2) for the scenario, with the modulator insertion
/// losses folded into alpha. Wideband mode also sets the RF phase shift.
SicSettings analytic_settings(const LinkScenario& s, bool wideband = false);

/// Phase shift the wideband mode applies to the received RF.
inline constexpr double kWidebandPhaseComp = -5.0 * kPi / 4.0;

/// Residual SI power at the BPD as a function of (alpha, tau2), evaluated
/// from cached rail intensities at the spectral bins of the SI band.
/// Exact for signals periodic on the grid.
class ResidualEvaluator {
public:
    ResidualEvaluator(const LinkScenario& s, const SicSettings& sic);

    /// Residual SI band power relative to the uncancelled SI, in dB (<= 0
    /// means some cancellation). Equals minus the cancellation depth.
    double residual_db(double alpha, double tau2) const;
    /// Amplitude-matching alpha, independent of tau2.
    double magnitude_match_alpha() const;
    double max_delay() const { return max_delay_; }

private:
    std::vector<double> freqs_;
    std::vector<cplx> ref_;
    std::vector<cplx> sig_;
    double sig_power_ = 0.0;
    double max_delay_ = 0.0;
};

struct RefineOptions {
    double tau_tolerance = 0.01e-12;  // s
    double alpha_tolerance = 1e-5;
    double stop_improvement_db = 0.05;
    int max_sweeps = 50;
    std::size_t coarse_points = 64;  // pre-scan of the delay window
};

/// Alternating golden-section search on tau2 (+-1 IF period around the
/// seed) and alpha (x[0.5, 2] clipped to [0, 1]).
TuneReport refine(const LinkScenario& s, const SicSettings& seed, const RefineOptions& opt = {});

/// Scans tau2 over one IF period at the analytic alpha and returns
/// wrap(omega_if tau2* - omega_s tau1), the phase constant of the link.
double verify_phase_constant(const LinkScenario& s);

}  // namespace rofsim
