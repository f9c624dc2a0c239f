#pragma once

#include <cmath>
#include <complex>
#include <vector>

#include "rofsim/fft.hpp"
#include "rofsim/optics.hpp"
#include "rofsim/signal.hpp"

namespace rofsim::testing {

/// Complex amplitude of the spectral line at frequency `f` of a periodic
/// sequence (bin-centered tones only): v(t) = sum_k a_k exp(j2pi f_k t).
inline std::complex<double> line_amplitude(std::vector<std::complex<double>> v, double sample_rate, double f) {
    const std::size_t n = v.size();
    fft::forward(v);
    const double df = sample_rate / static_cast<double>(n);
    long long k = std::llround(f / df);
    if (k < 0) k += static_cast<long long>(n);
    return v[static_cast<std::size_t>(k)] / static_cast<double>(n);
}

/// Peak amplitude of a real sinusoid at f (bin-centered).
inline double real_tone_amplitude(const SampledWaveform& w, double f) {
    return 2.0 * std::abs(line_amplitude(w.samples, w.grid.sample_rate, f));
}

inline double db20(double ratio) { return 20.0 * std::log10(ratio); }

}  // namespace rofsim::testing

#include "rofsim/link.hpp"
#include "rofsim/units.hpp"

namespace rofsim::testing {

/// SI gain that brings the downlink RF of the scenarios below to about 0 dBm.
inline constexpr double kSiGainDb = 72.85;

/// Single-tone IF (6 dBm), 17.3 dBm LO, back-to-back, SI delayed by tau1.
inline LinkScenario tone_scenario(double f_if, double f_lo, double tau1) {
    LinkScenario s;
    s.name = "unit-tone";
    s.if_mzm.v_pi = s.lo_mzm.v_pi = s.uplink_mzm.v_pi = 50.0;
    s.if_signal = ToneSpec{tone_amplitude_from_dbm(6.0), f_if, 0.0};
    s.lo_signal = ToneSpec{tone_amplitude_from_dbm(17.3), f_lo, 0.0};
    s.si_path = {kSiGainDb, tau1};
    return s;
}

inline LinkScenario qam_scenario(double f_if, double f_lo, double symbol_rate, double tau1) {
    auto s = tone_scenario(f_if, f_lo, tau1);
    s.name = "unit-qam";
    QamSignalSpec q;
    q.center_frequency = f_if;
    q.symbol_rate = symbol_rate;
    q.power_dbm = 6.0;
    s.if_signal = q;
    s.reseed(7);
    return s;
}

inline ToneSpec soi_tone(const LinkScenario& s, double power_dbm = -22.0) {
    return ToneSpec{tone_amplitude_from_dbm(power_dbm), s.rf_frequency(), 0.4};
}

/// Frequency of the strongest PSD bin in [f_lo, f_hi].
inline double peak_frequency(const SpectrumEstimate& e, double f_lo, double f_hi) {
    double best = -1e300, at = 0.0;
    for (std::size_t i = 0; i < e.freqs.size(); ++i)
        if (e.freqs[i] >= f_lo && e.freqs[i] <= f_hi && e.psd[i] > best) best = e.psd[i], at = e.freqs[i];
    return at;
}

}  // namespace rofsim::testing
