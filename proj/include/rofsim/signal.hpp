#pragma once

#include <complex>
#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace rofsim {

using cplx = std::complex<double>;

/// Uniform sampling grid shared by every waveform of one experiment.
struct TimeGrid {
    double sample_rate = 64e9;        // Hz
    std::size_t n_samples = 1'024'000;
    double t0 = 0.0;                  // s

    void validate() const;
    double dt() const { return 1.0 / sample_rate; }
    double time(std::size_t k) const { return t0 + static_cast<double>(k) / sample_rate; }
    double duration() const { return static_cast<double>(n_samples) / sample_rate; }
    double nyquist() const { return 0.5 * sample_rate; }
    double bin_spacing() const { return sample_rate / static_cast<double>(n_samples); }

    friend bool operator==(const TimeGrid&, const TimeGrid&) = default;
};

/// 64 GS/s over 16 us. The record length is a whole number of 62.5 kHz
/// periods, so every 100 MHz-multiple tone and every 10/20 MBaud symbol
/// stream is exactly periodic on the grid.
TimeGrid default_grid();

/// Throws GridError unless both grids are identical.
void require_same_grid(const TimeGrid& a, const TimeGrid& b, const char* what);

/// Electrical waveform in volts (or amperes for raw photocurrent).
/// Real signals carry an exact zero imaginary part.
struct SampledWaveform {
    TimeGrid grid;
    std::vector<cplx> samples;

    static SampledWaveform zeros(const TimeGrid& grid);

    std::size_t size() const { return samples.size(); }
    bool is_real() const;
    /// Mean of |v|^2.
    double mean_square() const;
    /// Mean power in dBm delivered into `ohms`.
    double power_dbm(double ohms = 50.0) const;

    SampledWaveform& operator+=(const SampledWaveform& other);
    SampledWaveform& operator-=(const SampledWaveform& other);
    SampledWaveform& operator*=(double scale);

    friend SampledWaveform operator+(SampledWaveform a, const SampledWaveform& b) { return a += b; }
    friend SampledWaveform operator-(SampledWaveform a, const SampledWaveform& b) { return a -= b; }
    friend SampledWaveform operator*(SampledWaveform a, double s) { return a *= s; }
    friend SampledWaveform operator*(double s, SampledWaveform a) { return a *= s; }
};

struct ToneSpec {
    double amplitude = 0.0;  // V peak
    double frequency = 0.0;  // Hz
    double phase = 0.0;      // rad

    friend bool operator==(const ToneSpec&, const ToneSpec&) = default;
};

struct QamSignalSpec {
    int order = 16;
    double symbol_rate = 10e6;       // baud
    double center_frequency = 2e9;   // Hz
    double power_dbm = 0.0;          // into 50 ohm
    double rolloff = 0.35;
    std::uint64_t seed = 1;

    /// Half of the occupied RRC bandwidth, (1 + rolloff) * symbol_rate / 2.
    double half_bandwidth() const { return 0.5 * (1.0 + rolloff) * symbol_rate; }

    friend bool operator==(const QamSignalSpec&, const QamSignalSpec&) = default;
};

/// Power spectral density estimate. `rbw` is the bin spacing of the
/// averaged periodogram; `psd` is in dBm/Hz.
struct SpectrumEstimate {
    std::vector<double> freqs;
    std::vector<double> psd;
    double rbw = 0.0;
};

enum class FilterKind { lowpass, bandpass };

SampledWaveform make_tone(const ToneSpec& spec, const TimeGrid& grid);

/// Known 16-QAM symbol sequence for `spec`, unit average energy.
std::vector<cplx> qam_symbols(const QamSignalSpec& spec, std::size_t count);

/// Square-root raised-cosine amplitude response (peak 1) at baseband offset f.
double rrc_response(double f, double symbol_rate, double rolloff);

SampledWaveform make_qam(const QamSignalSpec& spec, const TimeGrid& grid);

/// Hann-windowed, 50 % overlapped averaged periodogram with segment
/// length sample_rate / rbw. Real input gives a one-sided spectrum over
/// [0, fs/2]; complex input, or any input with `two_sided`, a two-sided
/// one over [-fs/2, fs/2).
SpectrumEstimate welch_psd(const SampledWaveform& w, double rbw, double ohms = 50.0, bool two_sided = false);

/// Integrated power over [f_lo, f_hi] in dBm.
double band_power(const SpectrumEstimate& s, double f_lo, double f_hi);

/// band_power(without) - band_power(with) over `band`, both estimated at `rbw`.
double cancellation_depth(const SampledWaveform& without_sic, const SampledWaveform& with_sic,
                          double f_lo, double f_hi, double rbw);

/// Zero-phase frequency-domain filter. Lowpass takes one edge, bandpass two.
/// The passband is flat to each edge and rolls off with a raised-cosine
/// skirt 5 % of the edge frequency wide outside the passband.
SampledWaveform filter_band(const SampledWaveform& w, FilterKind kind, std::span<const double> edges);

/// Magnitude response of the filter_band filter at |f|.
double filter_response(FilterKind kind, std::span<const double> edges, double f);

/// RMS EVM in percent of a QAM signal at spec.center_frequency, using the
/// known symbols for timing and a single complex gain.
double demodulate_evm(const SampledWaveform& w, const QamSignalSpec& spec);

/// Circular delay by `tau` seconds applied as a linear spectral phase.
SampledWaveform delay(const SampledWaveform& w, double tau);

/// Shift the phase of every spectral component of a real waveform by
/// `phase` (positive frequencies by +phase, negative by -phase).
SampledWaveform phase_shift(const SampledWaveform& w, double phase);

}  // namespace rofsim
