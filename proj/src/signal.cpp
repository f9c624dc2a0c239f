#include "rofsim/signal.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <string>

#include "rofsim/errors.hpp"
#include "rofsim/fft.hpp"
#include "rofsim/units.hpp"

namespace rofsim {
namespace {

// Spectral floor: keeps log10 finite for exactly-zero inputs.
constexpr double kPsdFloorWattsPerHz = 1e-40;

// Raised-cosine skirt width as a fraction of the edge frequency.
constexpr double kSkirtFraction = 0.05;

void drop_imaginary(std::vector<cplx>& v) {
    for (auto& s : v) s = {s.real(), 0.0};
}

double hann(std::size_t k, std::size_t n) {
    // Periodic Hann, the standard choice for spectral averaging.
    return 0.5 - 0.5 * std::cos(kTwoPi * static_cast<double>(k) / static_cast<double>(n));
}

}  // namespace

void TimeGrid::validate() const {
    if (!(sample_rate > 0.0) || !std::isfinite(sample_rate))
        throw ValidationError("time grid: sample_rate must be positive");
    if (n_samples < 2) throw ValidationError("time grid: n_samples must be >= 2");
    if (!std::isfinite(t0)) throw ValidationError("time grid: t0 must be finite");
}

TimeGrid default_grid() { return TimeGrid{64e9, 1'024'000, 0.0}; }

void require_same_grid(const TimeGrid& a, const TimeGrid& b, const char* what) {
    if (!(a == b)) throw GridError(std::string(what) + ": waveforms are on different time grids");
}

SampledWaveform SampledWaveform::zeros(const TimeGrid& grid) {
    grid.validate();
    return SampledWaveform{grid, std::vector<cplx>(grid.n_samples)};
}

bool SampledWaveform::is_real() const {
    return std::all_of(samples.begin(), samples.end(), [](const cplx& v) { return v.imag() == 0.0; });
}

double SampledWaveform::mean_square() const {
    double acc = 0.0;
    for (const auto& v : samples) acc += std::norm(v);
    return samples.empty() ? 0.0 : acc / static_cast<double>(samples.size());
}

double SampledWaveform::power_dbm(double ohms) const {
    return watts_to_dbm(std::max(mean_square() / ohms, 1e-300));
}

SampledWaveform& SampledWaveform::operator+=(const SampledWaveform& other) {
    require_same_grid(grid, other.grid, "waveform sum");
    for (std::size_t k = 0; k < samples.size(); ++k) samples[k] += other.samples[k];
    return *this;
}

SampledWaveform& SampledWaveform::operator-=(const SampledWaveform& other) {
    require_same_grid(grid, other.grid, "waveform difference");
    for (std::size_t k = 0; k < samples.size(); ++k) samples[k] -= other.samples[k];
    return *this;
}

SampledWaveform& SampledWaveform::operator*=(double scale) {
    for (auto& v : samples) v *= scale;
    return *this;
}

SampledWaveform make_tone(const ToneSpec& spec, const TimeGrid& grid) {
    grid.validate();
    if (!(spec.amplitude >= 0.0)) throw ValidationError("tone amplitude must be >= 0");
    if (spec.frequency < 0.0 || spec.frequency >= grid.nyquist())
        throw AliasError("tone at " + std::to_string(spec.frequency) + " Hz is not below Nyquist (" +
                         std::to_string(grid.nyquist()) + " Hz)");
    auto w = SampledWaveform::zeros(grid);
    for (std::size_t k = 0; k < grid.n_samples; ++k) {
        // Reduce the cycle count before multiplying by 2*pi to keep the
        // argument small on long records.
        const double cycles = spec.frequency * grid.time(k);
        const double frac = cycles - std::floor(cycles);
        w.samples[k] = spec.amplitude * std::cos(kTwoPi * frac + spec.phase);
    }
    return w;
}

std::vector<cplx> qam_symbols(const QamSignalSpec& spec, std::size_t count) {
    if (spec.order != 16) throw UnsupportedConstellation("only 16-QAM is supported, got order " +
                                                         std::to_string(spec.order));
    // Gray-coded levels; bits are drawn from the raw engine output so the
    // sequence does not depend on the standard library's distributions.
    static constexpr double kLevels[4] = {-3.0, -1.0, 3.0, 1.0};
    const double norm = 1.0 / std::sqrt(10.0);
    std::mt19937_64 rng(spec.seed);
    std::vector<cplx> out(count);
    for (auto& s : out) {
        const auto bits = rng() >> 60;
        s = cplx(kLevels[bits & 3u], kLevels[(bits >> 2) & 3u]) * norm;
    }
    return out;
}

double rrc_response(double f, double symbol_rate, double rolloff) {
    const double af = std::abs(f);
    const double f1 = 0.5 * (1.0 - rolloff) * symbol_rate;
    const double f2 = 0.5 * (1.0 + rolloff) * symbol_rate;
    if (af <= f1) return 1.0;
    if (af >= f2) return 0.0;
    const double rc = 0.5 * (1.0 + std::cos(kPi * (af - f1) / (f2 - f1)));
    return std::sqrt(rc);
}

namespace {

std::size_t symbol_count(const QamSignalSpec& spec, const TimeGrid& grid) {
    return static_cast<std::size_t>(std::llround(grid.duration() * spec.symbol_rate));
}

void validate_qam(const QamSignalSpec& spec, const TimeGrid& grid) {
    grid.validate();
    if (spec.order != 16) throw UnsupportedConstellation("only 16-QAM is supported, got order " +
                                                         std::to_string(spec.order));
    if (!(spec.symbol_rate > 0.0)) throw ValidationError("QAM symbol_rate must be positive");
    if (!(spec.rolloff > 0.0 && spec.rolloff <= 1.0)) throw ValidationError("QAM rolloff must be in (0, 1]");
    if (spec.center_frequency - spec.half_bandwidth() <= 0.0 ||
        spec.center_frequency + spec.half_bandwidth() >= grid.nyquist())
        throw AliasError("QAM band does not fit inside (0, Nyquist)");
    if (symbol_count(spec, grid) < 64) throw ValidationError("grid too short for 64 QAM symbols");
}

std::size_t wrap_index(long long m, std::size_t n) {
    const auto sn = static_cast<long long>(n);
    return static_cast<std::size_t>(((m % sn) + sn) % sn);
}

struct BasebandBin {
    std::size_t index;  // DFT bin of the positive-frequency image
    double offset;      // Hz relative to the center frequency
};

std::vector<BasebandBin> baseband_bins(const QamSignalSpec& spec, const TimeGrid& grid) {
    const double df = grid.bin_spacing();
    const double hb = spec.half_bandwidth();
    const auto lo = static_cast<std::size_t>(std::ceil((spec.center_frequency - hb) / df));
    const auto hi = static_cast<std::size_t>(std::floor((spec.center_frequency + hb) / df));
    std::vector<BasebandBin> bins;
    for (std::size_t k = lo; k <= hi; ++k)
        bins.push_back({k, static_cast<double>(k) * df - spec.center_frequency});
    return bins;
}

// Spectrum of the periodic symbol train sum_k a_k delta(t - kT) at offset f.
cplx symbol_spectrum(std::span<const cplx> symbols, double f, double symbol_period) {
    const cplx step = std::polar(1.0, -kTwoPi * f * symbol_period);
    cplx rot = 1.0;
    cplx acc = 0.0;
    for (const auto& a : symbols) {
        acc += a * rot;
        rot *= step;
    }
    return acc;
}

}  // namespace

SampledWaveform make_qam(const QamSignalSpec& spec, const TimeGrid& grid) {
    validate_qam(spec, grid);
    const auto symbols = qam_symbols(spec, symbol_count(spec, grid));
    const double period = 1.0 / spec.symbol_rate;

    // Complex baseband envelope synthesized from its Fourier series, then
    // mixed up to the carrier in the time domain so that off-bin centers work.
    const auto bins = baseband_bins(spec, grid);
    std::vector<cplx> envelope(grid.n_samples);
    const std::size_t n = grid.n_samples;
    // The envelope is stored relative to the bin nearest the center, so the
    // mixed-up component for bin k lands exactly on k * df.
    const auto center_bin = static_cast<long long>(std::llround(spec.center_frequency / grid.bin_spacing()));
    for (const auto& b : bins) {
        const std::size_t slot = wrap_index(static_cast<long long>(b.index) - center_bin, n);
        envelope[slot] =
            rrc_response(b.offset, spec.symbol_rate, spec.rolloff) * symbol_spectrum(symbols, b.offset, period);
    }
    fft::inverse(envelope);

    auto w = SampledWaveform::zeros(grid);
    for (std::size_t k = 0; k < n; ++k) {
        const double cycles = static_cast<double>(center_bin) * grid.bin_spacing() * grid.time(k);
        const double frac = cycles - std::floor(cycles);
        w.samples[k] = (envelope[k] * std::polar(1.0, kTwoPi * frac)).real();
    }
    const double target = kReferenceOhms * dbm_to_watts(spec.power_dbm);
    const double ms = w.mean_square();
    if (ms > 0.0) w *= std::sqrt(target / ms);
    return w;
}

SpectrumEstimate welch_psd(const SampledWaveform& w, double rbw, double ohms, bool two_sided) {
    w.grid.validate();
    const double fs = w.grid.sample_rate;
    const std::size_t n = w.size();
    if (!(rbw > 0.0) || rbw < fs / static_cast<double>(n) * (1.0 - 1e-12))
        throw ResolutionError("rbw " + std::to_string(rbw) + " Hz is finer than the record allows (" +
                              std::to_string(fs / static_cast<double>(n)) + " Hz)");
    std::size_t nseg = std::min<std::size_t>(n, static_cast<std::size_t>(std::llround(fs / rbw)));
    nseg = std::max<std::size_t>(nseg, 2);
    const std::size_t step = std::max<std::size_t>(nseg / 2, 1);
    const std::size_t segments = (n - nseg) / step + 1;

    std::vector<double> window(nseg);
    double wsum2 = 0.0;
    for (std::size_t k = 0; k < nseg; ++k) {
        window[k] = hann(k, nseg);
        wsum2 += window[k] * window[k];
    }

    std::vector<double> acc(nseg, 0.0);
    std::vector<cplx> buf(nseg);
    for (std::size_t s = 0; s < segments; ++s) {
        const std::size_t off = s * step;
        for (std::size_t k = 0; k < nseg; ++k) buf[k] = w.samples[off + k] * window[k];
        fft::forward(buf);
        for (std::size_t k = 0; k < nseg; ++k) acc[k] += std::norm(buf[k]);
    }
    // Density in W/Hz such that sum(psd) * df equals the mean power.
    const double scale = 1.0 / (static_cast<double>(segments) * fs * wsum2 * ohms);
    const double df = fs / static_cast<double>(nseg);

    SpectrumEstimate out;
    out.rbw = df;
    auto push = [&](double f, double watts_per_hz) {
        out.freqs.push_back(f);
        out.psd.push_back(watts_to_dbm(std::max(watts_per_hz, kPsdFloorWattsPerHz)));
    };
    if (w.is_real() && !two_sided) {
        for (std::size_t k = 0; k <= nseg / 2; ++k) {
            const bool edge = k == 0 || (nseg % 2 == 0 && k == nseg / 2);
            push(static_cast<double>(k) * df, acc[k] * scale * (edge ? 1.0 : 2.0));
        }
    } else {
        const std::size_t half = nseg / 2;
        for (std::size_t i = 0; i < nseg; ++i) {
            const std::size_t k = (i + nseg - half) % nseg;
            const double f = (static_cast<double>(i) - static_cast<double>(half)) * df;
            push(f, acc[k] * scale);
        }
    }
    return out;
}

double band_power(const SpectrumEstimate& s, double f_lo, double f_hi) {
    if (!(f_lo < f_hi)) throw RangeError("band_power: f_lo must be below f_hi");
    if (s.freqs.empty() || f_lo < s.freqs.front() - 0.5 * s.rbw || f_hi > s.freqs.back() + 0.5 * s.rbw)
        throw RangeError("band_power: band [" + std::to_string(f_lo) + ", " + std::to_string(f_hi) +
                         "] Hz lies outside the spectrum");
    double watts = 0.0;
    for (std::size_t k = 0; k < s.freqs.size(); ++k) {
        if (s.freqs[k] < f_lo || s.freqs[k] > f_hi) continue;
        watts += dbm_to_watts(s.psd[k]) * s.rbw;
    }
    return watts_to_dbm(std::max(watts, 1e-300));
}

double cancellation_depth(const SampledWaveform& without_sic, const SampledWaveform& with_sic,
                          double f_lo, double f_hi, double rbw) {
    require_same_grid(without_sic.grid, with_sic.grid, "cancellation_depth");
    const double p_without = band_power(welch_psd(without_sic, rbw), f_lo, f_hi);
    const double p_with = band_power(welch_psd(with_sic, rbw), f_lo, f_hi);
    return p_without - p_with;
}

double filter_response(FilterKind kind, std::span<const double> edges, double f) {
    const double af = std::abs(f);
    auto skirt = [](double distance, double width) {
        if (distance <= 0.0) return 1.0;
        if (distance >= width) return 0.0;
        return 0.5 * (1.0 + std::cos(kPi * distance / width));
    };
    if (kind == FilterKind::lowpass) {
        const double fc = edges[0];
        return skirt(af - fc, kSkirtFraction * fc);
    }
    const double lo = edges[0];
    const double hi = edges[1];
    if (af < lo) return skirt(lo - af, kSkirtFraction * lo);
    return skirt(af - hi, kSkirtFraction * hi);
}

SampledWaveform filter_band(const SampledWaveform& w, FilterKind kind, std::span<const double> edges) {
    const std::size_t want = kind == FilterKind::lowpass ? 1 : 2;
    if (edges.size() != want)
        throw FilterSpecError(kind == FilterKind::lowpass ? "lowpass takes exactly one edge"
                                                          : "bandpass takes exactly two edges");
    for (double e : edges)
        if (!(e > 0.0) || e >= w.grid.nyquist()) throw FilterSpecError("filter edge must lie in (0, Nyquist)");
    if (kind == FilterKind::bandpass && !(edges[0] < edges[1]))
        throw FilterSpecError("bandpass edges must be increasing");

    const bool real = w.is_real();
    SampledWaveform out = w;
    fft::apply_transfer(out.samples, w.grid.sample_rate,
                        [&](double f) { return cplx(filter_response(kind, edges, f), 0.0); });
    if (real) drop_imaginary(out.samples);
    return out;
}

SampledWaveform delay(const SampledWaveform& w, double tau) {
    if (tau == 0.0) return w;
    const bool real = w.is_real();
    SampledWaveform out = w;
    fft::apply_transfer(out.samples, w.grid.sample_rate,
                        [&](double f) { return std::polar(1.0, -kTwoPi * f * tau); });
    if (real) drop_imaginary(out.samples);
    return out;
}

SampledWaveform phase_shift(const SampledWaveform& w, double phase) {
    if (phase == 0.0) return w;
    const bool real = w.is_real();
    SampledWaveform out = w;
    fft::apply_transfer(out.samples, w.grid.sample_rate, [&](double f) {
        if (f > 0.0) return std::polar(1.0, phase);
        if (f < 0.0) return std::polar(1.0, -phase);
        return cplx(std::cos(phase), 0.0);
    });
    if (real) drop_imaginary(out.samples);
    return out;
}

double demodulate_evm(const SampledWaveform& w, const QamSignalSpec& spec) {
    validate_qam(spec, w.grid);
    const TimeGrid& grid = w.grid;
    const std::size_t n = grid.n_samples;
    const std::size_t count = symbol_count(spec, grid);
    const auto symbols = qam_symbols(spec, count);
    const double period = 1.0 / spec.symbol_rate;

    std::vector<cplx> spectrum = w.samples;
    fft::forward(spectrum);

    // Matched-filtered received and reference spectra over the signal band.
    const auto bins = baseband_bins(spec, grid);
    std::vector<cplx> rx(bins.size());
    std::vector<cplx> ref(bins.size());
    double rx_energy = 0.0;
    double ref_energy = 0.0;
    for (std::size_t i = 0; i < bins.size(); ++i) {
        const double p = rrc_response(bins[i].offset, spec.symbol_rate, spec.rolloff);
        rx[i] = spectrum[bins[i].index] * p;
        ref[i] = p * p * symbol_spectrum(symbols, bins[i].offset, period);
        rx_energy += std::norm(rx[i]);
        ref_energy += std::norm(ref[i]);
    }
    if (rx_energy <= 0.0) throw LockError("no energy at the QAM carrier");

    // Data-aided timing: cross-correlation peak between received and reference.
    std::vector<cplx> xc(n);
    const auto center_bin = static_cast<long long>(std::llround(spec.center_frequency / grid.bin_spacing()));
    for (std::size_t i = 0; i < bins.size(); ++i) {
        xc[wrap_index(static_cast<long long>(bins[i].index) - center_bin, n)] = rx[i] * std::conj(ref[i]);
    }
    fft::inverse(xc);
    std::size_t best = 0;
    for (std::size_t k = 1; k < n; ++k)
        if (std::abs(xc[k]) > std::abs(xc[best])) best = k;
    const double peak = std::abs(xc[best]) * static_cast<double>(n);
    if (peak < 0.3 * std::sqrt(rx_energy * ref_energy)) throw LockError("QAM signal not found at the carrier");
    double lag = static_cast<double>(best) / grid.sample_rate;
    if (best > n / 2) lag -= grid.duration();

    // Symbol-spaced samples of the matched-filter output.
    std::vector<cplx> y(count);
    for (std::size_t k = 0; k < count; ++k) {
        const double t = static_cast<double>(k) * period + lag;
        cplx acc = 0.0;
        for (std::size_t i = 0; i < bins.size(); ++i) acc += rx[i] * std::polar(1.0, kTwoPi * bins[i].offset * t);
        y[k] = acc;
    }
    cplx num = 0.0;
    double den = 0.0;
    for (std::size_t k = 0; k < count; ++k) {
        num += y[k] * std::conj(symbols[k]);
        den += std::norm(symbols[k]);
    }
    const cplx gain = num / den;
    double err = 0.0;
    for (std::size_t k = 0; k < count; ++k) err += std::norm(y[k] - gain * symbols[k]);
    return 100.0 * std::sqrt(err / (std::norm(gain) * den));
}

}  // namespace rofsim
