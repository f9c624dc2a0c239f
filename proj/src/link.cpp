#include "rofsim/link.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "rofsim/errors.hpp"
#include "rofsim/units.hpp"

namespace rofsim {

namespace {

constexpr double kFrequencyMatchHz = 1.0;

template <class... F>
struct overloaded : F... {
    using F::operator()...;
};
template <class... F>
overloaded(F...) -> overloaded<F...>;

[[noreturn]] void fail_range(const std::string& key, const std::string& why) {
    throw RangeError(key + ": " + why);
}

void require_positive(double v, const std::string& key) {
    if (!(v > 0.0) || !std::isfinite(v)) fail_range(key, "must be positive and finite");
}

void require_non_negative(double v, const std::string& key) {
    if (!(v >= 0.0) || !std::isfinite(v)) fail_range(key, "must be non-negative and finite");
}

void require_below_nyquist(double f, const TimeGrid& g, const std::string& key) {
    if (!(f < g.nyquist()))
        throw AliasError(key + ": " + std::to_string(f) + " Hz is not below Nyquist " + std::to_string(g.nyquist()) + " Hz");
}

void validate_signal(const SignalSpec& sig, const TimeGrid& g, const std::string& key) {
    std::visit(overloaded{
                   [&](const ToneSpec& t) {
                       require_positive(t.frequency, key + ".frequency_ghz");
                       require_non_negative(t.amplitude, key + ".power_dbm");
                       if (!std::isfinite(t.phase)) fail_range(key + ".phase_rad", "must be finite");
                       require_below_nyquist(t.frequency, g, key + ".frequency_ghz");
                   },
                   [&](const QamSignalSpec& q) {
                       if (q.order != 16) throw UnsupportedConstellation(key + ": only 16-QAM is supported");
                       require_positive(q.center_frequency, key + ".frequency_ghz");
                       require_positive(q.symbol_rate, key + ".symbol_rate_mbaud");
                       if (!(q.rolloff >= 0.0 && q.rolloff <= 1.0)) fail_range(key + ".rolloff", "must lie in [0, 1]");
                       if (!std::isfinite(q.power_dbm)) fail_range(key + ".power_dbm", "must be finite");
                       require_below_nyquist(q.center_frequency + q.half_bandwidth(), g, key + ".frequency_ghz");
                       if (q.center_frequency <= q.half_bandwidth())
                           fail_range(key + ".symbol_rate_mbaud", "occupied band reaches DC");
                   },
               },
               sig);
}

void validate_modulator(const ModulatorParams& m, const std::string& key) {
    require_positive(m.v_pi, key + ".v_pi_v");
    require_non_negative(m.insertion_loss_db, key + ".insertion_loss_db");
}

void validate_fiber(const FiberParams& f, const std::string& key) {
    require_non_negative(f.length_km, key + ".length_km");
    if (!std::isfinite(f.dispersion_ps_nm_km)) fail_range(key + ".dispersion_ps_nm_km", "must be finite");
    require_non_negative(f.attenuation_db_km, key + ".attenuation_db_km");
}

void require_delay_in_range(double tau, const TimeGrid& g, const std::string& key) {
    if (!(tau >= 0.0) || !std::isfinite(tau)) fail_range(key, "must be non-negative and finite");
    if (!(tau < g.duration() / 4.0))
        throw DelayRangeError(key + ": " + std::to_string(tau) + " s is not below a quarter of the record (" +
                              std::to_string(g.duration() / 4.0) + " s)");
}

FiberParams at_wavelength(FiberParams f, double wavelength_nm) {
    f.reference_wavelength_nm = wavelength_nm;
    return f;
}

std::array<double, 2> band_around(double center, double half) { return {center - half, center + half}; }

SampledWaveform to_volts(SampledWaveform current, double ohms) { return current *= ohms; }

}  // namespace

double signal_frequency(const SignalSpec& s) {
    return std::visit(overloaded{[](const ToneSpec& t) { return t.frequency; },
                                 [](const QamSignalSpec& q) { return q.center_frequency; }},
                      s);
}

double signal_power_dbm(const SignalSpec& s) {
    return std::visit(
        overloaded{[](const ToneSpec& t) { return watts_to_dbm(t.amplitude * t.amplitude / (2.0 * kReferenceOhms)); },
                   [](const QamSignalSpec& q) { return q.power_dbm; }},
        s);
}

double signal_half_bandwidth(const SignalSpec& s, double tone_half_width) {
    return std::visit(overloaded{[&](const ToneSpec&) { return tone_half_width; },
                                 [&](const QamSignalSpec& q) { return std::max(tone_half_width, q.half_bandwidth()); }},
                      s);
}

SampledWaveform make_signal(const SignalSpec& s, const TimeGrid& grid) {
    return std::visit(overloaded{[&](const ToneSpec& t) { return make_tone(t, grid); },
                                 [&](const QamSignalSpec& q) { return make_qam(q, grid); }},
                      s);
}

std::array<double, 2> LinkScenario::si_band() const {
    return band_around(if_frequency(), signal_half_bandwidth(if_signal, 3.0 * rbw));
}

std::array<double, 2> LinkScenario::soi_band() const {
    if (!soi) return si_band();
    return band_around(if_frequency(), signal_half_bandwidth(soi->signal, 3.0 * rbw));
}

void LinkScenario::reseed(std::uint64_t new_seed) {
    seed = new_seed;
    if (auto* q = std::get_if<QamSignalSpec>(&if_signal)) q->seed = new_seed;
    if (soi)
        if (auto* q = std::get_if<QamSignalSpec>(&soi->signal)) q->seed = new_seed + 1;
}

void LinkScenario::validate() const {
    grid.validate();
    require_positive(rbw, "grid.rbw_khz");
    if (rbw < grid.bin_spacing())
        throw ResolutionError("grid.rbw_khz: " + std::to_string(rbw) + " Hz is finer than the record allows (" +
                              std::to_string(grid.bin_spacing()) + " Hz)");

    if (std::isnan(laser.power_dbm) || laser.power_dbm == std::numeric_limits<double>::infinity())
        fail_range("laser.power_dbm", "must be finite or -inf");
    require_positive(laser.wavelength_nm, "laser.wavelength_nm");

    validate_signal(if_signal, grid, "if_signal");
    validate_signal(SignalSpec{lo_signal}, grid, "lo_signal");
    require_below_nyquist(rf_frequency(), grid, "lo_signal.frequency_ghz");

    validate_modulator(if_mzm, "modulators.if_mzm");
    validate_modulator(lo_mzm, "modulators.lo_mzm");
    validate_modulator(uplink_mzm, "modulators.uplink_mzm");
    if (!std::isfinite(edfa_gain_db)) fail_range("edfa.gain_db", "must be finite");
    validate_fiber(downlink_fiber, "downlink_fiber");
    validate_fiber(uplink_fiber, "uplink_fiber");

    if (std::isnan(si_path.gain_db) || si_path.gain_db == std::numeric_limits<double>::infinity())
        fail_range("si_path.gain_db", "must be finite or -inf");
    require_delay_in_range(si_path.delay, grid, "si_path.delay_ns");

    if (soi) {
        validate_signal(soi->signal, grid, "soi");
        if (std::abs(signal_frequency(soi->signal) - rf_frequency()) > kFrequencyMatchHz)
            fail_range("soi", "must sit at the transmit frequency f_IF + f_LO");
        require_delay_in_range(soi->arrival_delay, grid, "soi.arrival_delay_ns");
    }

    if (!(bpf[0] > 0.0 && bpf[0] < bpf[1] && bpf[1] < grid.nyquist()))
        throw FilterSpecError("bpf_ghz: edges must satisfy 0 < low < high < Nyquist");
    if (!(rf_frequency() > bpf[0] && rf_frequency() < bpf[1]))
        throw FilterSpecError("bpf_ghz: f_IF + f_LO = " + std::to_string(rf_frequency()) + " Hz is outside the passband");
    if (!(lpf > 0.0 && lpf < grid.nyquist())) throw FilterSpecError("lpf_ghz: must lie in (0, Nyquist)");
    if (!(si_band()[1] < lpf)) throw FilterSpecError("lpf_ghz: the IF band is not inside the passband");

    require_positive(responsivity, "responsivity_a_w");
    require_positive(load_ohms, "load_ohms");
}

Downlink run_downlink(const LinkScenario& s) {
    s.validate();
    const auto cw = laser_cw(s.laser.power_dbm, s.carrier_frequency(), Rail::x, s.grid);
    Downlink out;
    out.dp_bpsk_out = dp_bpsk_modulate(cw, make_signal(s.if_signal, s.grid), make_tone(s.lo_signal, s.grid), s.if_mzm,
                                       s.lo_mzm);
    const auto launched = amplify(out.dp_bpsk_out, s.edfa_gain_db);
    const auto at_ru = fiber_propagate(launched, at_wavelength(s.downlink_fiber, s.laser.wavelength_nm));
    auto [to_antenna, to_uplink] = split_3db(at_ru);
    out.polarizer_out = polarizer(to_antenna, kPi / 4.0);
    out.rf = filter_band(to_volts(photodetect(out.polarizer_out, s.responsivity), s.load_ohms), FilterKind::bandpass,
                         s.bpf);
    out.ru_field = std::move(to_uplink);
    return out;
}

SampledWaveform make_received_signal(const SampledWaveform& rf, const SelfInterferencePath& si,
                                     const std::optional<SoiSpec>& soi) {
    require_delay_in_range(si.delay, rf.grid, "si_path.delay_ns");
    SampledWaveform out = SampledWaveform::zeros(rf.grid);
    if (si.gain_db > -std::numeric_limits<double>::infinity())
        out = delay(rf * db_to_amplitude_ratio(si.gain_db), si.delay);
    if (soi) {
        require_delay_in_range(soi->arrival_delay, rf.grid, "soi.arrival_delay_ns");
        out += delay(make_signal(soi->signal, rf.grid), soi->arrival_delay);
    }
    return out;
}

UplinkRails propagate_uplink(const OpticalField& ru_field, const SampledWaveform& received, const LinkScenario& s,
                             const SicSettings& sic) {
    require_same_grid(ru_field.grid, received.grid, "uplink drive");
    auto [x_rail, y_rail] = pbs(ru_field);
    const SampledWaveform drive = sic.rf_phase_comp ? phase_shift(received, *sic.rf_phase_comp) : received;
    UplinkRails out;
    out.ru_y_mod = dd_mzm_ssb(y_rail, drive, s.uplink_mzm);
    const auto fiber = at_wavelength(s.uplink_fiber, s.laser.wavelength_nm);
    out.reference = fiber_propagate(x_rail, fiber);
    out.signal = fiber_propagate(out.ru_y_mod, fiber);
    return out;
}

Uplink run_uplink(const OpticalField& ru_field, const SampledWaveform& received, const LinkScenario& s,
                  const SicSettings& sic) {
    if (!(sic.alpha >= 0.0 && sic.alpha <= 1.0)) throw GainNotAllowed("sic.alpha must lie in [0, 1]");
    require_delay_in_range(sic.tau2, s.grid, "sic.tau2");

    auto rails = propagate_uplink(ru_field, received, s, sic);
    Uplink out;
    out.ru_y_mod = std::move(rails.ru_y_mod);
    const auto& signal = rails.signal;

    const double lpf_edge[] = {s.lpf};
    const auto dark = OpticalField::dark(s.grid, ru_field.carrier_frequency);
    out.without_sic = filter_band(to_volts(balanced_detect(dark, signal, s.responsivity), s.load_ohms),
                                  FilterKind::lowpass, lpf_edge);
    if (sic.alpha == 0.0) {
        out.with_sic = out.without_sic;
        return out;
    }
    const auto reference = delay_line(attenuate(rails.reference, sic.alpha), sic.tau2);
    out.with_sic = filter_band(to_volts(balanced_detect(reference, signal, s.responsivity), s.load_ohms),
                               FilterKind::lowpass, lpf_edge);
    return out;
}

LinkResult run_full(const LinkScenario& s, const SicSettings& sic) {
    const auto dl = run_downlink(s);
    const auto si_only = run_uplink(dl.ru_field, make_received_signal(dl.rf, s.si_path, std::nullopt), s, sic);

    LinkResult r;
    r.downlink_rf = dl.rf;
    const auto si_band = s.si_band();
    const auto soi_band = s.soi_band();
    const auto psd_without = welch_psd(si_only.without_sic, s.rbw);
    const auto psd_with = welch_psd(si_only.with_sic, s.rbw);
    r.metrics.si_without_sic_dbm = band_power(psd_without, si_band[0], si_band[1]);
    r.metrics.depth_db = r.metrics.si_without_sic_dbm - band_power(psd_with, si_band[0], si_band[1]);
    r.metrics.residual_si_dbm = band_power(psd_with, soi_band[0], soi_band[1]);
    r.metrics.si_in_soi_band_without_sic_dbm = band_power(psd_without, soi_band[0], soi_band[1]);

    if (!s.soi) {
        r.bpd_out_with_sic = si_only.with_sic;
        r.bpd_out_without_sic = si_only.without_sic;
        return r;
    }

    auto full = run_uplink(dl.ru_field, make_received_signal(dl.rf, s.si_path, s.soi), s, sic);
    const auto soi_part = full.with_sic - si_only.with_sic;
    r.metrics.soi_power_dbm = band_power(welch_psd(soi_part, s.rbw), soi_band[0], soi_band[1]);
    if (const auto* q = std::get_if<QamSignalSpec>(&s.soi->signal)) {
        auto at_if = *q;
        at_if.center_frequency = s.if_frequency();
        r.metrics.evm_percent = demodulate_evm(full.with_sic, at_if);
    }
    r.bpd_out_with_sic = std::move(full.with_sic);
    r.bpd_out_without_sic = std::move(full.without_sic);
    return r;
}

}  // namespace rofsim
