#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <variant>

#include "rofsim/optics.hpp"
#include "rofsim/signal.hpp"

namespace rofsim {

/// Drive or received signal: a single tone or a 16-QAM stream.
using SignalSpec = std::variant<ToneSpec, QamSignalSpec>;

double signal_frequency(const SignalSpec& s);
/// Average power into 50 ohm, dBm.
double signal_power_dbm(const SignalSpec& s);
/// Half-width of the band holding the signal: `tone_half_width` for a tone.
double signal_half_bandwidth(const SignalSpec& s, double tone_half_width);
SampledWaveform make_signal(const SignalSpec& s, const TimeGrid& grid);

/// Over-the-air leakage from the transmit to the receive antenna.
struct SelfInterferencePath {
    double gain_db = 0.0;  // -infinity disables the path
    double delay = 0.0;    // s

    friend bool operator==(const SelfInterferencePath&, const SelfInterferencePath&) = default;
};

/// Uplink signal of interest, received at the transmit frequency.
struct SoiSpec {
    SignalSpec signal;
    double arrival_delay = 0.0;  // s

    friend bool operator==(const SoiSpec&, const SoiSpec&) = default;
};

struct LaserParams {
    double power_dbm = 10.0;
    double wavelength_nm = 1567.0;

    friend bool operator==(const LaserParams&, const LaserParams&) = default;
};

struct LinkScenario {
    std::string name = "unnamed";
    std::string description;
    std::uint64_t seed = 1;

    TimeGrid grid = default_grid();
    double rbw = 200e3;  // Hz, resolution of every spectral estimate

    LaserParams laser;
    SignalSpec if_signal = ToneSpec{};
    ToneSpec lo_signal;
    ModulatorParams if_mzm{5.0, 0.0, Sideband::lower};
    ModulatorParams lo_mzm{5.0, 0.0, Sideband::upper};
    ModulatorParams uplink_mzm{5.0, 0.0, Sideband::lower};
    double edfa_gain_db = 0.0;
    FiberParams downlink_fiber;
    FiberParams uplink_fiber;
    SelfInterferencePath si_path;
    std::optional<SoiSpec> soi;
    std::array<double, 2> bpf{6.45e9, 8.55e9};  // Hz
    double lpf = 3e9;                          // Hz
    double responsivity = 0.8;                 // A/W
    double load_ohms = 50.0;                   // detector load, converts photocurrent to volts

    double if_frequency() const { return signal_frequency(if_signal); }
    double lo_frequency() const { return lo_signal.frequency; }
    /// Transmit (and receive) RF frequency, f_IF + f_LO.
    double rf_frequency() const { return if_frequency() + lo_frequency(); }
    double carrier_frequency() const { return carrier_from_wavelength(laser.wavelength_nm); }

    /// Band around f_IF over which cancellation depth is measured.
    std::array<double, 2> si_band() const;
    /// Band around f_IF over which the SOI is measured.
    std::array<double, 2> soi_band() const;

    /// Sets the scenario seed and derives the QAM data seeds from it.
    void reseed(std::uint64_t new_seed);

    /// Throws a ValidationError subclass naming the offending field.
    void validate() const;

    friend bool operator==(const LinkScenario&, const LinkScenario&) = default;
};

/// Reference-arm settings: power attenuation and optical delay, plus an
/// optional phase shift applied to the received RF before the uplink modulator.
struct SicSettings {
    double alpha = 0.0;
    double tau2 = 0.0;  // s
    std::optional<double> rf_phase_comp;  // rad

    friend bool operator==(const SicSettings&, const SicSettings&) = default;
};

struct Downlink {
    SampledWaveform rf;        // V, after the BPF
    OpticalField ru_field;     // half of the downlink light, kept for the uplink
    OpticalField dp_bpsk_out;
    OpticalField polarizer_out;
};

struct Uplink {
    SampledWaveform with_sic;     // V, after the LPF
    SampledWaveform without_sic;  // reference arm dark
    OpticalField ru_y_mod;        // Y rail leaving the uplink modulator
};

/// Reference and signal rails as they arrive at the CO receiver, before the
/// attenuator and delay line.
struct UplinkRails {
    OpticalField reference;
    OpticalField signal;
    OpticalField ru_y_mod;  // signal rail at the RU, before the uplink fiber
};

struct LinkMetrics {
    double depth_db = 0.0;               // SI band, without minus with SIC
    double si_without_sic_dbm = 0.0;     // SI band, SI only
    double residual_si_dbm = 0.0;        // SOI band, SI only, with SIC
    double si_in_soi_band_without_sic_dbm = 0.0;
    std::optional<double> soi_power_dbm;  // SOI band, SOI contribution with SIC
    std::optional<double> evm_percent;
};

struct LinkResult {
    SampledWaveform downlink_rf;
    SampledWaveform bpd_out_with_sic;     // SI plus SOI when present
    SampledWaveform bpd_out_without_sic;
    LinkMetrics metrics;
};

Downlink run_downlink(const LinkScenario& s);

/// Delayed, scaled copy of `rf` plus the SOI waveform.
SampledWaveform make_received_signal(const SampledWaveform& rf, const SelfInterferencePath& si,
                                     const std::optional<SoiSpec>& soi);

UplinkRails propagate_uplink(const OpticalField& ru_field, const SampledWaveform& received, const LinkScenario& s,
                             const SicSettings& sic);

Uplink run_uplink(const OpticalField& ru_field, const SampledWaveform& received, const LinkScenario& s,
                  const SicSettings& sic);

LinkResult run_full(const LinkScenario& s, const SicSettings& sic);

}  // namespace rofsim
