#pragma once

#include <complex>
#include <utility>
#include <vector>

#include "rofsim/signal.hpp"

namespace rofsim {

enum class Rail { x, y };
enum class Sideband { upper, lower };

/// Dual-polarization complex envelope (sqrt(W)) referenced to an optical
/// carrier. A single-polarization field keeps exact zeros in the unused rail.
struct OpticalField {
    TimeGrid grid;
    double carrier_frequency = 0.0;  // Hz
    std::vector<cplx> x;
    std::vector<cplx> y;

    static OpticalField dark(const TimeGrid& grid, double carrier_frequency);

    /// Mean optical power in watts, both rails.
    double power() const;
    double rail_power(Rail r) const;
    bool rail_is_dark(Rail r) const;
};

/// DD-MZM settings. `v_pi` is the half-wave voltage of one arm; the arm
/// drives are the two outputs of a 90-degree hybrid, so a tone of peak
/// amplitude A at the hybrid input gives modulation index pi*A/(sqrt(2)*v_pi).
struct ModulatorParams {
    double v_pi = 5.0;               // V
    double insertion_loss_db = 0.0;
    Sideband sideband = Sideband::upper;

    friend bool operator==(const ModulatorParams&, const ModulatorParams&) = default;
};

struct FiberParams {
    double length_km = 0.0;
    double dispersion_ps_nm_km = 17.0;
    double attenuation_db_km = 0.0;
    double reference_wavelength_nm = 1550.0;

    /// Group-velocity dispersion in s^2/m.
    double beta2() const;

    friend bool operator==(const FiberParams&, const FiberParams&) = default;
};

/// Polarization-controller model: rotation by `angle` with a differential
/// retardance `differential_phase` between the rails.
struct JonesRotation {
    double angle = 0.0;
    double differential_phase = 0.0;
};

struct SsbCoefficients {
    cplx carrier;
    cplx sideband;
};

double modulation_index(double drive_amplitude, const ModulatorParams& params);

/// Optical carrier frequency for a vacuum wavelength.
double carrier_from_wavelength(double wavelength_nm);

/// CW laser in one rail. power_dbm = -infinity gives a dark field.
OpticalField laser_cw(double power_dbm, double carrier_frequency, Rail rail, const TimeGrid& grid);

/// 90-degree hybrid: returns (drive/sqrt2, drive shifted +90 degrees / sqrt2).
std::pair<SampledWaveform, SampledWaveform> hybrid_coupler_90(const SampledWaveform& drive);

/// Dual-drive MZM biased for single-sideband operation, driven through a
/// 90-degree hybrid. Exact phase-modulation model, no small-signal truncation.
OpticalField dd_mzm_ssb(const OpticalField& carrier, const SampledWaveform& drive, const ModulatorParams& params);

/// Carrier and retained first-order sideband of dd_mzm_ssb for a single
/// tone, to first order in the Bessel expansion.
SsbCoefficients ssb_smallsignal_coefficients(double m);

/// Dual-polarization modulator: 3 dB split, X rail SSB-modulated by the IF
/// drive, Y rail by the LO drive, polarization-combined.
OpticalField dp_bpsk_modulate(const OpticalField& carrier, const SampledWaveform& if_drive,
                              const SampledWaveform& lo_drive, const ModulatorParams& p_if,
                              const ModulatorParams& p_lo);

OpticalField apply_jones(const OpticalField& field, const JonesRotation& r);

/// Linear polarizer at `angle` from the X axis; output is on the X rail.
OpticalField polarizer(const OpticalField& field, double angle);

std::pair<OpticalField, OpticalField> pbs(const OpticalField& field);
OpticalField pbc(const OpticalField& x, const OpticalField& y);

/// Chromatic dispersion and loss; phase is referenced to the carrier and
/// the bulk group delay is not applied.
OpticalField fiber_propagate(const OpticalField& field, const FiberParams& fp);

/// Power attenuation 0 <= alpha <= 1.
OpticalField attenuate(const OpticalField& field, double alpha);

/// True optical delay: envelope delay plus carrier phase exp(-j*wc*tau).
OpticalField delay_line(const OpticalField& field, double tau);

/// Noiseless optical amplifier.
OpticalField amplify(const OpticalField& field, double gain_db);

/// Lossless 3 dB splitter; both outputs carry half the power.
std::pair<OpticalField, OpticalField> split_3db(const OpticalField& field);

/// Square-law detection of total intensity, in amperes.
SampledWaveform photodetect(const OpticalField& field, double responsivity);

SampledWaveform balanced_detect(const OpticalField& plus, const OpticalField& minus, double responsivity);

}  // namespace rofsim
