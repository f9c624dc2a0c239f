#pragma once

#include <cmath>
#include <numbers>

namespace rofsim {

inline constexpr double kPi = std::numbers::pi;
inline constexpr double kTwoPi = 2.0 * std::numbers::pi;
inline constexpr double kSpeedOfLight = 299'792'458.0;  // m/s

/// Reference impedance for every electrical dBm conversion.
inline constexpr double kReferenceOhms = 50.0;

inline double dbm_to_watts(double dbm) { return 1e-3 * std::pow(10.0, dbm / 10.0); }

inline double watts_to_dbm(double watts) { return 10.0 * std::log10(watts / 1e-3); }

inline double db_to_power_ratio(double db) { return std::pow(10.0, db / 10.0); }

inline double db_to_amplitude_ratio(double db) { return std::pow(10.0, db / 20.0); }

/// Peak amplitude of a sinusoid delivering `dbm` into the reference load.
inline double tone_amplitude_from_dbm(double dbm) {
    return std::sqrt(2.0 * kReferenceOhms * dbm_to_watts(dbm));
}

/// Wrap an angle into (-pi, pi].
inline double wrap_phase(double phi) {
    double w = std::remainder(phi, kTwoPi);
    if (w <= -kPi) w += kTwoPi;
    return w;
}

}  // namespace rofsim
