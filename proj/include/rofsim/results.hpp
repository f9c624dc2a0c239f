#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "rofsim/link.hpp"
#include "rofsim/optics.hpp"
#include "rofsim/tuner.hpp"

namespace rofsim {

/// Software version stamped into every output file.
const char* software_version();

/// One line of a metrics table.
struct MetricsRow {
    std::string scenario;
    std::uint64_t seed = 0;
    std::string axis;                   // empty outside sweeps
    std::optional<double> axis_value;  // file units of `axis`
    SicSettings sic;
    LinkMetrics metrics;
};

MetricsRow make_metrics_row(const LinkScenario& s, const SicSettings& sic, const LinkMetrics& m);

/// Comma-separated table with a `#` header naming columns and units.
/// Absent optional values are written as empty fields.
void write_metrics(std::ostream& out, const std::vector<MetricsRow>& rows);
void write_tune_report(std::ostream& out, const LinkScenario& s, const TuneReport& r);

/// Labels of a spectrum file. `kind` is "electrical" (one-sided, dBm/Hz
/// into the load) or "optical" (two-sided offset from the carrier, dBm/Hz
/// summed over both rails).
struct SpectrumHeader {
    std::string scenario;
    std::uint64_t seed = 0;
    std::string tap;
    std::string kind;
};

void write_spectrum(std::ostream& out, const SpectrumHeader& h, const SpectrumEstimate& psd);

/// PSD of an optical envelope, both rails summed, frequencies as offsets
/// from the carrier in ascending order.
SpectrumEstimate optical_psd(const OpticalField& f, double rbw);

/// Spectrum at a named tap: dp_bpsk_out, polarizer_out (optical, CO
/// modulator output and RU polarizer output), ru_y_mod (optical, uplink
/// modulator output) or bpd_out (electrical, balanced detector with SIC).
/// The uplink taps use `sic`, or the analytic settings when it is empty.
/// Throws TapError for other names.
struct TapSpectrum {
    std::string kind;  // "optical" or "electrical"
    SpectrumEstimate psd;
};

TapSpectrum tap_spectrum(const LinkScenario& s, const std::string& tap, const std::optional<SicSettings>& sic);

/// Writes `text` to `path`, creating parent directories.
void write_file(const std::filesystem::path& path, const std::string& text);

}  // namespace rofsim
