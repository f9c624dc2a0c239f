#include "rofsim/results.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>

#include "rofsim/errors.hpp"
#include "rofsim/units.hpp"

namespace rofsim {

namespace {

constexpr const char* kMetricsHeader =
    "# scenario,seed,version,axis,axis_value,alpha,tau2_ns,rf_phase_comp_rad,depth_db,si_without_sic_dbm,"
    "residual_si_dbm,si_in_soi_band_without_sic_dbm,soi_power_dbm,evm_percent\n";

constexpr const char* kTuneHeader =
    "# scenario,seed,version,seed_alpha,seed_tau2_ns,seed_rf_phase_comp_rad,seed_depth_db,alpha,tau2_ns,"
    "rf_phase_comp_rad,depth_db,iterations\n";

// printf-style formatting; locale-independent for the formats used here.
template <class... A>
std::string fmt(const char* f, A... args) {
    char buf[64];
    std::snprintf(buf, sizeof buf, f, args...);
    return buf;
}

std::string db(double v) { return fmt("%.4f", v); }
std::string db(const std::optional<double>& v) { return v ? db(*v) : std::string(); }
std::string alpha(double v) { return fmt("%.9g", v); }
std::string ns(double seconds) { return fmt("%.6f", seconds * 1e9); }
std::string rad(const std::optional<double>& v) { return v ? fmt("%.6f", *v) : std::string(); }

void sic_fields(std::ostream& out, const SicSettings& sic) {
    out << alpha(sic.alpha) << ',' << ns(sic.tau2) << ',' << rad(sic.rf_phase_comp);
}

}  // namespace

const char* software_version() { return ROFSIM_VERSION; }

MetricsRow make_metrics_row(const LinkScenario& s, const SicSettings& sic, const LinkMetrics& m) {
    MetricsRow row;
    row.scenario = s.name;
    row.seed = s.seed;
    row.sic = sic;
    row.metrics = m;
    return row;
}

void write_metrics(std::ostream& out, const std::vector<MetricsRow>& rows) {
    out << kMetricsHeader;
    for (const auto& r : rows) {
        const auto& m = r.metrics;
        out << r.scenario << ',' << r.seed << ',' << software_version() << ',' << r.axis << ','
            << (r.axis_value ? fmt("%.9g", *r.axis_value) : std::string()) << ',';
        sic_fields(out, r.sic);
        out << ',' << db(m.depth_db) << ',' << db(m.si_without_sic_dbm) << ',' << db(m.residual_si_dbm) << ','
            << db(m.si_in_soi_band_without_sic_dbm) << ',' << db(m.soi_power_dbm) << ','
            << (m.evm_percent ? fmt("%.4f", *m.evm_percent) : std::string()) << '\n';
    }
}

void write_tune_report(std::ostream& out, const LinkScenario& s, const TuneReport& r) {
    out << kTuneHeader;
    out << s.name << ',' << s.seed << ',' << software_version() << ',';
    sic_fields(out, r.seed);
    out << ',' << db(r.depth_seed) << ',';
    sic_fields(out, r.refined);
    out << ',' << db(r.depth_refined) << ',' << r.iterations << '\n';
}

void write_spectrum(std::ostream& out, const SpectrumHeader& h, const SpectrumEstimate& psd) {
    out << "# scenario=" << h.scenario << ",seed=" << h.seed << ",version=" << software_version() << ",tap=" << h.tap
        << ",kind=" << h.kind << ",rbw_hz=" << fmt("%.3f", psd.rbw) << '\n';
    out << "# frequency_hz,psd_dbm_per_hz\n";
    for (std::size_t i = 0; i < psd.freqs.size(); ++i) out << fmt("%.3f", psd.freqs[i]) << ',' << db(psd.psd[i]) << '\n';
}

SpectrumEstimate optical_psd(const OpticalField& f, double rbw) {
    // The envelope is in sqrt(W), so a 1 ohm reference gives optical watts.
    auto x = welch_psd(SampledWaveform{f.grid, f.x}, rbw, 1.0, true);
    const auto y = welch_psd(SampledWaveform{f.grid, f.y}, rbw, 1.0, true);
    for (std::size_t i = 0; i < x.psd.size(); ++i)
        x.psd[i] = watts_to_dbm(dbm_to_watts(x.psd[i]) + dbm_to_watts(y.psd[i]));
    return x;
}

TapSpectrum tap_spectrum(const LinkScenario& s, const std::string& tap, const std::optional<SicSettings>& sic) {
    const bool optical_downlink = tap == "dp_bpsk_out" || tap == "polarizer_out";
    if (!optical_downlink && tap != "ru_y_mod" && tap != "bpd_out")
        throw TapError("unknown tap '" + tap + "'; expected dp_bpsk_out, polarizer_out, ru_y_mod or bpd_out");
    const auto dl = run_downlink(s);
    if (tap == "dp_bpsk_out") return {"optical", optical_psd(dl.dp_bpsk_out, s.rbw)};
    if (tap == "polarizer_out") return {"optical", optical_psd(dl.polarizer_out, s.rbw)};
    const auto settings = sic ? *sic : analytic_settings(s);
    const auto up = run_uplink(dl.ru_field, make_received_signal(dl.rf, s.si_path, s.soi), s, settings);
    if (tap == "ru_y_mod") return {"optical", optical_psd(up.ru_y_mod, s.rbw)};
    return {"electrical", welch_psd(up.with_sic, s.rbw)};
}

void write_file(const std::filesystem::path& path, const std::string& text) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ValidationError("cannot write " + path.string());
    out << text;
    if (!out) throw SimulationError("write to " + path.string() + " failed");
}

}  // namespace rofsim
