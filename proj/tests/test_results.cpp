#include <algorithm>
#include <cmath>
#include <limits>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "doctest.h"
#include "rofsim/errors.hpp"
#include "rofsim/results.hpp"
#include "rofsim/units.hpp"
#include "test_helpers.hpp"

using namespace rofsim;

namespace {

std::vector<std::string> lines(const std::string& text) {
    std::vector<std::string> out;
    std::stringstream in(text);
    for (std::string l; std::getline(in, l);) out.push_back(l);
    return out;
}

std::vector<std::string> fields(const std::string& line) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : line) {
        if (c == ',') {
            out.push_back(cur);
            cur.clear();
        } else {
            cur += c;
        }
    }
    out.push_back(cur);
    return out;
}

MetricsRow sample_row() {
    MetricsRow r;
    r.scenario = "fig7a";
    r.seed = 11;
    r.sic = {0.0181849386, 10.1875e-9, std::nullopt};
    r.metrics.depth_db = 30.57912;
    r.metrics.si_without_sic_dbm = -78.855;
    r.metrics.residual_si_dbm = -138.13774;
    r.metrics.si_in_soi_band_without_sic_dbm = -87.06;
    r.metrics.soi_power_dbm = -100.5;
    return r;
}

OpticalField tones(double fx, double px_w, double fy, double py_w) {
    const auto g = default_grid();
    auto f = OpticalField::dark(g, 191e12);
    for (std::size_t i = 0; i < g.n_samples; ++i) {
        const double t = static_cast<double>(i) / g.sample_rate;
        f.x[i] = std::sqrt(px_w) * std::polar(1.0, kTwoPi * fx * t);
        f.y[i] = std::sqrt(py_w) * std::polar(1.0, kTwoPi * fy * t);
    }
    return f;
}

}  // namespace

TEST_CASE("metrics table layout") {
    std::ostringstream out;
    auto swept = sample_row();
    swept.axis = "downlink_fiber.length_km";
    swept.axis_value = 4.1;
    swept.sic.rf_phase_comp = -3.9269908;
    swept.metrics.evm_percent = 2.5;
    write_metrics(out, {sample_row(), swept});
    const auto l = lines(out.str());
    REQUIRE(l.size() == 3);
    CHECK(l[0] ==
          "# scenario,seed,version,axis,axis_value,alpha,tau2_ns,rf_phase_comp_rad,depth_db,si_without_sic_dbm,"
          "residual_si_dbm,si_in_soi_band_without_sic_dbm,soi_power_dbm,evm_percent");
    const auto header = fields(l[0].substr(2));
    for (std::size_t i = 1; i < l.size(); ++i) {
        const auto f = fields(l[i]);
        REQUIRE(f.size() == header.size());
        CHECK(f[0] == "fig7a");
        CHECK(f[1] == "11");
        CHECK(f[2] == software_version());
    }
    CHECK(l[1] == std::string("fig7a,11,") + software_version() +
                      ",,,0.0181849386,10.187500,,30.5791,-78.8550,-138.1377,-87.0600,-100.5000,");
    const auto f = fields(l[2]);
    CHECK(f[3] == "downlink_fiber.length_km");
    CHECK(f[4] == "4.1");
    CHECK(f[7] == "-3.926991");
    CHECK(f[13] == "2.5000");
}

TEST_CASE("metrics are byte-identical across writes") {
    std::ostringstream a, b;
    write_metrics(a, {sample_row()});
    write_metrics(b, {sample_row()});
    CHECK(a.str() == b.str());
}

TEST_CASE("tune report layout") {
    auto s = testing::tone_scenario(2e9, 5e9, 1e-9);
    s.name = "t";
    s.seed = 3;
    TuneReport r;
    r.seed = {0.02, 1e-9, std::nullopt};
    r.refined = {0.0201, 1.0001e-9, std::nullopt};
    r.depth_seed = 41.0;
    r.depth_refined = 97.25;
    r.iterations = 2;
    std::ostringstream out;
    write_tune_report(out, s, r);
    const auto l = lines(out.str());
    REQUIRE(l.size() == 2);
    CHECK(l[0] ==
          "# scenario,seed,version,seed_alpha,seed_tau2_ns,seed_rf_phase_comp_rad,seed_depth_db,alpha,tau2_ns,"
          "rf_phase_comp_rad,depth_db,iterations");
    CHECK(l[1] == std::string("t,3,") + software_version() + ",0.02,1.000000,,41.0000,0.0201,1.000100,,97.2500,2");
}

TEST_CASE("spectrum file") {
    SpectrumEstimate psd;
    psd.rbw = 200e3;
    psd.freqs = {0.0, 200e3, 400e3};
    psd.psd = {-100.0, -90.12345, -174.0};
    std::ostringstream out;
    write_spectrum(out, {"fig6a", 1, "bpd_out", "electrical"}, psd);
    const auto l = lines(out.str());
    REQUIRE(l.size() == 5);
    CHECK(l[0] == std::string("# scenario=fig6a,seed=1,version=") + software_version() +
                      ",tap=bpd_out,kind=electrical,rbw_hz=200000.000");
    CHECK(l[1] == "# frequency_hz,psd_dbm_per_hz");
    CHECK(l[3] == "200000.000,-90.1235");
}

TEST_CASE("optical_psd sums both rails on a two-sided axis") {
    const double fx = -2e9, fy = 5e9;
    const auto f = tones(fx, 1e-3, fy, 4e-3);
    const auto psd = optical_psd(f, 200e3);
    CHECK(psd.freqs.front() < 0.0);
    CHECK(psd.freqs.back() > 0.0);
    // Power within a few RBW of each tone, in dBm.
    CHECK(band_power(psd, fx - 1e6, fx + 1e6) == doctest::Approx(0.0).epsilon(0.01).scale(1.0));
    CHECK(band_power(psd, fy - 1e6, fy + 1e6) == doctest::Approx(watts_to_dbm(4e-3)).epsilon(0.01).scale(1.0));
    CHECK(band_power(psd, -30e9, 30e9) == doctest::Approx(watts_to_dbm(5e-3)).epsilon(0.01).scale(1.0));
}

TEST_CASE("optical_psd of a real-valued envelope stays two-sided") {
    const auto g = default_grid();
    auto f = OpticalField::dark(g, 191e12);
    std::fill(f.x.begin(), f.x.end(), cplx{0.1, 0.0});  // unmodulated carrier, 10 mW
    const auto psd = optical_psd(f, 200e3);
    CHECK(psd.freqs.front() < 0.0);
    const auto peak = std::max_element(psd.psd.begin(), psd.psd.end()) - psd.psd.begin();
    CHECK(psd.freqs[static_cast<std::size_t>(peak)] == 0.0);
    CHECK(band_power(psd, -1e6, 1e6) == doctest::Approx(10.0).epsilon(0.01).scale(1.0));
}

TEST_CASE("write_file creates directories") {
    const auto dir = std::filesystem::temp_directory_path() / "rofsim_test_results" / "nested";
    std::filesystem::remove_all(dir.parent_path());
    write_file(dir / "x.csv", "a,b\n");
    std::ifstream in(dir / "x.csv");
    std::string content((std::istreambuf_iterator<char>(in)), {});
    CHECK(content == "a,b\n");
    std::filesystem::remove_all(dir.parent_path());
}

namespace {

// Frequencies of the `count` strongest local maxima of a PSD.
std::vector<double> strongest_lines(const SpectrumEstimate& psd, std::size_t count) {
    std::vector<std::size_t> peaks;
    for (std::size_t i = 1; i + 1 < psd.psd.size(); ++i)
        if (psd.psd[i] > psd.psd[i - 1] && psd.psd[i] > psd.psd[i + 1]) peaks.push_back(i);
    std::sort(peaks.begin(), peaks.end(), [&](auto a, auto b) { return psd.psd[a] > psd.psd[b]; });
    std::vector<double> out;
    for (std::size_t i = 0; i < std::min(count, peaks.size()); ++i) out.push_back(psd.freqs[peaks[i]]);
    std::sort(out.begin(), out.end());
    return out;
}

double psd_at(const SpectrumEstimate& psd, double f) {
    const auto it = std::min_element(psd.freqs.begin(), psd.freqs.end(),
                                     [f](double a, double b) { return std::abs(a - f) < std::abs(b - f); });
    return psd.psd[static_cast<std::size_t>(it - psd.freqs.begin())];
}

}  // namespace

TEST_CASE("tap spectra") {
    const auto s = testing::tone_scenario(2e9, 5e9, 3e-9);

    SUBCASE("dp_bpsk_out carries lines at -f_IF, the carrier and +f_LO") {
        const auto t = tap_spectrum(s, "dp_bpsk_out", std::nullopt);
        CHECK(t.kind == "optical");
        CHECK(strongest_lines(t.psd, 3) == std::vector<double>{-2e9, 0.0, 5e9});
    }
    SUBCASE("ru_y_mod adds uplink sidebands below the carrier and the LO line") {
        const auto t = tap_spectrum(s, "ru_y_mod", std::nullopt);
        CHECK(t.kind == "optical");
        const double f_s = s.rf_frequency();
        // Lower sidebands at -f_s (from the carrier) and -f_IF (from the LO line);
        // their mirror images are suppressed.
        CHECK(psd_at(t.psd, -f_s) - psd_at(t.psd, f_s) >= 40.0);
        CHECK(psd_at(t.psd, 5e9 - f_s) - psd_at(t.psd, 5e9 + f_s) >= 40.0);
        for (double f : {-f_s, -2e9}) {
            CAPTURE(f);
            CHECK(psd_at(t.psd, f) - psd_at(t.psd, f + 20e6) >= 60.0);
        }
    }
    SUBCASE("bpd_out is electrical and shows the down-converted SI") {
        const auto t = tap_spectrum(s, "bpd_out", SicSettings{0.0, 0.0, std::nullopt});
        CHECK(t.kind == "electrical");
        CHECK(strongest_lines(t.psd, 1) == std::vector<double>{2e9});
    }
    SUBCASE("bpd_out of a dark link sits at the floor") {
        auto dark = s;
        dark.si_path.gain_db = -std::numeric_limits<double>::infinity();
        const auto t = tap_spectrum(dark, "bpd_out", std::nullopt);
        double peak = -std::numeric_limits<double>::infinity();
        for (std::size_t i = 0; i < t.psd.freqs.size(); ++i)
            if (t.psd.freqs[i] > 0.1e9 && t.psd.freqs[i] < dark.lpf) peak = std::max(peak, t.psd.psd[i]);
        const auto lit = tap_spectrum(s, "bpd_out", SicSettings{0.0, 0.0, std::nullopt});
        CHECK(peak < psd_at(lit.psd, 2e9) - 150.0);
    }
    SUBCASE("unknown tap") { CHECK_THROWS_AS(tap_spectrum(s, "antenna", std::nullopt), TapError); }
}
