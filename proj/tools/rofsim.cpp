#include <CLI11.hpp>

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cstdlib>
#include <exception>
#include <filesystem>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "rofsim/errors.hpp"
#include "rofsim/results.hpp"
#include "rofsim/scenario_io.hpp"
#include "rofsim/tuner.hpp"

namespace fs = std::filesystem;
using namespace rofsim;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitValidation = 2;
constexpr int kExitSimulation = 3;
constexpr int kExitAssert = 4;

struct Common {
    std::string out;
    unsigned jobs = 1;
    std::optional<std::uint64_t> seed;

    fs::path out_dir() const {
        if (!out.empty()) return out;
        if (const char* env = std::getenv("ROFSIM_OUT"); env && *env) return env;
        return ".";
    }
};

struct SicOptions {
    bool auto_tune = false;
    bool wideband = false;
    std::optional<double> alpha;
    std::optional<double> tau2_ns;
    std::optional<double> rf_phase_comp;
};

LinkScenario load(const std::string& file, const Common& c) {
    auto s = load_scenario(file);
    if (c.seed) s.reseed(*c.seed);
    return s;
}

// Analytic settings, then explicit overrides, then refinement if asked.
SicSettings choose_sic(const LinkScenario& s, const SicOptions& o) {
    const bool manual = o.alpha && o.tau2_ns;
    SicSettings sic = manual ? SicSettings{} : analytic_settings(s, o.wideband);
    if (o.alpha) sic.alpha = *o.alpha;
    if (o.tau2_ns) sic.tau2 = *o.tau2_ns * 1e-9;
    if (o.rf_phase_comp) sic.rf_phase_comp = *o.rf_phase_comp;
    if (o.auto_tune) sic = refine(s, sic).refined;
    return sic;
}

std::string metrics_text(const std::vector<MetricsRow>& rows) {
    std::ostringstream out;
    write_metrics(out, rows);
    return out.str();
}

std::string spectrum_text(const LinkScenario& s, const std::string& tap, const std::string& kind,
                          const SpectrumEstimate& psd) {
    std::ostringstream out;
    write_spectrum(out, {s.name, s.seed, tap, kind}, psd);
    return out.str();
}

std::vector<double> parse_values(const std::string& csv) {
    std::vector<double> out;
    std::stringstream in(csv);
    std::string item;
    while (std::getline(in, item, ',')) {
        item.erase(0, item.find_first_not_of(" \t"));
        item.erase(item.find_last_not_of(" \t") + 1);
        if (item.empty()) continue;
        double v = 0.0;
        const auto [p, ec] = std::from_chars(item.data(), item.data() + item.size(), v);
        if (ec != std::errc() || p != item.data() + item.size())
            throw ValidationError("--values: '" + item + "' is not a number");
        out.push_back(v);
    }
    if (out.empty()) throw ValidationError("--values: no sweep values given");
    return out;
}

// Runs body(i) for i in [0, n) on up to `jobs` threads; rethrows the error of
// the lowest failing index.
template <class F>
void parallel_for(std::size_t n, unsigned jobs, F&& body) {
    std::vector<std::exception_ptr> errors(n);
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t i = next++; i < n; i = next++) {
            try {
                body(i);
            } catch (...) {
                errors[i] = std::current_exception();
            }
        }
    };
    const auto threads = std::min<std::size_t>(std::max(jobs, 1u), n);
    std::vector<std::thread> pool;
    for (std::size_t t = 1; t < threads; ++t) pool.emplace_back(worker);
    worker();
    for (auto& t : pool) t.join();
    for (auto& e : errors)
        if (e) std::rethrow_exception(e);
}

int cmd_simulate(const std::string& file, const Common& c, const SicOptions& o, std::optional<double> assert_depth) {
    const auto s = load(file, c);
    const auto sic = choose_sic(s, o);
    const auto r = run_full(s, sic);
    const auto text = metrics_text({make_metrics_row(s, sic, r.metrics)});
    const auto dir = c.out_dir();
    write_file(dir / (s.name + "_metrics.csv"), text);
    write_file(dir / (s.name + "_bpd_with_sic.csv"),
               spectrum_text(s, "bpd_out_with_sic", "electrical", welch_psd(r.bpd_out_with_sic, s.rbw)));
    write_file(dir / (s.name + "_bpd_without_sic.csv"),
               spectrum_text(s, "bpd_out_without_sic", "electrical", welch_psd(r.bpd_out_without_sic, s.rbw)));
    std::cout << text;
    if (assert_depth && !(r.metrics.depth_db >= *assert_depth)) {
        std::cerr << "rofsim: depth " << r.metrics.depth_db << " dB is below the asserted " << *assert_depth
                  << " dB\n";
        return kExitAssert;
    }
    return kExitOk;
}

int cmd_tune(const std::string& file, const Common& c, bool wideband) {
    const auto s = load(file, c);
    const auto report = refine(s, analytic_settings(s, wideband));
    std::ostringstream out;
    write_tune_report(out, s, report);
    write_file(c.out_dir() / (s.name + "_tune.csv"), out.str());
    std::cout << out.str();
    return kExitOk;
}

int cmd_sweep(const std::string& file, const Common& c, const std::string& axis, const std::string& values_csv,
              bool hold_sic, const SicOptions& o) {
    const auto base = load(file, c);
    auto values = parse_values(values_csv);
    std::stable_sort(values.begin(), values.end());
    // Validate every point before spending time on any of them.
    std::vector<LinkScenario> points;
    for (double v : values) {
        auto p = with_override(base, axis, v);
        if (c.seed && axis != "seed") p.reseed(*c.seed);
        points.push_back(std::move(p));
    }
    std::optional<SicSettings> held;
    if (hold_sic) held = choose_sic(base, {true, o.wideband, o.alpha, o.tau2_ns, o.rf_phase_comp});

    std::vector<MetricsRow> rows(points.size());
    parallel_for(points.size(), c.jobs, [&](std::size_t i) {
        const auto& p = points[i];
        const auto sic = held ? *held : choose_sic(p, {true, o.wideband, o.alpha, o.tau2_ns, o.rf_phase_comp});
        rows[i] = make_metrics_row(p, sic, run_full(p, sic).metrics);
        rows[i].axis = axis;
        rows[i].axis_value = values[i];
    });
    const auto text = metrics_text(rows);
    write_file(c.out_dir() / (base.name + "_sweep_" + axis + ".csv"), text);
    std::cout << text;
    return kExitOk;
}

int cmd_spectrum(const std::string& file, const Common& c, const std::string& tap, const SicOptions& o) {
    const auto s = load(file, c);
    const bool uplink_tap = tap == "ru_y_mod" || tap == "bpd_out";
    const auto spectrum = tap_spectrum(s, tap, uplink_tap ? std::optional(choose_sic(s, o)) : std::nullopt);
    const auto path = c.out_dir() / (s.name + "_" + tap + ".csv");
    write_file(path, spectrum_text(s, tap, spectrum.kind, spectrum.psd));
    std::cout << path.string() << '\n';
    return kExitOk;
}

void add_sic_options(CLI::App* cmd, SicOptions& o) {
    cmd->add_flag("--wideband", o.wideband, "Wideband mode: delay-only tau2 plus a fixed RF phase compensation");
    cmd->add_option("--alpha", o.alpha, "Reference-arm attenuation (0..1), replaces the analytic value");
    cmd->add_option("--tau2-ns", o.tau2_ns, "Reference-arm delay in ns, replaces the analytic value");
    cmd->add_option("--rf-phase-comp-rad", o.rf_phase_comp, "RF phase shift before the uplink modulator");
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Photonic self-interference cancellation link simulator"};
    app.require_subcommand(1);
    app.fallthrough();
    app.set_version_flag("--version", software_version());

    Common common;
    app.add_option("--out", common.out, "Output directory (default: $ROFSIM_OUT, else the working directory)");
    app.add_option("--jobs", common.jobs, "Parallel sweep points")->check(CLI::PositiveNumber);
    app.add_option("--seed", common.seed, "Override the scenario seed");

    std::string file, axis, values, tap;
    SicOptions sic;
    std::optional<double> assert_depth;
    bool hold_sic = false;

    auto* simulate = app.add_subcommand("simulate", "Run one scenario and write metrics and output spectra");
    simulate->add_option("file", file, "Scenario file")->required();
    simulate->add_flag("--auto-tune", sic.auto_tune, "Refine the analytic settings before running");
    simulate->add_option("--assert-depth", assert_depth, "Exit with status 4 if the depth is below this (dB)");
    add_sic_options(simulate, sic);

    auto* tune = app.add_subcommand("tune", "Tune alpha and tau2 and write a tune report");
    tune->add_option("file", file, "Scenario file")->required();
    tune->add_flag("--wideband", sic.wideband, "Seed from the wideband settings");

    auto* sweep = app.add_subcommand("sweep", "Run a scenario over values of one numeric key");
    sweep->add_option("file", file, "Scenario file")->required();
    sweep->add_option("--axis", axis, "Dotted scenario key, e.g. downlink_fiber.length_km")->required();
    sweep->add_option("--values", values, "Comma-separated values in the key's units")->required();
    sweep->add_flag("--hold-sic", hold_sic, "Tune once on the base scenario and keep those settings");
    sweep->add_flag("--wideband", sic.wideband, "Seed from the wideband settings");

    auto* spectrum = app.add_subcommand("spectrum", "Write the PSD at one tap");
    spectrum->add_option("file", file, "Scenario file")->required();
    spectrum->add_option("--tap", tap, "dp_bpsk_out, polarizer_out, ru_y_mod or bpd_out")->required();
    spectrum->add_flag("--auto-tune", sic.auto_tune, "Refine the SIC settings used for bpd_out");
    add_sic_options(spectrum, sic);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kExitOk : kExitValidation;
    }

    try {
        if (*simulate) return cmd_simulate(file, common, sic, assert_depth);
        if (*tune) return cmd_tune(file, common, sic.wideband);
        if (*sweep) return cmd_sweep(file, common, axis, values, hold_sic, sic);
        return cmd_spectrum(file, common, tap, sic);
    } catch (const ValidationError& e) {
        std::cerr << "rofsim: " << e.what() << '\n';
        return kExitValidation;
    } catch (const std::exception& e) {
        std::cerr << "rofsim: " << e.what() << '\n';
        return kExitSimulation;
    }
}
