#include "rofsim/tuner.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "rofsim/errors.hpp"
#include "rofsim/fft.hpp"

namespace rofsim {

namespace {

constexpr double kInvPhi = 0.6180339887498949;  // 1 / golden ratio
constexpr double kFloor = 1e-300;

template <class F>
std::pair<double, double> golden_section(F&& f, double a, double b, double tol) {
    double c = b - kInvPhi * (b - a);
    double d = a + kInvPhi * (b - a);
    double fc = f(c), fd = f(d);
    while (b - a > tol) {
        if (fc < fd) {
            b = d;
            d = c;
            fd = fc;
            c = b - kInvPhi * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + kInvPhi * (b - a);
            fd = f(d);
        }
    }
    return fc < fd ? std::pair{c, fc} : std::pair{d, fd};
}

std::vector<cplx> intensity_spectrum(const OpticalField& f, double scale) {
    std::vector<cplx> v(f.x.size());
    for (std::size_t i = 0; i < v.size(); ++i) v[i] = scale * (std::norm(f.x[i]) + std::norm(f.y[i]));
    fft::forward(v);
    return v;
}

double drive_amplitude(const SignalSpec& s) {
    if (const auto* t = std::get_if<ToneSpec>(&s)) return t->amplitude;
    return tone_amplitude_from_dbm(std::get<QamSignalSpec>(s).power_dbm);
}

void require_finite(double v, const char* what) {
    if (!std::isfinite(v)) throw SimulationError(std::string(what) + " is not finite");
}

}  // namespace

double analytic_alpha(double m1, double m2, double m3) {
    if (!(m1 >= 0.0 && m2 >= 0.0 && m3 >= 0.0)) throw RangeError("modulation indices must be non-negative");
    const double den = 2.0 * std::cyl_bessel_j(0.0, m1) * std::cyl_bessel_j(1.0, m1);
    if (den == 0.0) throw DivisionByZero("J0(m1) J1(m1) is zero; the IF modulator must be driven");
    const double alpha = std::sqrt(2.0) * std::cyl_bessel_j(0.0, m2) * std::cyl_bessel_j(0.0, m3) *
                         std::cyl_bessel_j(1.0, m2) * std::cyl_bessel_j(1.0, m3) / den;
    if (alpha > 1.0)
        throw AttenuatorInfeasible("required alpha " + std::to_string(alpha) +
                                   " exceeds 1; lower the LO or SI drive, or raise the IF drive");
    return alpha;
}

double analytic_tau2(double omega_if, double omega_s, double tau1, double max_delay, bool wideband) {
    if (!(omega_if > 0.0)) throw RangeError("omega_if must be positive");
    const double period = kTwoPi / omega_if;
    double tau = omega_s * tau1 / omega_if - (wideband ? 0.0 : 5.0 * kPi / (4.0 * omega_if));
    if (tau < 0.0) tau += std::ceil(-tau / period) * period;
    if (tau >= max_delay) tau -= (std::floor((tau - max_delay) / period) + 1.0) * period;
    if (tau < 0.0) throw DelayRangeError("no delay equivalent to tau2 fits below " + std::to_string(max_delay) + " s");
    return tau;
}

ModulationIndices modulation_indices(const LinkScenario& s, const SampledWaveform& downlink_rf) {
    ModulationIndices m;
    m.m1 = modulation_index(drive_amplitude(s.if_signal), s.if_mzm);
    m.m2 = modulation_index(s.lo_signal.amplitude, s.lo_mzm);
    if (s.si_path.gain_db > -std::numeric_limits<double>::infinity()) {
        const double a_si = std::sqrt(2.0 * downlink_rf.mean_square()) * db_to_amplitude_ratio(s.si_path.gain_db);
        m.m3 = modulation_index(a_si, s.uplink_mzm);
    }
    return m;
}

SicSettings analytic_settings(const LinkScenario& s, bool wideband) {
    const auto dl = run_downlink(s);
    const auto m = modulation_indices(s, dl.rf);
    SicSettings out;
    const double loss_db = s.lo_mzm.insertion_loss_db + s.uplink_mzm.insertion_loss_db - s.if_mzm.insertion_loss_db;
    out.alpha = analytic_alpha(m.m1, m.m2, m.m3) * db_to_power_ratio(-loss_db);
    if (out.alpha > 1.0)
        throw AttenuatorInfeasible("insertion losses push the required alpha to " + std::to_string(out.alpha));
    out.tau2 = analytic_tau2(kTwoPi * s.if_frequency(), kTwoPi * s.rf_frequency(), s.si_path.delay,
                             s.grid.duration() / 4.0, wideband);
    if (wideband) out.rf_phase_comp = kWidebandPhaseComp;
    return out;
}

ResidualEvaluator::ResidualEvaluator(const LinkScenario& s, const SicSettings& sic) {
    const auto dl = run_downlink(s);
    const auto rails = propagate_uplink(dl.ru_field, make_received_signal(dl.rf, s.si_path, std::nullopt), s, sic);
    const double scale = s.responsivity * s.load_ohms;
    const auto ref = intensity_spectrum(rails.reference, scale);
    const auto sig = intensity_spectrum(rails.signal, scale);
    const auto band = s.si_band();
    const double df = s.grid.bin_spacing();
    const auto k_lo = static_cast<std::size_t>(std::ceil(band[0] / df));
    const auto k_hi = static_cast<std::size_t>(std::floor(band[1] / df));
    for (std::size_t k = k_lo; k <= k_hi; ++k) {
        freqs_.push_back(static_cast<double>(k) * df);
        ref_.push_back(ref[k]);
        sig_.push_back(sig[k]);
        sig_power_ += std::norm(sig[k]);
    }
    max_delay_ = s.grid.duration() / 4.0;
}

double ResidualEvaluator::residual_db(double alpha, double tau2) const {
    double acc = 0.0;
    for (std::size_t k = 0; k < freqs_.size(); ++k)
        acc += std::norm(alpha * ref_[k] * std::polar(1.0, -kTwoPi * freqs_[k] * tau2) - sig_[k]);
    return 10.0 * std::log10(std::max(acc, kFloor) / std::max(sig_power_, kFloor));
}

double ResidualEvaluator::magnitude_match_alpha() const {
    double ref_power = 0.0;
    for (const auto& r : ref_) ref_power += std::norm(r);
    if (ref_power == 0.0) return 0.0;
    return std::min(1.0, std::sqrt(sig_power_ / ref_power));
}

TuneReport refine(const LinkScenario& s, const SicSettings& seed, const RefineOptions& opt) {
    if (!(seed.alpha >= 0.0 && seed.alpha <= 1.0)) throw GainNotAllowed("seed alpha must lie in [0, 1]");
    const ResidualEvaluator ev(s, seed);
    if (!(seed.tau2 >= 0.0 && seed.tau2 < ev.max_delay())) throw DelayRangeError("seed tau2 outside [0, record/4)");

    const double period = 1.0 / s.if_frequency();
    const double tau_max = std::nextafter(ev.max_delay(), 0.0);
    SicSettings cur = seed;
    // A zero seed leaves the delay unobservable, so the delay step probes
    // with an amplitude-matched alpha until the alpha step takes over.
    double alpha = seed.alpha > 0.0 ? seed.alpha : ev.magnitude_match_alpha();

    TuneReport report;
    report.seed = seed;
    double prev = ev.residual_db(seed.alpha, seed.tau2);
    require_finite(prev, "residual at the seed");

    for (int sweep = 1; sweep <= opt.max_sweeps; ++sweep) {
        // delay: coarse scan of the window, then golden section around the best point
        const double lo = std::max(0.0, seed.tau2 - period);
        const double hi = std::min(tau_max, seed.tau2 + period);
        const double step = (hi - lo) / static_cast<double>(opt.coarse_points);
        double best_tau = cur.tau2;
        double best = ev.residual_db(alpha, cur.tau2);
        for (std::size_t i = 0; i <= opt.coarse_points; ++i) {
            const double t = lo + step * static_cast<double>(i);
            const double r = ev.residual_db(alpha, t);
            if (r < best) best = r, best_tau = t;
        }
        const auto [t_opt, r_opt] = golden_section([&](double t) { return ev.residual_db(alpha, t); },
                                                   std::max(lo, best_tau - step), std::min(hi, best_tau + step),
                                                   opt.tau_tolerance);
        if (r_opt < best) best = r_opt, best_tau = t_opt;
        cur.tau2 = best_tau;

        // attenuation
        const double a_lo = cur.alpha > 0.0 ? 0.5 * cur.alpha : 0.0;
        const double a_hi = cur.alpha > 0.0 ? std::min(1.0, 2.0 * cur.alpha) : 1.0;
        double best_alpha = cur.alpha > 0.0 ? cur.alpha : alpha;
        best = ev.residual_db(best_alpha, cur.tau2);
        const auto [a_opt, ra] = golden_section([&](double a) { return ev.residual_db(a, cur.tau2); }, a_lo, a_hi,
                                                opt.alpha_tolerance);
        if (ra < best) best = ra, best_alpha = a_opt;
        cur.alpha = best_alpha;
        alpha = best_alpha;

        require_finite(best, "residual during refinement");
        report.iterations = sweep;
        if (prev - best < opt.stop_improvement_db) {
            prev = std::min(prev, best);
            break;
        }
        prev = best;
    }

    report.refined = cur;
    report.depth_seed = run_full(s, seed).metrics.depth_db;
    report.depth_refined = run_full(s, cur).metrics.depth_db;
    require_finite(report.depth_refined, "refined depth");
    return report;
}

double verify_phase_constant(const LinkScenario& s) {
    if (!std::holds_alternative<ToneSpec>(s.if_signal))
        throw ValidationError("verify_phase_constant needs a single-tone IF signal");
    const auto sic = analytic_settings(s);
    const ResidualEvaluator ev(s, sic);
    const double period = 1.0 / s.if_frequency();
    constexpr int kPoints = 720;
    // Scan the second period so the golden-section bracket stays non-negative.
    const double start = period;
    const double step = period / kPoints;
    double best = std::numeric_limits<double>::infinity();
    double worst = -best;
    double best_tau = start;
    for (int i = 0; i < kPoints; ++i) {
        const double t = start + step * i;
        const double r = ev.residual_db(sic.alpha, t);
        if (r < best) best = r, best_tau = t;
        worst = std::max(worst, r);
    }
    if (!(worst - best > 1.0)) throw DegenerateScan("residual does not vary with tau2; is the SI path enabled?");
    const auto [t_opt, r_opt] =
        golden_section([&](double t) { return ev.residual_db(sic.alpha, t); }, best_tau - step, best_tau + step, 1e-16);
    const double tau_star = r_opt < best ? t_opt : best_tau;
    return wrap_phase(kTwoPi * s.if_frequency() * tau_star - kTwoPi * s.rf_frequency() * s.si_path.delay);
}

}  // namespace rofsim
