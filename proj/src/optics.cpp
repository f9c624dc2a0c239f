#include "rofsim/optics.hpp"

#include <cmath>
#include <string>
#include <limits>

#include "rofsim/errors.hpp"
#include "rofsim/fft.hpp"
#include "rofsim/units.hpp"

namespace rofsim {
namespace {

void require_same_grid(const OpticalField& a, const OpticalField& b, const char* what) {
    rofsim::require_same_grid(a.grid, b.grid, what);
    if (a.carrier_frequency != b.carrier_frequency)
        throw GridError(std::string(what) + ": fields reference different optical carriers");
}

void scale(std::vector<cplx>& v, cplx s) {
    for (auto& e : v) e *= s;
}

double mean_norm(const std::vector<cplx>& v) {
    double acc = 0.0;
    for (const auto& e : v) acc += std::norm(e);
    return v.empty() ? 0.0 : acc / static_cast<double>(v.size());
}

bool all_zero(const std::vector<cplx>& v) {
    for (const auto& e : v)
        if (e != cplx(0.0, 0.0)) return false;
    return true;
}

}  // namespace

OpticalField OpticalField::dark(const TimeGrid& grid, double carrier_frequency) {
    grid.validate();
    return OpticalField{grid, carrier_frequency, std::vector<cplx>(grid.n_samples),
                        std::vector<cplx>(grid.n_samples)};
}

double OpticalField::power() const { return mean_norm(x) + mean_norm(y); }

double OpticalField::rail_power(Rail r) const { return mean_norm(r == Rail::x ? x : y); }

bool OpticalField::rail_is_dark(Rail r) const { return all_zero(r == Rail::x ? x : y); }

double FiberParams::beta2() const {
    const double d_si = dispersion_ps_nm_km * 1e-6;  // ps/(nm km) -> s/m^2
    const double lambda = reference_wavelength_nm * 1e-9;
    return -d_si * lambda * lambda / (kTwoPi * kSpeedOfLight);
}

double modulation_index(double drive_amplitude, const ModulatorParams& params) {
    return kPi * drive_amplitude / (std::sqrt(2.0) * params.v_pi);
}

double carrier_from_wavelength(double wavelength_nm) { return kSpeedOfLight / (wavelength_nm * 1e-9); }

OpticalField laser_cw(double power_dbm, double carrier_frequency, Rail rail, const TimeGrid& grid) {
    if (std::isnan(power_dbm) || power_dbm == std::numeric_limits<double>::infinity())
        throw ValidationError("laser power must be finite or -infinity");
    auto f = OpticalField::dark(grid, carrier_frequency);
    if (power_dbm == -std::numeric_limits<double>::infinity()) return f;
    const double amp = std::sqrt(dbm_to_watts(power_dbm));
    auto& r = rail == Rail::x ? f.x : f.y;
    for (auto& e : r) e = amp;
    return f;
}

std::pair<SampledWaveform, SampledWaveform> hybrid_coupler_90(const SampledWaveform& drive) {
    if (!drive.is_real()) throw ValidationError("hybrid coupler drive must be real");
    const double s = 1.0 / std::sqrt(2.0);
    SampledWaveform in_phase = drive * s;
    SampledWaveform quadrature = in_phase;
    // +90 degrees on positive frequencies, -90 on negative; DC and Nyquist
    // have no quadrature component.
    fft::forward(quadrature.samples);
    const std::size_t n = quadrature.size();
    for (std::size_t k = 0; k < n; ++k) {
        if (k == 0 || (n % 2 == 0 && k == n / 2)) quadrature.samples[k] = 0.0;
        else if (k < (n + 1) / 2) quadrature.samples[k] *= cplx(0.0, 1.0);
        else quadrature.samples[k] *= cplx(0.0, -1.0);
    }
    fft::inverse(quadrature.samples);
    for (auto& v : quadrature.samples) v = {v.real(), 0.0};
    return {std::move(in_phase), std::move(quadrature)};
}

OpticalField dd_mzm_ssb(const OpticalField& carrier, const SampledWaveform& drive, const ModulatorParams& params) {
    rofsim::require_same_grid(carrier.grid, drive.grid, "dd_mzm_ssb");
    if (!(params.v_pi > 0.0)) throw ValidationError("modulator v_pi must be positive");
    if (!(params.insertion_loss_db >= 0.0)) throw ValidationError("modulator insertion loss must be >= 0 dB");
    const bool x_dark = carrier.rail_is_dark(Rail::x);
    const bool y_dark = carrier.rail_is_dark(Rail::y);
    if (!x_dark && !y_dark) throw RailConflict("dd_mzm_ssb: carrier must occupy a single rail");
    const Rail rail = x_dark && !y_dark ? Rail::y : Rail::x;

    const auto [in_phase, quadrature] = hybrid_coupler_90(drive);
    // Arm 1 takes the quadrature output (sign picks the sideband), arm 2 the
    // in-phase output plus the pi/2 bias:
    //   E = E_in (exp(j*phi1) + exp(j*(phi2 + pi/2))) / 2
    // which leaves carrier (sqrt2/2) J0 e^{j pi/4} and sideband J1 e^{j pi}.
    const double sign = params.sideband == Sideband::upper ? 1.0 : -1.0;
    const double k = kPi / params.v_pi;
    const double loss = db_to_amplitude_ratio(-params.insertion_loss_db);
    const cplx bias = std::polar(1.0, kPi / 2.0);

    OpticalField out = OpticalField::dark(carrier.grid, carrier.carrier_frequency);
    const auto& in = rail == Rail::x ? carrier.x : carrier.y;
    auto& dst = rail == Rail::x ? out.x : out.y;
    for (std::size_t i = 0; i < in.size(); ++i) {
        const double phi1 = sign * k * quadrature.samples[i].real();
        const double phi2 = k * in_phase.samples[i].real();
        dst[i] = in[i] * 0.5 * loss * (std::polar(1.0, phi1) + bias * std::polar(1.0, phi2));
    }
    return out;
}

SsbCoefficients ssb_smallsignal_coefficients(double m) {
    if (!(m >= 0.0)) throw ValidationError("modulation index must be >= 0");
    return {std::sqrt(2.0) / 2.0 * std::cyl_bessel_j(0.0, m) * std::polar(1.0, kPi / 4.0),
            std::cyl_bessel_j(1.0, m) * std::polar(1.0, kPi)};
}

OpticalField dp_bpsk_modulate(const OpticalField& carrier, const SampledWaveform& if_drive,
                              const SampledWaveform& lo_drive, const ModulatorParams& p_if,
                              const ModulatorParams& p_lo) {
    rofsim::require_same_grid(carrier.grid, if_drive.grid, "dp_bpsk_modulate");
    rofsim::require_same_grid(carrier.grid, lo_drive.grid, "dp_bpsk_modulate");
    const bool x_dark = carrier.rail_is_dark(Rail::x);
    const bool y_dark = carrier.rail_is_dark(Rail::y);
    if (!x_dark && !y_dark) throw RailConflict("dp_bpsk_modulate: carrier must occupy a single rail");
    const auto& in = x_dark ? carrier.y : carrier.x;

    // 3 dB split into the two sub-modulators; the Y branch passes the
    // 90-degree polarization rotator before its modulator.
    const double s = 1.0 / std::sqrt(2.0);
    OpticalField x_branch = OpticalField::dark(carrier.grid, carrier.carrier_frequency);
    OpticalField y_branch = OpticalField::dark(carrier.grid, carrier.carrier_frequency);
    for (std::size_t i = 0; i < in.size(); ++i) {
        x_branch.x[i] = in[i] * s;
        y_branch.y[i] = in[i] * s;
    }
    return pbc(dd_mzm_ssb(x_branch, if_drive, p_if), dd_mzm_ssb(y_branch, lo_drive, p_lo));
}

OpticalField apply_jones(const OpticalField& field, const JonesRotation& r) {
    const double c = std::cos(r.angle);
    const double s = std::sin(r.angle);
    const cplx ep = std::polar(1.0, 0.5 * r.differential_phase);
    const cplx em = std::conj(ep);
    OpticalField out = field;
    for (std::size_t i = 0; i < field.x.size(); ++i) {
        const cplx ex = field.x[i] * ep;
        const cplx ey = field.y[i] * em;
        out.x[i] = c * ex - s * ey;
        out.y[i] = s * ex + c * ey;
    }
    return out;
}

OpticalField polarizer(const OpticalField& field, double angle) {
    const double c = std::cos(angle);
    const double s = std::sin(angle);
    OpticalField out = OpticalField::dark(field.grid, field.carrier_frequency);
    for (std::size_t i = 0; i < field.x.size(); ++i) out.x[i] = c * field.x[i] + s * field.y[i];
    return out;
}

std::pair<OpticalField, OpticalField> pbs(const OpticalField& field) {
    OpticalField xo = OpticalField::dark(field.grid, field.carrier_frequency);
    OpticalField yo = xo;
    xo.x = field.x;
    yo.y = field.y;
    return {std::move(xo), std::move(yo)};
}

OpticalField pbc(const OpticalField& x, const OpticalField& y) {
    require_same_grid(x, y, "pbc");
    if (!x.rail_is_dark(Rail::y) || !y.rail_is_dark(Rail::x))
        throw RailConflict("pbc: inputs must occupy complementary rails");
    OpticalField out = x;
    out.y = y.y;
    return out;
}

OpticalField fiber_propagate(const OpticalField& field, const FiberParams& fp) {
    if (!(fp.length_km >= 0.0)) throw ValidationError("fiber length must be >= 0");
    if (!(fp.attenuation_db_km >= 0.0)) throw ValidationError("fiber attenuation must be >= 0");
    if (fp.length_km == 0.0) return field;
    const double length_m = fp.length_km * 1e3;
    const double half_b2l = 0.5 * fp.beta2() * length_m;
    const double loss = db_to_amplitude_ratio(-fp.attenuation_db_km * fp.length_km);
    auto h = [&](double f) {
        const double w = kTwoPi * f;
        return loss * std::polar(1.0, half_b2l * w * w);
    };
    OpticalField out = field;
    if (!field.rail_is_dark(Rail::x)) fft::apply_transfer(out.x, field.grid.sample_rate, h);
    if (!field.rail_is_dark(Rail::y)) fft::apply_transfer(out.y, field.grid.sample_rate, h);
    return out;
}

OpticalField attenuate(const OpticalField& field, double alpha) {
    if (alpha > 1.0) throw GainNotAllowed("attenuator cannot provide gain (alpha = " + std::to_string(alpha) + ")");
    if (!(alpha >= 0.0)) throw ValidationError("attenuation alpha must be >= 0");
    OpticalField out = field;
    const double a = std::sqrt(alpha);
    scale(out.x, a);
    scale(out.y, a);
    return out;
}

OpticalField delay_line(const OpticalField& field, double tau) {
    if (!(tau >= 0.0)) throw ValidationError("optical delay must be >= 0");
    if (tau == 0.0) return field;
    const double cycles = field.carrier_frequency * tau;
    const cplx carrier_phase = std::polar(1.0, -kTwoPi * (cycles - std::floor(cycles)));
    auto h = [&](double f) { return carrier_phase * std::polar(1.0, -kTwoPi * f * tau); };
    OpticalField out = field;
    if (!field.rail_is_dark(Rail::x)) fft::apply_transfer(out.x, field.grid.sample_rate, h);
    if (!field.rail_is_dark(Rail::y)) fft::apply_transfer(out.y, field.grid.sample_rate, h);
    return out;
}

OpticalField amplify(const OpticalField& field, double gain_db) {
    OpticalField out = field;
    const double g = db_to_amplitude_ratio(gain_db);
    scale(out.x, g);
    scale(out.y, g);
    return out;
}

std::pair<OpticalField, OpticalField> split_3db(const OpticalField& field) {
    OpticalField half = field;
    const double s = 1.0 / std::sqrt(2.0);
    scale(half.x, s);
    scale(half.y, s);
    return {half, half};
}

SampledWaveform photodetect(const OpticalField& field, double responsivity) {
    auto out = SampledWaveform::zeros(field.grid);
    for (std::size_t i = 0; i < field.x.size(); ++i)
        out.samples[i] = responsivity * (std::norm(field.x[i]) + std::norm(field.y[i]));
    return out;
}

SampledWaveform balanced_detect(const OpticalField& plus, const OpticalField& minus, double responsivity) {
    require_same_grid(plus, minus, "balanced_detect");
    auto out = photodetect(plus, responsivity);
    out -= photodetect(minus, responsivity);
    return out;
}

}  // namespace rofsim
