#include "rofsim/scenario_io.hpp"

#include <yaml-cpp/yaml.h>

#include <charconv>
#include <cmath>
#include <fstream>
#include <functional>
#include <initializer_list>
#include <limits>
#include <sstream>

#include "rofsim/errors.hpp"
#include "rofsim/units.hpp"

namespace rofsim {

namespace {

std::string where(const YAML::Node& n) {
    const auto m = n.Mark();
    return m.is_null() ? std::string() : " (line " + std::to_string(m.line + 1) + ")";
}

std::string join(const std::string& path, const std::string& key) { return path.empty() ? key : path + "." + key; }

/// Read access to one mapping of the document with strict key checking.
class Section {
public:
    Section(const YAML::Node& node, std::string path) : node_(node), path_(std::move(path)) {
        if (!node_.IsMap()) throw ParseError("'" + path_ + "' must be a mapping" + where(node_));
    }

    void allow_only(std::initializer_list<const char*> keys) const {
        for (const auto& kv : node_) {
            const auto key = kv.first.as<std::string>();
            bool known = false;
            for (const char* k : keys) known = known || key == k;
            if (!known) throw ParseError("unknown key '" + join(path_, key) + "'" + where(kv.first));
        }
    }

    bool has(const char* key) const { return static_cast<bool>(node_[key]); }

    YAML::Node get(const char* key) const {
        const YAML::Node n = node_[key];
        if (!n) throw ParseError("missing key '" + join(path_, key) + "'" + where(node_));
        return n;
    }

    Section section(const char* key) const { return Section(get(key), join(path_, key)); }

    double number(const char* key) const {
        const YAML::Node n = get(key);
        try {
            if (!n.IsScalar()) throw YAML::Exception(n.Mark(), "not a scalar");
            return n.as<double>();
        } catch (const YAML::Exception&) {
            throw ParseError("'" + join(path_, key) + "' must be a number" + where(n));
        }
    }

    double number_or(const char* key, double fallback) const { return has(key) ? number(key) : fallback; }

    std::string text(const char* key) const {
        const YAML::Node n = get(key);
        if (!n.IsScalar()) throw ParseError("'" + join(path_, key) + "' must be a string" + where(n));
        return n.as<std::string>();
    }

    std::uint64_t integer(const char* key) const {
        const YAML::Node n = get(key);
        try {
            return n.as<std::uint64_t>();
        } catch (const YAML::Exception&) {
            throw ParseError("'" + join(path_, key) + "' must be a non-negative integer" + where(n));
        }
    }

    const YAML::Node& node() const { return node_; }
    const std::string& path() const { return path_; }

private:
    YAML::Node node_;
    std::string path_;
};

ModulatorParams read_modulator(const Section& s, Sideband sb) {
    s.allow_only({"v_pi_v", "insertion_loss_db"});
    return {s.number("v_pi_v"), s.number("insertion_loss_db"), sb};
}

FiberParams read_fiber(const Section& s) {
    s.allow_only({"length_km", "dispersion_ps_nm_km", "attenuation_db_km"});
    FiberParams f;
    f.length_km = s.number("length_km");
    f.dispersion_ps_nm_km = s.number("dispersion_ps_nm_km");
    f.attenuation_db_km = s.number("attenuation_db_km");
    return f;
}

ToneSpec read_tone(const Section& s, double frequency) {
    return {tone_amplitude_from_dbm(s.number("power_dbm")), frequency, s.number("phase_rad")};
}

QamSignalSpec read_qam(const Section& s, double frequency) {
    QamSignalSpec q;
    q.center_frequency = frequency;
    q.power_dbm = s.number("power_dbm");
    q.symbol_rate = s.number("symbol_rate_mbaud") * 1e6;
    q.rolloff = s.number("rolloff");
    return q;
}

SignalSpec read_if(const Section& s) {
    const auto kind = s.text("kind");
    if (kind == "tone") {
        s.allow_only({"kind", "frequency_ghz", "power_dbm", "phase_rad"});
        return read_tone(s, s.number("frequency_ghz") * 1e9);
    }
    if (kind == "qam") {
        s.allow_only({"kind", "frequency_ghz", "power_dbm", "symbol_rate_mbaud", "rolloff"});
        return read_qam(s, s.number("frequency_ghz") * 1e9);
    }
    throw ParseError("'" + s.path() + ".kind' must be tone or qam, not '" + kind + "'" + where(s.get("kind")));
}

std::optional<SoiSpec> read_soi(const Section& s, double frequency) {
    const auto kind = s.text("kind");
    if (kind == "none") {
        s.allow_only({"kind"});
        return std::nullopt;
    }
    if (kind == "tone") {
        s.allow_only({"kind", "power_dbm", "phase_rad", "arrival_delay_ns"});
        return SoiSpec{read_tone(s, frequency), s.number("arrival_delay_ns") * 1e-9};
    }
    if (kind == "qam") {
        s.allow_only({"kind", "power_dbm", "symbol_rate_mbaud", "rolloff", "arrival_delay_ns"});
        return SoiSpec{read_qam(s, frequency), s.number("arrival_delay_ns") * 1e-9};
    }
    throw ParseError("'soi.kind' must be none, tone or qam, not '" + kind + "'" + where(s.get("kind")));
}

LinkScenario from_document(const YAML::Node& doc) {
    const Section top(doc, "");
    top.allow_only({"name", "description", "seed", "grid", "laser", "if_signal", "lo_signal", "modulators", "edfa",
                    "downlink_fiber", "uplink_fiber", "si_path", "soi", "filters", "responsivity_a_w"});
    LinkScenario s;
    s.name = top.text("name");
    s.description = top.text("description");
    const std::uint64_t seed = top.integer("seed");

    if (top.has("grid")) {
        const auto g = top.section("grid");
        g.allow_only({"sample_rate_gsps", "n_samples", "rbw_khz"});
        s.grid.sample_rate = g.number_or("sample_rate_gsps", s.grid.sample_rate / 1e9) * 1e9;
        if (g.has("n_samples")) s.grid.n_samples = static_cast<std::size_t>(g.integer("n_samples"));
        s.rbw = g.number_or("rbw_khz", s.rbw / 1e3) * 1e3;
    }

    const auto laser = top.section("laser");
    laser.allow_only({"power_dbm", "wavelength_nm"});
    s.laser = {laser.number("power_dbm"), laser.number("wavelength_nm")};

    s.if_signal = read_if(top.section("if_signal"));
    const auto lo = top.section("lo_signal");
    lo.allow_only({"frequency_ghz", "power_dbm", "phase_rad"});
    s.lo_signal = read_tone(lo, lo.number("frequency_ghz") * 1e9);

    const auto mods = top.section("modulators");
    mods.allow_only({"if_mzm", "lo_mzm", "uplink_mzm"});
    s.if_mzm = read_modulator(mods.section("if_mzm"), Sideband::lower);
    s.lo_mzm = read_modulator(mods.section("lo_mzm"), Sideband::upper);
    s.uplink_mzm = read_modulator(mods.section("uplink_mzm"), Sideband::lower);

    const auto edfa = top.section("edfa");
    edfa.allow_only({"gain_db"});
    s.edfa_gain_db = edfa.number("gain_db");

    s.downlink_fiber = read_fiber(top.section("downlink_fiber"));
    s.uplink_fiber = read_fiber(top.section("uplink_fiber"));

    const auto si = top.section("si_path");
    si.allow_only({"gain_db", "delay_ns"});
    s.si_path = {si.number("gain_db"), si.number("delay_ns") * 1e-9};

    s.soi = read_soi(top.section("soi"), s.rf_frequency());

    const auto filters = top.section("filters");
    filters.allow_only({"bpf_ghz", "lpf_ghz"});
    const YAML::Node bpf = filters.get("bpf_ghz");
    if (!bpf.IsSequence() || bpf.size() != 2)
        throw ParseError("'filters.bpf_ghz' must be a list of two edges" + where(bpf));
    try {
        s.bpf = {bpf[0].as<double>() * 1e9, bpf[1].as<double>() * 1e9};
    } catch (const YAML::Exception&) {
        throw ParseError("'filters.bpf_ghz' edges must be numbers" + where(bpf));
    }
    s.lpf = filters.number("lpf_ghz") * 1e9;
    s.responsivity = top.number_or("responsivity_a_w", s.responsivity);

    s.reseed(seed);
    s.validate();
    return s;
}

// File text for `x` whose decoded value is exactly `x`, searching a few
// ulps around the nominal encoding when the unit conversion rounds.
std::string encode(double x, double nominal, const std::function<double(double)>& decode) {
    if (!std::isfinite(nominal) || decode(nominal) == x) return format_number(nominal);
    double up = nominal, down = nominal;
    for (int i = 0; i < 64; ++i) {
        up = std::nextafter(up, std::numeric_limits<double>::infinity());
        down = std::nextafter(down, -std::numeric_limits<double>::infinity());
        if (decode(up) == x) return format_number(up);
        if (decode(down) == x) return format_number(down);
    }
    return format_number(nominal);
}

std::string scaled(double x, double unit) {
    return encode(x, x / unit, [unit](double v) { return v * unit; });
}

std::string tone_power(double amplitude) {
    const double dbm = watts_to_dbm(amplitude * amplitude / (2.0 * kReferenceOhms));
    return encode(amplitude, dbm, [](double p) { return tone_amplitude_from_dbm(p); });
}

std::string plain(double x) { return format_number(x); }

void emit_tone(YAML::Emitter& e, const ToneSpec& t) {
    e << YAML::Key << "power_dbm" << YAML::Value << tone_power(t.amplitude);
    e << YAML::Key << "phase_rad" << YAML::Value << plain(t.phase);
}

void emit_qam(YAML::Emitter& e, const QamSignalSpec& q) {
    e << YAML::Key << "power_dbm" << YAML::Value << plain(q.power_dbm);
    e << YAML::Key << "symbol_rate_mbaud" << YAML::Value << scaled(q.symbol_rate, 1e6);
    e << YAML::Key << "rolloff" << YAML::Value << plain(q.rolloff);
}

void emit_modulator(YAML::Emitter& e, const char* name, const ModulatorParams& m) {
    e << YAML::Key << name << YAML::Value << YAML::BeginMap;
    e << YAML::Key << "v_pi_v" << YAML::Value << plain(m.v_pi);
    e << YAML::Key << "insertion_loss_db" << YAML::Value << plain(m.insertion_loss_db);
    e << YAML::EndMap;
}

void emit_fiber(YAML::Emitter& e, const char* name, const FiberParams& f) {
    e << YAML::Key << name << YAML::Value << YAML::BeginMap;
    e << YAML::Key << "length_km" << YAML::Value << plain(f.length_km);
    e << YAML::Key << "dispersion_ps_nm_km" << YAML::Value << plain(f.dispersion_ps_nm_km);
    e << YAML::Key << "attenuation_db_km" << YAML::Value << plain(f.attenuation_db_km);
    e << YAML::EndMap;
}

YAML::Node descend(YAML::Node node, const std::string& dotted_key) {
    std::stringstream parts(dotted_key);
    std::string part;
    while (std::getline(parts, part, '.')) {
        if (node.IsMap() && node[part]) {
            node.reset(node[part]);
        } else if (node.IsSequence()) {
            std::size_t idx = 0;
            const auto [p, ec] = std::from_chars(part.data(), part.data() + part.size(), idx);
            if (ec != std::errc() || p != part.data() + part.size() || idx >= node.size())
                throw AxisError("'" + dotted_key + "': no element '" + part + "'");
            node.reset(node[idx]);
        } else {
            throw AxisError("'" + dotted_key + "' is not a scenario key");
        }
    }
    return node;
}

}  // namespace

std::string format_number(double v) {
    if (std::isnan(v)) return ".nan";
    if (std::isinf(v)) return v > 0 ? ".inf" : "-.inf";
    char buf[64];
    const auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, end);
}

LinkScenario parse_scenario(const std::string& text, const std::string& source) {
    YAML::Node doc;
    try {
        doc = YAML::Load(text);
    } catch (const YAML::ParserException& e) {
        throw ParseError(source + ": line " + std::to_string(e.mark.line + 1) + ": " + e.msg);
    }
    if (!doc || doc.IsNull()) throw ParseError(source + ": empty scenario");
    return from_document(doc);
}

LinkScenario load_scenario(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open scenario file " + path.string());
    std::stringstream buf;
    buf << in.rdbuf();
    return parse_scenario(buf.str(), path.string());
}

std::string save_scenario(const LinkScenario& s) {
    YAML::Emitter e;
    e << YAML::BeginMap;
    e << YAML::Key << "name" << YAML::Value << s.name;
    e << YAML::Key << "description" << YAML::Value << s.description;
    e << YAML::Key << "seed" << YAML::Value << s.seed;

    e << YAML::Key << "grid" << YAML::Value << YAML::BeginMap;
    e << YAML::Key << "sample_rate_gsps" << YAML::Value << scaled(s.grid.sample_rate, 1e9);
    e << YAML::Key << "n_samples" << YAML::Value << s.grid.n_samples;
    e << YAML::Key << "rbw_khz" << YAML::Value << scaled(s.rbw, 1e3);
    e << YAML::EndMap;

    e << YAML::Key << "laser" << YAML::Value << YAML::BeginMap;
    e << YAML::Key << "power_dbm" << YAML::Value << plain(s.laser.power_dbm);
    e << YAML::Key << "wavelength_nm" << YAML::Value << plain(s.laser.wavelength_nm);
    e << YAML::EndMap;

    e << YAML::Key << "if_signal" << YAML::Value << YAML::BeginMap;
    if (const auto* t = std::get_if<ToneSpec>(&s.if_signal)) {
        e << YAML::Key << "kind" << YAML::Value << "tone";
        e << YAML::Key << "frequency_ghz" << YAML::Value << scaled(t->frequency, 1e9);
        emit_tone(e, *t);
    } else {
        const auto& q = std::get<QamSignalSpec>(s.if_signal);
        e << YAML::Key << "kind" << YAML::Value << "qam";
        e << YAML::Key << "frequency_ghz" << YAML::Value << scaled(q.center_frequency, 1e9);
        emit_qam(e, q);
    }
    e << YAML::EndMap;

    e << YAML::Key << "lo_signal" << YAML::Value << YAML::BeginMap;
    e << YAML::Key << "frequency_ghz" << YAML::Value << scaled(s.lo_signal.frequency, 1e9);
    emit_tone(e, s.lo_signal);
    e << YAML::EndMap;

    e << YAML::Key << "modulators" << YAML::Value << YAML::BeginMap;
    emit_modulator(e, "if_mzm", s.if_mzm);
    emit_modulator(e, "lo_mzm", s.lo_mzm);
    emit_modulator(e, "uplink_mzm", s.uplink_mzm);
    e << YAML::EndMap;

    e << YAML::Key << "edfa" << YAML::Value << YAML::BeginMap;
    e << YAML::Key << "gain_db" << YAML::Value << plain(s.edfa_gain_db);
    e << YAML::EndMap;

    emit_fiber(e, "downlink_fiber", s.downlink_fiber);
    emit_fiber(e, "uplink_fiber", s.uplink_fiber);

    e << YAML::Key << "si_path" << YAML::Value << YAML::BeginMap;
    e << YAML::Key << "gain_db" << YAML::Value << plain(s.si_path.gain_db);
    e << YAML::Key << "delay_ns" << YAML::Value << scaled(s.si_path.delay, 1e-9);
    e << YAML::EndMap;

    e << YAML::Key << "soi" << YAML::Value << YAML::BeginMap;
    if (!s.soi) {
        e << YAML::Key << "kind" << YAML::Value << "none";
    } else if (const auto* t = std::get_if<ToneSpec>(&s.soi->signal)) {
        e << YAML::Key << "kind" << YAML::Value << "tone";
        emit_tone(e, *t);
        e << YAML::Key << "arrival_delay_ns" << YAML::Value << scaled(s.soi->arrival_delay, 1e-9);
    } else {
        e << YAML::Key << "kind" << YAML::Value << "qam";
        emit_qam(e, std::get<QamSignalSpec>(s.soi->signal));
        e << YAML::Key << "arrival_delay_ns" << YAML::Value << scaled(s.soi->arrival_delay, 1e-9);
    }
    e << YAML::EndMap;

    e << YAML::Key << "filters" << YAML::Value << YAML::BeginMap;
    e << YAML::Key << "bpf_ghz" << YAML::Value << YAML::Flow << YAML::BeginSeq << scaled(s.bpf[0], 1e9)
      << scaled(s.bpf[1], 1e9) << YAML::EndSeq;
    e << YAML::Key << "lpf_ghz" << YAML::Value << scaled(s.lpf, 1e9);
    e << YAML::EndMap;

    e << YAML::Key << "responsivity_a_w" << YAML::Value << plain(s.responsivity);
    e << YAML::EndMap;
    return std::string(e.c_str()) + "\n";
}

LinkScenario with_override(const LinkScenario& s, const std::string& dotted_key, double value) {
    YAML::Node doc = YAML::Load(save_scenario(s));
    YAML::Node target = descend(doc, dotted_key);
    if (!target.IsScalar()) throw AxisError("'" + dotted_key + "' is a section, not a numeric key");
    try {
        (void)target.as<double>();
    } catch (const YAML::Exception&) {
        throw AxisError("'" + dotted_key + "' is not numeric");
    }
    target = format_number(value);
    YAML::Emitter e;
    e << doc;
    return parse_scenario(e.c_str(), "override of " + dotted_key);
}

}  // namespace rofsim
