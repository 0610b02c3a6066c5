#pragma once

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <functional>
#include <limits>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "analytic.hpp"
#include "errors.hpp"
#include "link.hpp"
#include "polarimeter.hpp"
#include "ssfm.hpp"
#include "units.hpp"

namespace nldp {

enum class Mode { comparative, distance_sweep, power_sweep, analytic_only };

inline std::string to_string(Mode m) {
    switch (m) {
        case Mode::comparative: return "comparative";
        case Mode::distance_sweep: return "distance_sweep";
        case Mode::power_sweep: return "power_sweep";
        case Mode::analytic_only: return "analytic_only";
    }
    return "?";
}

// Desk-scale scenario. Link, fiber and polarimeter defaults here differ from
// the struct defaults: the loading band is 200 GHz with the full-band loading
// density, and the polarimeter is time-compressed to the 10 ns window.
struct ScenarioConfig {
    Mode mode = Mode::comparative;
    FiberParams fiber;
    LinkConfig link;
    PolarimeterSettings polarimeter;
    PropagationSettings propagation;
    std::vector<int> circulations{1, 3, 5, 10, 20};
    std::vector<double> power_offsets_db{0.0, -1.0, -2.0};
    int power_sweep_circulations = 10;
    int ensemble_size = 32;
    std::uint64_t seed = 1;
    std::string output_dir = ".";

    double pitch = units::two_pi * 100e6;  // rad/s
    std::size_t samples = 0;               // 0 = smallest FFT-friendly size
    double probe_offset = 0.0;             // Hz from center_frequency
    double ase_scale_db = -32.0;           // receive ASE relative to the constant-gain model
    double receiver_osnr_db = std::numeric_limits<double>::quiet_NaN();  // overrides the ASE model when set
    double noise_boost_db = 5.0;
    int noise_draws = 4;
    double histogram_bin_width = 2e6;      // rad/s
    double nli_exclusion = 2e9;            // Hz around the probe excluded from the in-gap noise estimate

    ScenarioConfig() {
        link.n_spans = 110;
        link.omega_max = units::two_pi * 100e9;
        link.omega_min = units::two_pi * 50e9;
        link.gap_width = units::two_pi * 100e9;
        link.p_rep = units::dbm_to_w(4.0);
        link.repeater_band = units::two_pi * 200.1e9;
        polarimeter.sample_period = 312.5e-12;
        polarimeter.electrical_cutoff = units::two_pi * 0.96e9;
    }

    void validate() const {
        fiber.validate();
        link.validate();
        polarimeter.validate();
        propagation.validate();
        if (ensemble_size < 1) throw config_error("ensemble_size must be >= 1");
        if (mode == Mode::distance_sweep && circulations.empty()) throw config_error("circulations list is empty");
        if (mode == Mode::power_sweep && power_offsets_db.empty()) throw config_error("power_offsets_db list is empty");
        for (int c : circulations)
            if (c < 1) throw config_error("circulations must be >= 1");
        if (power_sweep_circulations < 1) throw config_error("power_sweep_circulations must be >= 1");
        if (!(pitch > 0.0)) throw config_error("pitch_mhz must be > 0");
        if (noise_draws < 1) throw config_error("noise_draws must be >= 1");
        if (!(histogram_bin_width > 0.0)) throw config_error("histogram_bin_width_krad_s must be > 0");
        if (std::abs(link.gap_width - 2.0 * link.omega_min) > 1e-6 * link.gap_width)
            throw config_error("gap width must equal twice omega_min");
    }
};

namespace detail {

// Fifteen significant digits survive a text round trip through the unit
// conversions unchanged.
inline std::string fmt_double(double v) {
    if (std::isnan(v)) return "auto";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char b[40];
    std::snprintf(b, sizeof b, "%.15g", v);
    return b;
}

inline double parse_double(const std::string& key, const std::string& v) {
    if (v == "inf") return std::numeric_limits<double>::infinity();
    if (v == "auto") return std::numeric_limits<double>::quiet_NaN();
    std::size_t pos = 0;
    double d;
    try {
        d = std::stod(v, &pos);
    } catch (const std::exception&) {
        throw config_error("key '" + key + "': not a number: " + v);
    }
    if (pos != v.size()) throw config_error("key '" + key + "': trailing characters in " + v);
    return d;
}

inline long long parse_int(const std::string& key, const std::string& v) {
    std::size_t pos = 0;
    long long d;
    try {
        d = std::stoll(v, &pos);
    } catch (const std::exception&) {
        throw config_error("key '" + key + "': not an integer: " + v);
    }
    if (pos != v.size()) throw config_error("key '" + key + "': trailing characters in " + v);
    return d;
}

inline bool parse_bool(const std::string& key, const std::string& v) {
    if (v == "true" || v == "1" || v == "on") return true;
    if (v == "false" || v == "0" || v == "off") return false;
    throw config_error("key '" + key + "': not a boolean: " + v);
}

inline std::vector<std::string> split_list(const std::string& v) {
    std::vector<std::string> out;
    std::stringstream ss(v);
    std::string item;
    while (std::getline(ss, item, ',')) {
        item.erase(0, item.find_first_not_of(" \t"));
        item.erase(item.find_last_not_of(" \t") + 1);
        if (!item.empty()) out.push_back(item);
    }
    return out;
}

inline std::string trim(std::string s) {
    s.erase(0, s.find_first_not_of(" \t\r"));
    const auto e = s.find_last_not_of(" \t\r");
    s.erase(e == std::string::npos ? 0 : e + 1);
    return s;
}

struct Key {
    std::string name;
    std::function<std::string(const ScenarioConfig&)> get;
    std::function<void(ScenarioConfig&, const std::string&)> set;
};

// Scalar key stored in SI units and exposed in `scale` units.
inline Key num(std::string name, double ScenarioConfig::*field, double scale = 1.0) {
    return {name, [=](const ScenarioConfig& c) { return fmt_double(c.*field / scale); },
            [=](ScenarioConfig& c, const std::string& v) { c.*field = parse_double(name, v) * scale; }};
}

template <class Get, class Set>
Key custom(std::string name, Get g, Set s) {
    return {std::move(name), g, s};
}

inline const std::vector<Key>& keys() {
    using C = ScenarioConfig;
    static const std::vector<Key> k = {
        custom("mode", [](const C& c) { return to_string(c.mode); },
               [](C& c, const std::string& v) {
                   if (v == "comparative") c.mode = Mode::comparative;
                   else if (v == "distance_sweep") c.mode = Mode::distance_sweep;
                   else if (v == "power_sweep") c.mode = Mode::power_sweep;
                   else if (v == "analytic_only") c.mode = Mode::analytic_only;
                   else throw config_error("key 'mode': unknown mode " + v);
               }),
        custom("seed", [](const C& c) { return std::to_string(c.seed); },
               [](C& c, const std::string& v) { c.seed = static_cast<std::uint64_t>(parse_int("seed", v)); }),
        custom("ensemble_size", [](const C& c) { return std::to_string(c.ensemble_size); },
               [](C& c, const std::string& v) { c.ensemble_size = static_cast<int>(parse_int("ensemble_size", v)); }),
        custom("output_dir", [](const C& c) { return c.output_dir; },
               [](C& c, const std::string& v) { c.output_dir = v; }),
        custom("circulations",
               [](const C& c) {
                   std::string s;
                   for (std::size_t i = 0; i < c.circulations.size(); ++i)
                       s += (i ? "," : "") + std::to_string(c.circulations[i]);
                   return s;
               },
               [](C& c, const std::string& v) {
                   c.circulations.clear();
                   for (const auto& t : split_list(v))
                       c.circulations.push_back(static_cast<int>(parse_int("circulations", t)));
               }),
        custom("power_offsets_db",
               [](const C& c) {
                   std::string s;
                   for (std::size_t i = 0; i < c.power_offsets_db.size(); ++i)
                       s += (i ? "," : "") + fmt_double(c.power_offsets_db[i]);
                   return s;
               },
               [](C& c, const std::string& v) {
                   c.power_offsets_db.clear();
                   for (const auto& t : split_list(v)) c.power_offsets_db.push_back(parse_double("power_offsets_db", t));
               }),
        custom("power_sweep_circulations", [](const C& c) { return std::to_string(c.power_sweep_circulations); },
               [](C& c, const std::string& v) {
                   c.power_sweep_circulations = static_cast<int>(parse_int("power_sweep_circulations", v));
               }),
        custom("n_spans", [](const C& c) { return std::to_string(c.link.n_spans); },
               [](C& c, const std::string& v) { c.link.n_spans = static_cast<int>(parse_int("n_spans", v)); }),
        custom("spans_per_circulation", [](const C& c) { return std::to_string(c.link.spans_per_circulation); },
               [](C& c, const std::string& v) {
                   c.link.spans_per_circulation = static_cast<int>(parse_int("spans_per_circulation", v));
               }),
        custom("span_length_km", [](const C& c) { return fmt_double(c.link.span_length / 1e3); },
               [](C& c, const std::string& v) { c.link.span_length = parse_double("span_length_km", v) * 1e3; }),
        custom("p_rep_dbm", [](const C& c) { return fmt_double(units::w_to_dbm(c.link.p_rep)); },
               [](C& c, const std::string& v) { c.link.p_rep = units::dbm_to_w(parse_double("p_rep_dbm", v)); }),
        custom("band_ghz", [](const C& c) { return fmt_double(2.0 * units::rad_s_to_hz(c.link.omega_max) / 1e9); },
               [](C& c, const std::string& v) {
                   c.link.omega_max = units::hz_to_rad_s(0.5 * parse_double("band_ghz", v) * 1e9);
               }),
        custom("gap_width_ghz", [](const C& c) { return fmt_double(units::rad_s_to_hz(c.link.gap_width) / 1e9); },
               [](C& c, const std::string& v) {
                   c.link.gap_width = units::hz_to_rad_s(parse_double("gap_width_ghz", v) * 1e9);
                   c.link.omega_min = 0.5 * c.link.gap_width;
               }),
        custom("repeater_band_ghz",
               [](const C& c) { return fmt_double(units::rad_s_to_hz(c.link.repeater_band) / 1e9); },
               [](C& c, const std::string& v) {
                   c.link.repeater_band = units::hz_to_rad_s(parse_double("repeater_band_ghz", v) * 1e9);
               }),
        custom("pitch_mhz", [](const C& c) { return fmt_double(units::rad_s_to_hz(c.pitch) / 1e6); },
               [](C& c, const std::string& v) { c.pitch = units::hz_to_rad_s(parse_double("pitch_mhz", v) * 1e6); }),
        custom("samples", [](const C& c) { return std::to_string(c.samples); },
               [](C& c, const std::string& v) {
                   const auto n = parse_int("samples", v);
                   if (n < 0) throw config_error("key 'samples': must be >= 0");
                   c.samples = static_cast<std::size_t>(n);
               }),
        custom("probe_power_dbm", [](const C& c) { return fmt_double(units::w_to_dbm(c.link.probe_power)); },
               [](C& c, const std::string& v) {
                   c.link.probe_power = units::dbm_to_w(parse_double("probe_power_dbm", v));
               }),
        num("probe_offset_ghz", &C::probe_offset, 1e9),
        custom("center_frequency_thz", [](const C& c) { return fmt_double(c.link.center_frequency / 1e12); },
               [](C& c, const std::string& v) {
                   c.link.center_frequency = parse_double("center_frequency_thz", v) * 1e12;
               }),
        custom("alpha_db_per_km", [](const C& c) { return fmt_double(units::per_m_to_db_per_km(c.fiber.alpha)); },
               [](C& c, const std::string& v) {
                   c.fiber.alpha = units::db_per_km_to_per_m(parse_double("alpha_db_per_km", v));
               }),
        custom("beta2_ps2_per_km", [](const C& c) { return fmt_double(c.fiber.beta2 / units::ps2_per_km_to_s2_per_m(1.0)); },
               [](C& c, const std::string& v) {
                   c.fiber.beta2 = units::ps2_per_km_to_s2_per_m(parse_double("beta2_ps2_per_km", v));
               }),
        custom("gamma_per_w_km", [](const C& c) { return fmt_double(c.fiber.gamma / units::per_w_km_to_per_w_m(1.0)); },
               [](C& c, const std::string& v) {
                   c.fiber.gamma = units::per_w_km_to_per_w_m(parse_double("gamma_per_w_km", v));
               }),
        custom("tau_p_ps_per_sqrt_km",
               [](const C& c) { return fmt_double(c.fiber.tau_p / units::ps_per_sqrt_km_to_s_per_sqrt_m(1.0)); },
               [](C& c, const std::string& v) {
                   c.fiber.tau_p = units::ps_per_sqrt_km_to_s_per_sqrt_m(parse_double("tau_p_ps_per_sqrt_km", v));
               }),
        custom("nf_db", [](const C& c) { return fmt_double(c.link.nf_db); },
               [](C& c, const std::string& v) { c.link.nf_db = parse_double("nf_db", v); }),
        custom("kicker", [](const C& c) { return std::string(c.link.kicker_enabled ? "true" : "false"); },
               [](C& c, const std::string& v) { c.link.kicker_enabled = parse_bool("kicker", v); }),
        custom("repeater_ase", [](const C& c) { return std::string(c.link.repeater_ase_enabled ? "true" : "false"); },
               [](C& c, const std::string& v) { c.link.repeater_ase_enabled = parse_bool("repeater_ase", v); }),
        custom("sample_period_ns", [](const C& c) { return fmt_double(c.polarimeter.sample_period / 1e-9); },
               [](C& c, const std::string& v) {
                   c.polarimeter.sample_period = parse_double("sample_period_ns", v) * 1e-9;
               }),
        custom("adc_bits", [](const C& c) { return std::to_string(c.polarimeter.adc_bits); },
               [](C& c, const std::string& v) { c.polarimeter.adc_bits = static_cast<int>(parse_int("adc_bits", v)); }),
        custom("electrical_cutoff_mhz",
               [](const C& c) { return fmt_double(units::rad_s_to_hz(c.polarimeter.electrical_cutoff) / 1e6); },
               [](C& c, const std::string& v) {
                   c.polarimeter.electrical_cutoff = units::hz_to_rad_s(parse_double("electrical_cutoff_mhz", v) * 1e6);
               }),
        custom("optical_filter_fwhm_ghz", [](const C& c) { return fmt_double(c.polarimeter.optical_filter_fwhm / 1e9); },
               [](C& c, const std::string& v) {
                   c.polarimeter.optical_filter_fwhm = parse_double("optical_filter_fwhm_ghz", v) * 1e9;
               }),
        num("receiver_osnr_db", &C::receiver_osnr_db),
        num("ase_scale_db", &C::ase_scale_db),
        num("noise_boost_db", &C::noise_boost_db),
        custom("noise_draws", [](const C& c) { return std::to_string(c.noise_draws); },
               [](C& c, const std::string& v) { c.noise_draws = static_cast<int>(parse_int("noise_draws", v)); }),
        num("histogram_bin_width_krad_s", &C::histogram_bin_width, 1e3),
        num("nli_exclusion_ghz", &C::nli_exclusion, 1e9),
        custom("max_nl_phase_rad", [](const C& c) { return fmt_double(c.propagation.max_nl_phase_per_step); },
               [](C& c, const std::string& v) {
                   c.propagation.max_nl_phase_per_step = parse_double("max_nl_phase_rad", v);
               }),
        custom("antisymmetric_term",
               [](const C& c) { return std::string(c.propagation.include_antisymmetric_term ? "true" : "false"); },
               [](C& c, const std::string& v) {
                   c.propagation.include_antisymmetric_term = parse_bool("antisymmetric_term", v);
               }),
        custom("coherent_term",
               [](const C& c) { return std::string(c.propagation.include_coherent_coupling_term ? "true" : "false"); },
               [](C& c, const std::string& v) {
                   c.propagation.include_coherent_coupling_term = parse_bool("coherent_term", v);
               }),
    };
    return k;
}

}  // namespace detail

// Apply one key=value assignment.
inline void set_config_value(ScenarioConfig& c, const std::string& key, const std::string& value) {
    for (const auto& k : detail::keys()) {
        if (k.name == key) {
            k.set(c, value);
            return;
        }
    }
    throw config_error("unknown key '" + key + "'");
}

// Flat key = value text; '#' starts a comment. Unknown keys are errors.
inline ScenarioConfig parse_config(std::istream& is, const std::string& source = "<config>") {
    ScenarioConfig c;
    std::string line;
    int lineno = 0;
    while (std::getline(is, line)) {
        ++lineno;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        line = detail::trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw config_error(source + ":" + std::to_string(lineno) + ": expected key = value");
        const std::string key = detail::trim(line.substr(0, eq));
        const std::string val = detail::trim(line.substr(eq + 1));
        try {
            set_config_value(c, key, val);
        } catch (const config_error& e) {
            throw config_error(source + ":" + std::to_string(lineno) + ": " + e.what());
        }
    }
    c.validate();
    return c;
}

inline ScenarioConfig load_config(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw config_error("cannot open config " + path);
    return parse_config(is, path);
}

// Resolved configuration as ordered key/value pairs.
inline std::vector<std::pair<std::string, std::string>> config_entries(const ScenarioConfig& c) {
    std::vector<std::pair<std::string, std::string>> out;
    for (const auto& k : detail::keys()) out.emplace_back(k.name, k.get(c));
    return out;
}

inline std::string format_config(const ScenarioConfig& c) {
    std::string s;
    for (const auto& [k, v] : config_entries(c)) s += k + " = " + v + "\n";
    return s;
}

}  // namespace nldp
