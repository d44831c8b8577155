#pragma once

// Config file format: a TOML subset with sections [cavity], [[rods]] (x4),
// [gas], [pdh], [lockin], [noise], [servo], [run]. All quantities are SI
// with the unit spelled in the key suffix. Unknown sections or keys are
// rejected with the offending line; missing sections fall back to the
// documented defaults. A canonical serialization (fixed section order,
// sorted keys, %.17g numbers) feeds a 64-bit FNV-1a hash so identical
// configs hash identically on every platform.

#include <array>
#include <cctype>
#include <cerrno>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "menr/errors.hpp"
#include "menr/experiment.hpp"

namespace menr {
namespace io {

namespace detail {

struct Value {
  enum class Kind { number, string, boolean };
  Kind kind = Kind::number;
  double num = 0.0;
  std::uint64_t uint = 0;  // valid when is_integer
  bool is_integer = false;
  std::string str;
  bool flag = false;
  int line = 0;
};

inline std::string trim(const std::string& s) {
  std::size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return s.substr(b, e - b);
}

// Strips a trailing comment that is not inside a quoted string.
inline std::string strip_comment(const std::string& s) {
  bool quoted = false;
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (s[i] == '"') quoted = !quoted;
    if (s[i] == '#' && !quoted) return s.substr(0, i);
  }
  return s;
}

inline Value parse_value(const std::string& raw, int line) {
  Value v;
  v.line = line;
  const std::string s = trim(raw);
  if (s.empty()) throw ConfigError("missing value", line);
  if (s.front() == '"') {
    if (s.size() < 2 || s.back() != '"')
      throw ConfigError("unterminated string", line);
    v.kind = Value::Kind::string;
    v.str = s.substr(1, s.size() - 2);
    if (v.str.find('"') != std::string::npos)
      throw ConfigError("nested quotes are not supported", line);
    return v;
  }
  if (s == "true" || s == "false") {
    v.kind = Value::Kind::boolean;
    v.flag = (s == "true");
    return v;
  }
  errno = 0;
  char* end = nullptr;
  v.num = std::strtod(s.c_str(), &end);
  if (end == s.c_str() || *end != '\0' || errno == ERANGE)
    throw ConfigError("cannot parse value '" + s + "'", line);
  if (s.find_first_of(".eE") == std::string::npos) {
    v.is_integer = true;
    errno = 0;
    if (s.front() == '-') {
      const long long ll = std::strtoll(s.c_str(), &end, 10);
      v.uint = static_cast<std::uint64_t>(ll);
    } else {
      v.uint = std::strtoull(s.c_str(), &end, 10);
    }
    if (errno == ERANGE) v.is_integer = false;
  }
  return v;
}

inline double as_number(const Value& v, const std::string& key) {
  if (v.kind != Value::Kind::number)
    throw ConfigError("key '" + key + "' expects a number", v.line);
  return v.num;
}

inline int as_sign(const Value& v, const std::string& key) {
  if (v.kind != Value::Kind::number || !v.is_integer)
    throw ConfigError("key '" + key + "' expects -1, 0 or +1", v.line);
  const double n = v.num;
  if (n != -1.0 && n != 0.0 && n != 1.0)
    throw ConfigError("key '" + key + "' expects -1, 0 or +1", v.line);
  return static_cast<int>(n);
}

inline int as_int(const Value& v, const std::string& key) {
  if (v.kind != Value::Kind::number || !v.is_integer)
    throw ConfigError("key '" + key + "' expects an integer", v.line);
  return static_cast<int>(v.num);
}

inline std::uint64_t as_uint64(const Value& v, const std::string& key) {
  if (v.kind != Value::Kind::number || !v.is_integer || v.num < 0.0)
    throw ConfigError("key '" + key + "' expects a non-negative integer", v.line);
  return v.uint;
}

inline std::string as_string(const Value& v, const std::string& key) {
  if (v.kind != Value::Kind::string)
    throw ConfigError("key '" + key + "' expects a quoted string", v.line);
  return v.str;
}

inline bool as_bool(const Value& v, const std::string& key) {
  if (v.kind != Value::Kind::boolean)
    throw ConfigError("key '" + key + "' expects true or false", v.line);
  return v.flag;
}

// Unknown-key diagnostic with a unit-suffix hint when the stem matches a
// known key (wavelength_nm vs wavelength_m and the like).
[[noreturn]] inline void unknown_key(const std::string& section,
                                     const std::string& key,
                                     const std::vector<std::string>& known,
                                     int line) {
  auto stem = [](const std::string& k) {
    const auto p = k.rfind('_');
    return p == std::string::npos ? k : k.substr(0, p);
  };
  std::string msg =
      "unknown key '" + key + "' in [" + section + "]";
  for (const auto& k : known) {
    if (stem(k) == stem(key) && k != key) {
      msg += "; did you mean '" + k + "' (values are SI, unit in the suffix)";
      break;
    }
  }
  throw ConfigError(msg, line);
}

struct Section {
  std::string name;
  int line = 0;
  std::map<std::string, Value> entries;
};

inline std::vector<Section> tokenize(const std::string& text) {
  std::vector<Section> sections;
  std::istringstream in(text);
  std::string raw;
  int line_no = 0;
  Section* current = nullptr;
  while (std::getline(in, raw)) {
    ++line_no;
    std::string s = trim(strip_comment(raw));
    if (s.empty()) continue;
    if (s.front() == '[') {
      const bool array = s.size() > 1 && s[1] == '[';
      const std::string close = array ? "]]" : "]";
      if (s.size() < 2 + close.size() ||
          s.substr(s.size() - close.size()) != close)
        throw ConfigError("malformed section header '" + s + "'", line_no);
      std::string name =
          trim(s.substr(array ? 2 : 1, s.size() - 2 * (array ? 2 : 1)));
      if (name.empty())
        throw ConfigError("empty section name", line_no);
      if (array && name != "rods")
        throw ConfigError("only [[rods]] may repeat", line_no);
      if (!array && name == "rods")
        throw ConfigError("[rods] must be written as [[rods]] entries", line_no);
      sections.push_back(Section{name, line_no, {}});
      current = &sections.back();
      continue;
    }
    const auto eq = s.find('=');
    if (eq == std::string::npos)
      throw ConfigError("expected 'key = value', got '" + s + "'", line_no);
    if (current == nullptr)
      throw ConfigError("key outside any section", line_no);
    const std::string key = trim(s.substr(0, eq));
    if (key.empty()) throw ConfigError("empty key", line_no);
    if (current->entries.count(key))
      throw ConfigError("duplicate key '" + key + "'", line_no);
    current->entries.emplace(key, parse_value(s.substr(eq + 1), line_no));
  }
  return sections;
}

}  // namespace detail

/// Parse config text into a RunConfig. Throws ConfigError with the
/// offending line for syntax, unknown-name and type problems; the caller
/// still runs RunConfig::validate() for semantic checks.
inline RunConfig parse_config_text(const std::string& text) {
  using detail::Value;
  RunConfig cfg;
  bool pdh_mirrors_explicit = false;

  const std::vector<detail::Section> sections = detail::tokenize(text);

  int rods_seen = 0;
  for (const auto& sec : sections) {
    if (sec.name == "rods") {
      if (rods_seen >= 4)
        throw ConfigError("[rods] holds exactly 4 entries in this hardware",
                          sec.line);
      Rod& rod = cfg.assembly.rods[rods_seen++];
      static const std::vector<std::string> known{
          "length_m", "b_field_t", "gap_m", "voltage_v", "sign_b", "sign_e"};
      for (const auto& [key, val] : sec.entries) {
        if (key == "length_m") rod.length_m = detail::as_number(val, key);
        else if (key == "b_field_t") rod.b_field_t = detail::as_number(val, key);
        else if (key == "gap_m") rod.gap_m = detail::as_number(val, key);
        else if (key == "voltage_v") rod.voltage_v = detail::as_number(val, key);
        else if (key == "sign_b") rod.sign_b = detail::as_sign(val, key);
        else if (key == "sign_e") rod.sign_e = detail::as_sign(val, key);
        else detail::unknown_key(sec.name, key, known, val.line);
      }
    } else if (sec.name == "cavity") {
      static const std::vector<std::string> known{"perimeter_m", "arm_m",
                                                  "finesse", "wavelength_m"};
      bool have_perimeter = false;
      for (const auto& [key, val] : sec.entries) {
        if (key == "perimeter_m") {
          cfg.cavity.perimeter_m = detail::as_number(val, key);
          have_perimeter = true;
        } else if (key == "arm_m") cfg.cavity.arm_m = detail::as_number(val, key);
        else if (key == "finesse") cfg.cavity.finesse = detail::as_number(val, key);
        else if (key == "wavelength_m")
          cfg.cavity.wavelength_m = detail::as_number(val, key);
        else detail::unknown_key(sec.name, key, known, val.line);
      }
      if (!have_perimeter && sec.entries.count("arm_m"))
        cfg.cavity.perimeter_m = 4.0 * cfg.cavity.arm_m;
    } else if (sec.name == "gas") {
      static const std::vector<std::string> known{
          "name", "two_eta_parallel_m_per_v_t", "two_eta_perp_m_per_v_t",
          "pressure_pa", "temperature_k"};
      for (const auto& [key, val] : sec.entries) {
        if (key == "name") cfg.gas.name = detail::as_string(val, key);
        else if (key == "two_eta_parallel_m_per_v_t")
          cfg.gas.two_eta_parallel = detail::as_number(val, key);
        else if (key == "two_eta_perp_m_per_v_t")
          cfg.gas.two_eta_perp = detail::as_number(val, key);
        else if (key == "pressure_pa")
          cfg.gas.pressure_pa = detail::as_number(val, key);
        else if (key == "temperature_k")
          cfg.gas.temperature_k = detail::as_number(val, key);
        else detail::unknown_key(sec.name, key, known, val.line);
      }
    } else if (sec.name == "pdh") {
      static const std::vector<std::string> known{
          "mod_freq_hz", "mod_depth_rad", "input_coupler_reflectivity",
          "round_trip_amplitude", "detector_gain_v"};
      for (const auto& [key, val] : sec.entries) {
        if (key == "mod_freq_hz")
          cfg.pdh.mod_angular_freq_rad_s =
              2.0 * constants::pi * detail::as_number(val, key);
        else if (key == "mod_depth_rad")
          cfg.pdh.mod_depth_rad = detail::as_number(val, key);
        else if (key == "input_coupler_reflectivity") {
          cfg.pdh.input_coupler_reflectivity = detail::as_number(val, key);
          pdh_mirrors_explicit = true;
        } else if (key == "round_trip_amplitude") {
          cfg.pdh.round_trip_amplitude = detail::as_number(val, key);
          pdh_mirrors_explicit = true;
        } else if (key == "detector_gain_v")
          cfg.pdh.detector_gain = detail::as_number(val, key);
        else detail::unknown_key(sec.name, key, known, val.line);
      }
    } else if (sec.name == "lockin") {
      static const std::vector<std::string> known{
          "f_e_hz", "time_constant_s", "filter_order", "reference_phase_rad"};
      for (const auto& [key, val] : sec.entries) {
        if (key == "f_e_hz")
          cfg.lockin.reference_freq_hz = detail::as_number(val, key);
        else if (key == "time_constant_s")
          cfg.lockin.time_constant_s = detail::as_number(val, key);
        else if (key == "filter_order")
          cfg.lockin.filter_order = detail::as_int(val, key);
        else if (key == "reference_phase_rad")
          cfg.lockin.reference_phase_rad = detail::as_number(val, key);
        else detail::unknown_key(sec.name, key, known, val.line);
      }
    } else if (sec.name == "noise") {
      static const std::vector<std::string> known{"white_asd_hz_per_rt_hz",
                                                  "drift_hz_per_s"};
      for (const auto& [key, val] : sec.entries) {
        if (key == "white_asd_hz_per_rt_hz")
          cfg.noise.white_split_noise_asd = detail::as_number(val, key);
        else if (key == "drift_hz_per_s")
          cfg.noise.drift_rate_hz_per_s = detail::as_number(val, key);
        else detail::unknown_key(sec.name, key, known, val.line);
      }
    } else if (sec.name == "servo") {
      static const std::vector<std::string> known{
          "mode", "proportional_gain", "integral_gain", "actuator_bandwidth_hz",
          "sample_rate_hz"};
      for (const auto& [key, val] : sec.entries) {
        if (key == "mode") {
          const std::string m = detail::as_string(val, key);
          if (m == "ideal-lock") cfg.servo.mode = ServoParams::Mode::ideal_lock;
          else if (m == "full-loop") cfg.servo.mode = ServoParams::Mode::full_loop;
          else
            throw ConfigError(
                "servo mode must be \"ideal-lock\" or \"full-loop\"", val.line);
        } else if (key == "proportional_gain")
          cfg.servo.proportional_gain = detail::as_number(val, key);
        else if (key == "integral_gain")
          cfg.servo.integral_gain = detail::as_number(val, key);
        else if (key == "actuator_bandwidth_hz")
          cfg.servo.actuator_bandwidth_hz = detail::as_number(val, key);
        else if (key == "sample_rate_hz")
          cfg.servo.sample_rate_hz = detail::as_number(val, key);
        else detail::unknown_key(sec.name, key, known, val.line);
      }
    } else if (sec.name == "run") {
      static const std::vector<std::string> known{
          "duration_s",         "e_amplitude_v_per_m", "seed",
          "store_series",       "earth_rate_rad_s",    "latitude_deg"};
      for (const auto& [key, val] : sec.entries) {
        if (key == "duration_s") cfg.duration_s = detail::as_number(val, key);
        else if (key == "e_amplitude_v_per_m")
          cfg.e_amplitude_v_per_m = detail::as_number(val, key);
        else if (key == "seed") cfg.seed = detail::as_uint64(val, key);
        else if (key == "store_series")
          cfg.store_series = detail::as_bool(val, key);
        else if (key == "earth_rate_rad_s")
          cfg.sagnac.earth_rate_rad_s = detail::as_number(val, key);
        else if (key == "latitude_deg")
          cfg.sagnac.latitude_rad =
              detail::as_number(val, key) * constants::pi / 180.0;
        else detail::unknown_key(sec.name, key, known, val.line);
      }
    } else {
      throw ConfigError("unknown section [" + sec.name + "]", sec.line);
    }
  }
  if (rods_seen != 0 && rods_seen != 4)
    throw ConfigError("[rods] holds exactly 4 entries in this hardware; got " +
                          std::to_string(rods_seen),
                      0);

  // Mirror amplitudes follow the cavity finesse unless set explicitly.
  if (!pdh_mirrors_explicit) {
    const double r = PDHParams::mirror_amplitude_for_finesse(
        cfg.cavity.finesse >= 1.0 ? cfg.cavity.finesse : 1.0);
    cfg.pdh.input_coupler_reflectivity = r;
    cfg.pdh.round_trip_amplitude = r;
  }
  return cfg;
}

inline RunConfig parse_config_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open config file '" + path + "'", 0);
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_config_text(buf.str());
}

namespace detail {

inline std::string fmt_g17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace detail

/// Canonical serialization: fixed section order, sorted keys, %.17g
/// numbers. Seed and the series-storage flag are run-time knobs and are
/// excluded; records report them separately.
inline std::string canonical_config_string(const RunConfig& cfg) {
  using detail::fmt_g17;
  std::ostringstream out;
  out << "[cavity]\n";
  out << "arm_m = " << fmt_g17(cfg.cavity.arm_m) << "\n";
  out << "finesse = " << fmt_g17(cfg.cavity.finesse) << "\n";
  out << "perimeter_m = " << fmt_g17(cfg.cavity.perimeter_m) << "\n";
  out << "wavelength_m = " << fmt_g17(cfg.cavity.wavelength_m) << "\n";
  for (const Rod& r : cfg.assembly.rods) {
    out << "[[rods]]\n";
    out << "b_field_t = " << fmt_g17(r.b_field_t) << "\n";
    out << "gap_m = " << fmt_g17(r.gap_m) << "\n";
    out << "length_m = " << fmt_g17(r.length_m) << "\n";
    out << "sign_b = " << r.sign_b << "\n";
    out << "sign_e = " << r.sign_e << "\n";
    out << "voltage_v = " << fmt_g17(r.voltage_v) << "\n";
  }
  out << "[gas]\n";
  out << "name = \"" << cfg.gas.name << "\"\n";
  out << "pressure_pa = " << fmt_g17(cfg.gas.pressure_pa) << "\n";
  out << "temperature_k = " << fmt_g17(cfg.gas.temperature_k) << "\n";
  out << "two_eta_parallel_m_per_v_t = " << fmt_g17(cfg.gas.two_eta_parallel)
      << "\n";
  if (cfg.gas.two_eta_perp)
    out << "two_eta_perp_m_per_v_t = " << fmt_g17(*cfg.gas.two_eta_perp) << "\n";
  out << "[pdh]\n";
  out << "detector_gain_v = " << fmt_g17(cfg.pdh.detector_gain) << "\n";
  out << "input_coupler_reflectivity = "
      << fmt_g17(cfg.pdh.input_coupler_reflectivity) << "\n";
  out << "mod_depth_rad = " << fmt_g17(cfg.pdh.mod_depth_rad) << "\n";
  out << "mod_freq_hz = "
      << fmt_g17(cfg.pdh.mod_angular_freq_rad_s / (2.0 * constants::pi)) << "\n";
  out << "round_trip_amplitude = " << fmt_g17(cfg.pdh.round_trip_amplitude)
      << "\n";
  out << "[lockin]\n";
  out << "f_e_hz = " << fmt_g17(cfg.lockin.reference_freq_hz) << "\n";
  out << "filter_order = " << cfg.lockin.filter_order << "\n";
  out << "reference_phase_rad = " << fmt_g17(cfg.lockin.reference_phase_rad)
      << "\n";
  out << "time_constant_s = " << fmt_g17(cfg.lockin.time_constant_s) << "\n";
  out << "[noise]\n";
  out << "drift_hz_per_s = " << fmt_g17(cfg.noise.drift_rate_hz_per_s) << "\n";
  out << "white_asd_hz_per_rt_hz = " << fmt_g17(cfg.noise.white_split_noise_asd)
      << "\n";
  out << "[servo]\n";
  out << "actuator_bandwidth_hz = " << fmt_g17(cfg.servo.actuator_bandwidth_hz)
      << "\n";
  out << "integral_gain = " << fmt_g17(cfg.servo.integral_gain) << "\n";
  out << "mode = \""
      << (cfg.servo.mode == ServoParams::Mode::full_loop ? "full-loop"
                                                         : "ideal-lock")
      << "\"\n";
  out << "proportional_gain = " << fmt_g17(cfg.servo.proportional_gain) << "\n";
  out << "sample_rate_hz = " << fmt_g17(cfg.servo.sample_rate_hz) << "\n";
  out << "[run]\n";
  out << "duration_s = " << fmt_g17(cfg.duration_s) << "\n";
  out << "e_amplitude_v_per_m = " << fmt_g17(cfg.e_amplitude_v_per_m) << "\n";
  out << "earth_rate_rad_s = " << fmt_g17(cfg.sagnac.earth_rate_rad_s) << "\n";
  out << "latitude_deg = "
      << fmt_g17(cfg.sagnac.latitude_rad * 180.0 / constants::pi) << "\n";
  return out.str();
}

/// FNV-1a over the canonical serialization.
inline std::uint64_t config_hash(const RunConfig& cfg) {
  const std::string s = canonical_config_string(cfg);
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  return h;
}

inline std::string config_hash_hex(const RunConfig& cfg) {
  char buf[19];
  std::snprintf(buf, sizeof buf, "%016llx",
                static_cast<unsigned long long>(config_hash(cfg)));
  return buf;
}

/// Fully commented default config, matching the built-in defaults.
inline std::string default_config_toml() {
  return R"(# Ring-cavity MENR digital twin: run configuration.
# All quantities are SI; the unit is spelled in the key suffix.

[cavity]
arm_m = 0.4                 # square ring, perimeter = 4 x arm
finesse = 30000
wavelength_m = 1.064e-6

# Exactly four rods. sign_e: +1 inner electrode grounded, -1 reversed,
# 0 disconnected. sign_b: magnet orientation, 0 removed.
[[rods]]
length_m = 0.2
b_field_t = 0.85
gap_m = 4e-3
voltage_v = 2000
sign_e = 1
sign_b = 1

[[rods]]
length_m = 0.2
b_field_t = 0.85
gap_m = 4e-3
voltage_v = 2000
sign_e = 1
sign_b = 1

[[rods]]
length_m = 0.2
b_field_t = 0.85
gap_m = 4e-3
voltage_v = 2000
sign_e = 1
sign_b = 1

[[rods]]
length_m = 0.2
b_field_t = 0.85
gap_m = 4e-3
voltage_v = 2000
sign_e = 1
sign_b = 1

[gas]
name = "N2"
two_eta_parallel_m_per_v_t = 4.7e-23
pressure_pa = 101325.0
temperature_k = 293.15

[pdh]
mod_freq_hz = 15e6          # must sit far outside the cavity line
mod_depth_rad = 1.0
detector_gain_v = 1.0
# input_coupler_reflectivity / round_trip_amplitude default to the
# lossless symmetric mapping from the cavity finesse.

[lockin]
f_e_hz = 18.5
time_constant_s = 10.0
filter_order = 4
reference_phase_rad = 0.0

[noise]
white_asd_hz_per_rt_hz = 8.9e-3   # ~200 uHz statistical sigma in 2000 s
drift_hz_per_s = 0.0

[servo]
mode = "ideal-lock"         # or "full-loop"
proportional_gain = 0.0     # 0 = auto-tune (full-loop only)
integral_gain = 0.0
actuator_bandwidth_hz = 200.0
sample_rate_hz = 2000.0

[run]
duration_s = 2000.0
e_amplitude_v_per_m = 5e5
seed = 1
store_series = false
earth_rate_rad_s = 7.2921159e-5
latitude_deg = 43.0
)";
}

}  // namespace io
}  // namespace menr
