#include "dtof/config.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <functional>
#include <istream>
#include <map>
#include <ostream>
#include <set>
#include <sstream>

namespace dtof {

namespace {

void require(bool ok, const std::string& what) {
  if (!ok) throw DomainError("config: " + what);
}

bool is_finite(double v) { return std::isfinite(v); }

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

double parse_double(const std::string& key, const std::string& v) {
  double out = 0.0;
  const char* first = v.data();
  const char* last = v.data() + v.size();
  auto [ptr, ec] = std::from_chars(first, last, out);
  if (ec != std::errc() || ptr != last) {
    throw DataError("config: key '" + key + "': not a number: '" + v + "'");
  }
  return out;
}

std::int64_t parse_int(const std::string& key, const std::string& v) {
  std::int64_t out = 0;
  const char* first = v.data();
  const char* last = v.data() + v.size();
  auto [ptr, ec] = std::from_chars(first, last, out);
  if (ec != std::errc() || ptr != last) {
    throw DataError("config: key '" + key + "': not an integer: '" + v + "'");
  }
  return out;
}

std::uint32_t parse_u32(const std::string& key, const std::string& v) {
  const std::int64_t x = parse_int(key, v);
  if (x < 0 || x > 0xffffffffll) {
    throw DataError("config: key '" + key + "': out of range: '" + v + "'");
  }
  return static_cast<std::uint32_t>(x);
}

bool parse_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1") return true;
  if (v == "false" || v == "0") return false;
  throw DataError("config: key '" + key + "': expected true/false, got '" + v + "'");
}

} // namespace

void OpticalConfig::validate() const {
  require(is_finite(pulse_energy_nj) && pulse_energy_nj > 0, "pulse_energy_nj must be > 0");
  require(is_finite(pulse_fwhm_ns) && pulse_fwhm_ns > 0, "pulse_fwhm_ns must be > 0");
  require(is_finite(wavelength_nm) && wavelength_nm > 0, "wavelength_nm must be > 0");
  require(laser_cycles >= 1, "laser_cycles must be >= 1");
  require(is_finite(beam_divergence_deg) && beam_divergence_deg > 0 && beam_divergence_deg < 90,
          "beam_divergence_deg must be in (0, 90)");
  require(is_finite(trigger_jitter_fwhm_ps) && trigger_jitter_fwhm_ps >= 0,
          "trigger_jitter_fwhm_ps must be >= 0");
  require(is_finite(f_number) && f_number > 0, "f_number must be > 0");
  require(is_finite(lens_transmittance) && lens_transmittance > 0 && lens_transmittance <= 1,
          "lens_transmittance must be in (0, 1]");
  require(is_finite(filter_bandwidth_nm) && filter_bandwidth_nm > 0,
          "filter_bandwidth_nm must be > 0");
  require(is_finite(collection_efficiency) && collection_efficiency > 0 &&
              collection_efficiency <= 1,
          "collection_efficiency must be in (0, 1]");
}

Combiner combiner_from_string(const std::string& s) {
  if (s == "level_sst") return Combiner::level_sst;
  if (s == "edge_sst") return Combiner::edge_sst;
  if (s == "adder_async") return Combiner::adder_async;
  throw DataError("config: unknown combiner '" + s +
                  "' (expected level_sst, edge_sst or adder_async)");
}

std::string combiner_to_string(Combiner c) {
  switch (c) {
    case Combiner::level_sst: return "level_sst";
    case Combiner::edge_sst: return "edge_sst";
    case Combiner::adder_async: return "adder_async";
  }
  throw ContractViolation("combiner_to_string: bad enum value");
}

void SensorConfig::validate() const {
  require(spads_per_pixel >= 1, "spads_per_pixel must be >= 1");
  require(is_finite(pixel_area_um2) && pixel_area_um2 > 0, "pixel_area_um2 must be > 0");
  require(is_finite(pde) && pde > 0 && pde <= 1, "pde must be in (0, 1]");
  require(dead_time_ps >= 0, "dead_time_ps must be >= 0");
  require(is_finite(spad_jitter_fwhm_ps) && spad_jitter_fwhm_ps >= 0,
          "spad_jitter_fwhm_ps must be >= 0");
  require(sst_clock_period_ps >= 1, "sst_clock_period_ps must be >= 1");
  require(cycle_window_ps >= 1, "cycle_window_ps must be >= 1");
  require(histogram_bins >= 1, "histogram_bins must be >= 1");
  require(bin_width_ps >= 1, "bin_width_ps must be >= 1");
  require(sim_timestep_ps >= 1, "sim_timestep_ps must be >= 1");
  require(static_cast<Ps>(histogram_bins) * bin_width_ps == cycle_window_ps,
          "histogram_bins * bin_width_ps must equal cycle_window_ps");
  require(sim_timestep_ps <= bin_width_ps, "sim_timestep_ps must be <= bin_width_ps");
  // SST samples must line up with cycle boundaries so per-cycle slicing is exact.
  require(cycle_window_ps % sst_clock_period_ps == 0,
          "sst_clock_period_ps must divide cycle_window_ps");
}

void SceneInstance::validate() const {
  require(is_finite(depth_m) && depth_m > 0, "scene depth_m must be > 0");
  require(is_finite(reflectivity) && reflectivity >= 0.25 && reflectivity <= 1.0,
          "scene reflectivity must be in [0.25, 1.0]");
  require(is_finite(ambient_klux) && ambient_klux >= 0.0 && ambient_klux <= 30.0,
          "scene ambient_klux must be in [0, 30]");
}

void ToolConfig::validate() const {
  optical.validate();
  sensor.validate();
}

namespace {

using Setter = std::function<void(const std::string&, const std::string&)>;

std::map<std::string, Setter> make_setters(ToolConfig& cfg) {
  return {
      {"optical.pulse_energy_nj",
       [&](const std::string& k, const std::string& v) { cfg.optical.pulse_energy_nj = parse_double(k, v); }},
      {"optical.pulse_fwhm_ns",
       [&](const std::string& k, const std::string& v) { cfg.optical.pulse_fwhm_ns = parse_double(k, v); }},
      {"optical.wavelength_nm",
       [&](const std::string& k, const std::string& v) { cfg.optical.wavelength_nm = parse_double(k, v); }},
      {"optical.laser_cycles",
       [&](const std::string& k, const std::string& v) { cfg.optical.laser_cycles = parse_u32(k, v); }},
      {"optical.beam_divergence_deg",
       [&](const std::string& k, const std::string& v) { cfg.optical.beam_divergence_deg = parse_double(k, v); }},
      {"optical.trigger_jitter_fwhm_ps",
       [&](const std::string& k, const std::string& v) { cfg.optical.trigger_jitter_fwhm_ps = parse_double(k, v); }},
      {"optical.f_number",
       [&](const std::string& k, const std::string& v) { cfg.optical.f_number = parse_double(k, v); }},
      {"optical.lens_transmittance",
       [&](const std::string& k, const std::string& v) { cfg.optical.lens_transmittance = parse_double(k, v); }},
      {"optical.filter_bandwidth_nm",
       [&](const std::string& k, const std::string& v) { cfg.optical.filter_bandwidth_nm = parse_double(k, v); }},
      {"optical.collection_efficiency",
       [&](const std::string& k, const std::string& v) { cfg.optical.collection_efficiency = parse_double(k, v); }},
      {"sensor.spads_per_pixel",
       [&](const std::string& k, const std::string& v) { cfg.sensor.spads_per_pixel = parse_u32(k, v); }},
      {"sensor.pixel_area_um2",
       [&](const std::string& k, const std::string& v) { cfg.sensor.pixel_area_um2 = parse_double(k, v); }},
      {"sensor.pde",
       [&](const std::string& k, const std::string& v) { cfg.sensor.pde = parse_double(k, v); }},
      {"sensor.dead_time_ps",
       [&](const std::string& k, const std::string& v) { cfg.sensor.dead_time_ps = parse_int(k, v); }},
      {"sensor.spad_jitter_fwhm_ps",
       [&](const std::string& k, const std::string& v) { cfg.sensor.spad_jitter_fwhm_ps = parse_double(k, v); }},
      {"sensor.combiner",
       [&](const std::string&, const std::string& v) { cfg.sensor.combiner = combiner_from_string(v); }},
      {"sensor.sst_clock_period_ps",
       [&](const std::string& k, const std::string& v) { cfg.sensor.sst_clock_period_ps = parse_int(k, v); }},
      {"sensor.cycle_window_ps",
       [&](const std::string& k, const std::string& v) { cfg.sensor.cycle_window_ps = parse_int(k, v); }},
      {"sensor.histogram_bins",
       [&](const std::string& k, const std::string& v) { cfg.sensor.histogram_bins = parse_u32(k, v); }},
      {"sensor.bin_width_ps",
       [&](const std::string& k, const std::string& v) { cfg.sensor.bin_width_ps = parse_int(k, v); }},
      {"sensor.sim_timestep_ps",
       [&](const std::string& k, const std::string& v) { cfg.sensor.sim_timestep_ps = parse_int(k, v); }},
      {"sensor.sst_or_mode",
       [&](const std::string& k, const std::string& v) { cfg.sensor.sst_or_mode = parse_bool(k, v); }},
      {"sensor.paralyzable_dead_time",
       [&](const std::string& k, const std::string& v) { cfg.sensor.paralyzable_dead_time = parse_bool(k, v); }},
  };
}

} // namespace

ToolConfig parse_config(std::istream& in) {
  ToolConfig cfg;
  const auto setters = make_setters(cfg);
  std::set<std::string> seen;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw DataError("config: line " + std::to_string(lineno) + ": expected 'key = value'");
    }
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key.empty() || value.empty()) {
      throw DataError("config: line " + std::to_string(lineno) + ": empty key or value");
    }
    const auto it = setters.find(key);
    if (it == setters.end()) {
      throw DataError("config: line " + std::to_string(lineno) + ": unknown key '" + key + "'");
    }
    if (!seen.insert(key).second) {
      throw DataError("config: line " + std::to_string(lineno) + ": duplicate key '" + key + "'");
    }
    it->second(key, value);
  }
  cfg.validate();
  return cfg;
}

ToolConfig load_config(const std::filesystem::path& file) {
  std::ifstream in(file);
  if (!in) throw DataError("config: cannot open " + file.string());
  return parse_config(in);
}

void apply_config_overrides(ToolConfig& cfg, const std::vector<std::string>& assignments) {
  const auto setters = make_setters(cfg);
  for (const std::string& a : assignments) {
    const auto eq = a.find('=');
    if (eq == std::string::npos) {
      throw DataError("config override '" + a + "': expected key=value");
    }
    const std::string key = trim(a.substr(0, eq));
    const std::string value = trim(a.substr(eq + 1));
    const auto it = setters.find(key);
    if (it == setters.end()) {
      throw DataError("config override: unknown key '" + key + "'");
    }
    it->second(key, value);
  }
  cfg.validate();
}

void write_config(std::ostream& out, const ToolConfig& cfg) {
  std::ostringstream os;
  os.precision(17);
  os << "optical.pulse_energy_nj = " << cfg.optical.pulse_energy_nj << "\n";
  os << "optical.pulse_fwhm_ns = " << cfg.optical.pulse_fwhm_ns << "\n";
  os << "optical.wavelength_nm = " << cfg.optical.wavelength_nm << "\n";
  os << "optical.laser_cycles = " << cfg.optical.laser_cycles << "\n";
  os << "optical.beam_divergence_deg = " << cfg.optical.beam_divergence_deg << "\n";
  os << "optical.trigger_jitter_fwhm_ps = " << cfg.optical.trigger_jitter_fwhm_ps << "\n";
  os << "optical.f_number = " << cfg.optical.f_number << "\n";
  os << "optical.lens_transmittance = " << cfg.optical.lens_transmittance << "\n";
  os << "optical.filter_bandwidth_nm = " << cfg.optical.filter_bandwidth_nm << "\n";
  os << "optical.collection_efficiency = " << cfg.optical.collection_efficiency << "\n";
  os << "sensor.spads_per_pixel = " << cfg.sensor.spads_per_pixel << "\n";
  os << "sensor.pixel_area_um2 = " << cfg.sensor.pixel_area_um2 << "\n";
  os << "sensor.pde = " << cfg.sensor.pde << "\n";
  os << "sensor.dead_time_ps = " << cfg.sensor.dead_time_ps << "\n";
  os << "sensor.spad_jitter_fwhm_ps = " << cfg.sensor.spad_jitter_fwhm_ps << "\n";
  os << "sensor.combiner = " << combiner_to_string(cfg.sensor.combiner) << "\n";
  os << "sensor.sst_clock_period_ps = " << cfg.sensor.sst_clock_period_ps << "\n";
  os << "sensor.cycle_window_ps = " << cfg.sensor.cycle_window_ps << "\n";
  os << "sensor.histogram_bins = " << cfg.sensor.histogram_bins << "\n";
  os << "sensor.bin_width_ps = " << cfg.sensor.bin_width_ps << "\n";
  os << "sensor.sim_timestep_ps = " << cfg.sensor.sim_timestep_ps << "\n";
  os << "sensor.sst_or_mode = " << (cfg.sensor.sst_or_mode ? "true" : "false") << "\n";
  os << "sensor.paralyzable_dead_time = " << (cfg.sensor.paralyzable_dead_time ? "true" : "false")
     << "\n";
  out << os.str();
}

} // namespace dtof
