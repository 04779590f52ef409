#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "dtof/units.hpp"

namespace dtof {

// Illumination source and receiver optics. Defaults follow the emulated
// LiDAR setup: 940 nm flood illuminator, f/1.2 receiver, 10 nm filter.
struct OpticalConfig {
  double pulse_energy_nj = 640.0;
  double pulse_fwhm_ns = 4.0;
  double wavelength_nm = 940.0;
  std::uint32_t laser_cycles = 45;
  double beam_divergence_deg = 11.25; // cone half-angle of the flood beam
  double trigger_jitter_fwhm_ps = 100.0;
  double f_number = 1.2;
  double lens_transmittance = 0.5;
  double filter_bandwidth_nm = 10.0;
  // Aggregate of SPAD fill factor and optics losses not modelled explicitly.
  // Calibrated so that SBR ~ 1 at 10 m, 0.4 reflectivity, 25 kLux.
  double collection_efficiency = 0.04;

  void validate() const; // throws DomainError
};

enum class Combiner : std::uint8_t {
  level_sst = 0,
  edge_sst = 1,
  adder_async = 2,
};

Combiner combiner_from_string(const std::string& s);
std::string combiner_to_string(Combiner c);

struct SensorConfig {
  std::uint32_t spads_per_pixel = 16;
  double pixel_area_um2 = 1600.0;
  double pde = 0.185;
  Ps dead_time_ps = 4300;
  double spad_jitter_fwhm_ps = 100.0;
  Combiner combiner = Combiner::level_sst;
  Ps sst_clock_period_ps = 500;
  Ps cycle_window_ps = 86000;
  std::uint32_t histogram_bins = 172;
  Ps bin_width_ps = 500;
  Ps sim_timestep_ps = 1;
  // Level SST samples the multi-bit sum of SPAD output levels by default;
  // sst_or_mode clips the sample to a single bit.
  bool sst_or_mode = false;
  // Non-paralyzable dead time by default; paralyzable keeps extending the
  // dead window on arrivals inside it.
  bool paralyzable_dead_time = false;

  Ps exposure_length_ps(std::uint32_t laser_cycles) const {
    return static_cast<Ps>(laser_cycles) * cycle_window_ps;
  }
  void validate() const; // throws DomainError
};

struct SceneInstance {
  double depth_m = 5.0;
  double reflectivity = 0.7;
  double ambient_klux = 1.0;

  void validate() const; // throws DomainError
};

// Flat key-value config file mirroring the parameter-table field names.
// Lines are `key = value`; '#' starts a comment; unknown or duplicate keys
// are errors so that typos cannot silently fall back to defaults.
struct ToolConfig {
  OpticalConfig optical;
  SensorConfig sensor;

  void validate() const;
};

ToolConfig parse_config(std::istream& in);
ToolConfig load_config(const std::filesystem::path& file);
void write_config(std::ostream& out, const ToolConfig& cfg);

// Applies "key=value" assignments (same keys as the config file) on top of
// cfg, then re-validates. Later assignments win.
void apply_config_overrides(ToolConfig& cfg, const std::vector<std::string>& assignments);

} // namespace dtof
