#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "dtof/config.hpp"
#include "dtof/event_sim.hpp"
#include "dtof/network.hpp"

namespace dtof {

// One detection in a binary-timestamp frame: at most one code per pixel per
// frame comes out of the sensor.
struct RealFrameRecord {
  std::uint32_t frame = 0;
  std::uint16_t x = 0, y = 0;
  std::uint32_t code = 0;
};

struct RealFrameSet {
  std::uint32_t width = 0, height = 0;
  std::uint32_t n_frames = 0;
  double code_to_ps = 1.0; // timestamp LSB in picoseconds
  std::vector<RealFrameRecord> records;

  void validate() const; // coords within array, frames within n_frames
};

// Text form: '#' comments, "key value" header lines (width/height/n_frames/
// code_to_ps), one "frame,x,y,code" line per record after a "records" line.
RealFrameSet load_real_frames_text(const std::filesystem::path& file);
void save_real_frames_text(const std::filesystem::path& file, const RealFrameSet& set);

// Packed twin ("RFS1", little-endian fixed-width fields), byte-exact round trip.
RealFrameSet load_real_frames_packed(const std::filesystem::path& file);
void save_real_frames_packed(const std::filesystem::path& file, const RealFrameSet& set);

struct ReformatOptions {
  std::uint32_t frames_per_exposure = 45;
  std::uint32_t group = 4;        // macropixel edge length
  double time_scale = 3.0;        // timestamp stretch onto the network time base
  bool scale_after_shift = false; // alternate reading of the transform order
};

// Grid of per-macropixel exposures. exposures[e] is row-major over the
// (height/group) x (width/group) macropixel grid.
struct ReformatResult {
  std::vector<std::vector<ExposureRecord>> exposures;
  std::size_t map_width = 0, map_height = 0;
  std::uint64_t dropped = 0;       // transformed timestamps past the exposure window
  std::uint64_t dead_filtered = 0; // removed to honor the per-SPAD dead-time invariant
};

// Shifts frame k's (scaled) timestamps by k cycle windows, pools pixels into
// group x group macropixels (pixel lane -> SPAD index), and emits one
// synthetic-format exposure per macropixel per frames_per_exposure block.
// Ground truth is unknown (-1). Sensor/optical parameters come from config.
ReformatResult reformat_frames(const RealFrameSet& set, const ToolConfig& config,
                               const ReformatOptions& opts);

struct DepthMap {
  std::size_t width = 0, height = 0;
  std::vector<double> depth_m; // row-major; NaN = no-signal sentinel

  double& at(std::size_t x, std::size_t y) { return depth_m[y * width + x]; }
  double at(std::size_t x, std::size_t y) const { return depth_m[y * width + x]; }
};

// CoM per macropixel; estimator failures (no signal peak) become sentinels.
DepthMap render_depth_map_com(const std::vector<ExposureRecord>& grid, std::size_t width,
                              std::size_t height, std::size_t window_halfwidth,
                              unsigned workers = 1);

// SNN per macropixel; zero spiking activity becomes a sentinel.
DepthMap render_depth_map_snn(const std::vector<ExposureRecord>& grid, std::size_t width,
                              std::size_t height, const NetworkParams& net,
                              Combiner combiner, unsigned workers = 1);

// CSV grid (NaN for sentinels) and 16-bit PGM, millimeter-quantized with
// 65535 reserved for the sentinel.
void write_depth_csv(const std::filesystem::path& file, const DepthMap& map);
void write_depth_pgm(const std::filesystem::path& file, const DepthMap& map);

} // namespace dtof
