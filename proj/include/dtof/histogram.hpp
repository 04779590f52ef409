#pragma once

#include <cstdint>
#include <vector>

#include "dtof/config.hpp"
#include "dtof/event_sim.hpp"
#include "dtof/units.hpp"

namespace dtof {

// Trigger-relative accumulation of detection edges over all laser cycles.
struct Histogram {
  Ps bin_width_ps = 0;
  std::vector<std::uint64_t> bins;

  std::uint64_t total() const {
    std::uint64_t n = 0;
    for (const auto b : bins) n += b;
    return n;
  }
};

struct ComResult {
  double tof_estimate_ps = 0.0; // fractional, trigger-relative
  double depth_estimate_m = 0.0;
  std::size_t peak_bin = 0;
  double background_level = 0.0; // counts per bin
};

// Each edge is referenced to the most recent trigger at or before it and
// binned by (time - trigger) / bin_width; edges before the first trigger or
// past the cycle window are dropped.
Histogram accumulate_histogram(const ExposureRecord& exposure, const SensorConfig& sensor);

// Peak extraction: argmax bin (ties -> lowest index), background = median of
// bins outside peak +- window_halfwidth, intensity-weighted centroid of the
// background-subtracted (clamped at zero) window, bin centres at
// (i + 0.5) * bin_width.
// Throws DataError: "no signal" if the histogram is empty, "degenerate peak"
// if the subtracted window has zero mass.
ComResult com_depth(const Histogram& hist, std::size_t window_halfwidth);

inline constexpr std::size_t default_com_window_halfwidth = 8;

} // namespace dtof
