#include "dtof/histogram.hpp"

#include <algorithm>

#include "dtof/combine.hpp"

namespace dtof {

Histogram accumulate_histogram(const ExposureRecord& exposure, const SensorConfig& sensor) {
  Histogram hist;
  hist.bin_width_ps = sensor.bin_width_ps;
  hist.bins.assign(sensor.histogram_bins, 0);

  const auto& triggers = exposure.trigger_times;
  if (triggers.empty()) throw ContractViolation("accumulate_histogram: no trigger times");
  if (!std::is_sorted(triggers.begin(), triggers.end())) {
    throw ContractViolation("accumulate_histogram: trigger times not sorted");
  }

  const MergedEdgeStream merged = combine_adder(exposure.events);
  for (const Ps t : merged.times) {
    // Most recent trigger at or before t.
    auto it = std::upper_bound(triggers.begin(), triggers.end(), t);
    if (it == triggers.begin()) continue; // before the first cycle
    const Ps trigger = *(it - 1);
    const Ps rel = t - trigger;
    if (rel < 0 || rel >= sensor.cycle_window_ps) continue;
    ++hist.bins[static_cast<std::size_t>(rel / sensor.bin_width_ps)];
  }
  return hist;
}

ComResult com_depth(const Histogram& hist, std::size_t window_halfwidth) {
  if (hist.bins.empty()) throw ContractViolation("com_depth: empty histogram");
  if (hist.total() == 0) throw DataError("com_depth: no signal (all-zero histogram)");

  ComResult r;
  // argmax, ties to the lowest index
  std::size_t peak = 0;
  for (std::size_t i = 1; i < hist.bins.size(); ++i) {
    if (hist.bins[i] > hist.bins[peak]) peak = i;
  }
  r.peak_bin = peak;

  const std::size_t lo = peak >= window_halfwidth ? peak - window_halfwidth : 0;
  const std::size_t hi = std::min(hist.bins.size() - 1, peak + window_halfwidth);

  std::vector<std::uint64_t> outside;
  outside.reserve(hist.bins.size());
  for (std::size_t i = 0; i < hist.bins.size(); ++i) {
    if (i < lo || i > hi) outside.push_back(hist.bins[i]);
  }
  double background = 0.0;
  if (!outside.empty()) {
    std::sort(outside.begin(), outside.end());
    const std::size_t mid = outside.size() / 2;
    background = outside.size() % 2 == 1
                     ? static_cast<double>(outside[mid])
                     : 0.5 * static_cast<double>(outside[mid - 1] + outside[mid]);
  }
  r.background_level = background;

  double mass = 0.0;
  double moment = 0.0;
  for (std::size_t i = lo; i <= hi; ++i) {
    const double v = std::max(static_cast<double>(hist.bins[i]) - background, 0.0);
    mass += v;
    moment += v * (static_cast<double>(i) + 0.5) * static_cast<double>(hist.bin_width_ps);
  }
  if (mass <= 0.0) {
    throw DataError("com_depth: degenerate peak (no mass above background)");
  }
  r.tof_estimate_ps = moment / mass;
  r.depth_estimate_m = tof_to_depth_m(r.tof_estimate_ps);
  return r;
}

} // namespace dtof
