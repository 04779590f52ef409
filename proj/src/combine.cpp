#include "dtof/combine.hpp"

#include <algorithm>

namespace dtof {

namespace {

std::size_t clocked_length(Ps exposure_length_ps, Ps clock_period_ps) {
  if (clock_period_ps <= 0 || exposure_length_ps % clock_period_ps != 0) {
    throw ContractViolation("combine: clock period must divide the exposure length");
  }
  return static_cast<std::size_t>(exposure_length_ps / clock_period_ps);
}

void apply_or_mode(ClockedStream& s, bool or_mode) {
  if (!or_mode) return;
  for (auto& v : s.values) v = v ? 1 : 0;
}

} // namespace

ClockedStream combine_level_sst(const SpadEventStream& events, const SensorConfig& sensor,
                                Ps exposure_length_ps) {
  ClockedStream out;
  out.clock_period_ps = sensor.sst_clock_period_ps;
  const std::size_t n = clocked_length(exposure_length_ps, sensor.sst_clock_period_ps);
  out.values.assign(n, 0);
  const Ps p = sensor.sst_clock_period_ps;
  const Ps dead = sensor.dead_time_ps;
  for (const auto& spad : events.per_spad) {
    for (const Ps t : spad) {
      // Output high on (t, t + dead]; sample k is taken at (k+1)*p.
      // (k+1)*p > t  <=>  k >= floor(t/p); (k+1)*p <= t+dead  <=>
      // k <= floor((t+dead)/p) - 1.
      const Ps k_lo = t / p;
      const Ps k_hi = (t + dead) / p - 1;
      for (Ps k = k_lo; k <= k_hi; ++k) {
        if (k >= 0 && static_cast<std::size_t>(k) < n) ++out.values[static_cast<std::size_t>(k)];
      }
    }
  }
  apply_or_mode(out, sensor.sst_or_mode);
  return out;
}

ClockedStream combine_edge_sst(const SpadEventStream& events, const SensorConfig& sensor,
                               Ps exposure_length_ps) {
  ClockedStream out;
  out.clock_period_ps = sensor.sst_clock_period_ps;
  const std::size_t n = clocked_length(exposure_length_ps, sensor.sst_clock_period_ps);
  out.values.assign(n, 0);
  const Ps p = sensor.sst_clock_period_ps;
  for (const auto& spad : events.per_spad) {
    for (const Ps t : spad) {
      if (t < 0 || t >= exposure_length_ps) {
        throw ContractViolation("combine_edge_sst: event outside exposure");
      }
      ++out.values[static_cast<std::size_t>(t / p)];
    }
  }
  apply_or_mode(out, sensor.sst_or_mode);
  return out;
}

MergedEdgeStream combine_adder(const SpadEventStream& events) {
  MergedEdgeStream out;
  out.times.reserve(events.total_events());
  for (const auto& spad : events.per_spad) {
    out.times.insert(out.times.end(), spad.begin(), spad.end());
  }
  std::sort(out.times.begin(), out.times.end());
  return out;
}

ClockedStream sample_adder_levels(const MergedEdgeStream& merged, const SensorConfig& sensor,
                                  Ps exposure_length_ps) {
  ClockedStream out;
  out.clock_period_ps = sensor.sst_clock_period_ps;
  const std::size_t n = clocked_length(exposure_length_ps, sensor.sst_clock_period_ps);
  out.values.assign(n, 0);
  const Ps p = sensor.sst_clock_period_ps;
  const Ps dead = sensor.dead_time_ps;
  // Sliding window [sample - dead, sample) over the sorted edges.
  std::size_t lo = 0;
  std::size_t hi = 0;
  for (std::size_t k = 0; k < n; ++k) {
    const Ps sample = static_cast<Ps>(k + 1) * p;
    while (hi < merged.times.size() && merged.times[hi] < sample) ++hi;
    while (lo < hi && merged.times[lo] < sample - dead) ++lo;
    out.values[k] = static_cast<std::uint16_t>(hi - lo);
  }
  apply_or_mode(out, sensor.sst_or_mode);
  return out;
}

} // namespace dtof
