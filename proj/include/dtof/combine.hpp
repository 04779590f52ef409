#pragma once

#include <cstdint>
#include <vector>

#include "dtof/config.hpp"
#include "dtof/event_sim.hpp"
#include "dtof/units.hpp"

namespace dtof {

// Output of a clocked combination tree: values[k] is the sample for the
// k-th clock period. Level SST samples at the period end (k+1)*clock; edge
// SST counts rising edges inside [k*clock, (k+1)*clock).
struct ClockedStream {
  Ps clock_period_ps = 0;
  std::vector<std::uint16_t> values;
};

// Asynchronous adder tree under the zero-delay assumption: the analog sum of
// SPAD levels carries no more information than the sorted union of rising
// edges plus the dead-time pulse width, so the event-level representation is
// the merged edge stream.
struct MergedEdgeStream {
  std::vector<Ps> times;
};

// Each SPAD's digital output is high for dead_time after a detection
// (passive recharge); the sampled value is the number of SPADs high at the
// clock edge, or its single-bit OR when sst_or_mode is set.
ClockedStream combine_level_sst(const SpadEventStream& events, const SensorConfig& sensor,
                                Ps exposure_length_ps);

ClockedStream combine_edge_sst(const SpadEventStream& events, const SensorConfig& sensor,
                               Ps exposure_length_ps);

MergedEdgeStream combine_adder(const SpadEventStream& events);

// Clocked samples of the adder-tree output: the count of merged edges in
// [sample - dead_time, sample). Because per-SPAD gaps are >= dead_time this
// equals combine_level_sst exactly; it is the front end used when the
// network consumes adder-tree input.
ClockedStream sample_adder_levels(const MergedEdgeStream& merged, const SensorConfig& sensor,
                                  Ps exposure_length_ps);

} // namespace dtof
