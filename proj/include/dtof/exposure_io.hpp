#pragma once

#include <string>
#include <string_view>

#include "dtof/event_sim.hpp"

namespace dtof {

// Exposure record binary format (little-endian), version 1:
//   "SPEX" magic, u32 version
//   u32 config text length, bytes  (flat key=value optical+sensor config)
//   f64 depth_m, f64 reflectivity, f64 ambient_klux
//   i64 ground_truth_tof_ps (-1 = unknown), u64 seed
//   u32 trigger count, then u64 per trigger (two's complement; the first
//       cycle's jitter can make trigger 0 slightly negative)
//   u32 spad count, then per SPAD: u32 event count + u64 sorted timestamps
//   u32 section count, then per section: u32 tag, u64 length, payload
//       (unknown tags are skipped on read)
std::string serialize_exposure(const ExposureRecord& rec);

ExposureRecord deserialize_exposure(std::string_view bytes);

void write_exposure_file(const std::filesystem::path& file, const ExposureRecord& rec);
ExposureRecord read_exposure_file(const std::filesystem::path& file);

} // namespace dtof
