#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "dtof/event_sim.hpp"

namespace dtof {

// Scene sampling plan. Train mode samples (depth, reflectivity, ambient)
// uniformly from the configured ranges; test mode enumerates the fixed depth
// grid with `count` exposures per depth at one (reflectivity, ambient) pair.
struct DatasetSpec {
  enum class Mode { train, test };
  Mode mode = Mode::train;
  std::uint32_t count = 0; // train: total exposures; test: exposures per depth

  double depth_min_m = 0.5;
  double depth_max_m = 10.0;
  double depth_step_m = 0.5; // test grid only

  double reflectivity_min = 0.25;
  double reflectivity_max = 1.0;
  double ambient_min_klux = 0.0;
  double ambient_max_klux = 30.0;

  double test_reflectivity = 0.4;
  double test_ambient_klux = 25.0;

  void validate() const;
  std::uint64_t total_exposures() const;
  std::vector<double> depth_grid() const;
};

struct DatasetEntry {
  SceneInstance scene;
  std::uint64_t sim_seed = 0;
  std::uint64_t offset = 0; // into the pack file
  std::uint64_t length = 0;
  std::string sha256;
};

struct DatasetManifest {
  std::uint64_t master_seed = 0;
  std::string rng_algorithm; // "mt19937_64/splitmix64-derive/v1"
  DatasetSpec spec;
  ToolConfig config;
  std::vector<DatasetEntry> entries;
  std::string pack_file; // relative to the manifest directory
};

// Seed streams per exposure index: even stream for event generation, odd
// stream for scene sampling, so changing the scene sampler cannot perturb
// the event stream of an already-published seed.
inline std::uint64_t exposure_sim_seed(std::uint64_t master_seed, std::uint64_t index) {
  return derive_stream_seed(master_seed, 2 * index);
}
inline std::uint64_t exposure_scene_seed(std::uint64_t master_seed, std::uint64_t index) {
  return derive_stream_seed(master_seed, 2 * index + 1);
}

// Scene for one exposure index under a spec (deterministic).
SceneInstance scene_for_index(const DatasetSpec& spec, std::uint64_t master_seed,
                              std::uint64_t index);

// Simulates every exposure, writes <out_dir>/exposures.pack and
// <out_dir>/manifest.json, returns the manifest. `workers` parallelizes the
// simulation only; output bytes are independent of it.
DatasetManifest generate_dataset(const ToolConfig& config, const DatasetSpec& spec,
                                 std::uint64_t master_seed,
                                 const std::filesystem::path& out_dir, unsigned workers = 1);

void save_manifest(const std::filesystem::path& file, const DatasetManifest& manifest);
DatasetManifest load_manifest(const std::filesystem::path& file);

// Reads one exposure out of the pack file, verifying its digest.
ExposureRecord load_exposure(const DatasetManifest& manifest,
                             const std::filesystem::path& manifest_dir, std::size_t index);

// Reads the whole pack sequentially (cheaper than per-entry seeks).
std::vector<ExposureRecord> load_all_exposures(const DatasetManifest& manifest,
                                               const std::filesystem::path& manifest_dir);

} // namespace dtof
