#include "dtof/dataset.hpp"

#include <cmath>
#include <fstream>
#include <sstream>
#include <thread>

#include <nlohmann/json.hpp>

#include "dtof/exposure_io.hpp"
#include "dtof/sha256.hpp"

namespace dtof {

namespace {
constexpr const char* rng_algorithm_id = "mt19937_64/splitmix64-derive/v1";
constexpr const char* pack_file_name = "exposures.pack";
constexpr std::uint32_t manifest_version = 1;
} // namespace

void DatasetSpec::validate() const {
  if (count < 1) throw DomainError("dataset: count must be >= 1");
  if (!(depth_min_m > 0 && depth_max_m >= depth_min_m)) {
    throw DomainError("dataset: bad depth range");
  }
  if (mode == Mode::test && !(depth_step_m > 0)) {
    throw DomainError("dataset: depth_step must be > 0");
  }
  if (!(reflectivity_min <= reflectivity_max)) throw DomainError("dataset: bad reflectivity range");
  if (!(ambient_min_klux <= ambient_max_klux)) throw DomainError("dataset: bad ambient range");
  SceneInstance lo{depth_min_m, reflectivity_min, ambient_min_klux};
  SceneInstance hi{depth_max_m, reflectivity_max, ambient_max_klux};
  if (mode == Mode::test) {
    lo.reflectivity = hi.reflectivity = test_reflectivity;
    lo.ambient_klux = hi.ambient_klux = test_ambient_klux;
  }
  lo.validate();
  hi.validate();
}

std::vector<double> DatasetSpec::depth_grid() const {
  std::vector<double> grid;
  const auto steps = static_cast<std::int64_t>(
      std::llround((depth_max_m - depth_min_m) / depth_step_m));
  for (std::int64_t i = 0; i <= steps; ++i) {
    grid.push_back(depth_min_m + static_cast<double>(i) * depth_step_m);
  }
  return grid;
}

std::uint64_t DatasetSpec::total_exposures() const {
  if (mode == Mode::train) return count;
  return static_cast<std::uint64_t>(count) * depth_grid().size();
}

SceneInstance scene_for_index(const DatasetSpec& spec, std::uint64_t master_seed,
                              std::uint64_t index) {
  SceneInstance scene;
  if (spec.mode == DatasetSpec::Mode::train) {
    Rng rng(exposure_scene_seed(master_seed, index));
    scene.depth_m = spec.depth_min_m + rng.uniform() * (spec.depth_max_m - spec.depth_min_m);
    scene.reflectivity =
        spec.reflectivity_min + rng.uniform() * (spec.reflectivity_max - spec.reflectivity_min);
    scene.ambient_klux =
        spec.ambient_min_klux + rng.uniform() * (spec.ambient_max_klux - spec.ambient_min_klux);
  } else {
    const auto grid = spec.depth_grid();
    scene.depth_m = grid.at(static_cast<std::size_t>(index / spec.count));
    scene.reflectivity = spec.test_reflectivity;
    scene.ambient_klux = spec.test_ambient_klux;
  }
  scene.validate();
  return scene;
}

DatasetManifest generate_dataset(const ToolConfig& config, const DatasetSpec& spec,
                                 std::uint64_t master_seed,
                                 const std::filesystem::path& out_dir, unsigned workers) {
  config.validate();
  spec.validate();
  if (workers < 1) throw DomainError("dataset: workers must be >= 1");
  std::filesystem::create_directories(out_dir);

  const std::uint64_t total = spec.total_exposures();
  std::vector<std::string> blobs(total);
  std::vector<SceneInstance> scenes(total);

  const auto simulate_range = [&](std::uint64_t begin, std::uint64_t stride) {
    for (std::uint64_t i = begin; i < total; i += stride) {
      scenes[i] = scene_for_index(spec, master_seed, i);
      const ExposureRecord rec = simulate_exposure(config.optical, config.sensor, scenes[i],
                                                   exposure_sim_seed(master_seed, i));
      blobs[i] = serialize_exposure(rec);
    }
  };
  if (workers == 1 || total < 2) {
    simulate_range(0, 1);
  } else {
    std::vector<std::thread> pool;
    for (unsigned w = 0; w < workers; ++w) pool.emplace_back(simulate_range, w, workers);
    for (auto& t : pool) t.join();
  }

  DatasetManifest manifest;
  manifest.master_seed = master_seed;
  manifest.rng_algorithm = rng_algorithm_id;
  manifest.spec = spec;
  manifest.config = config;
  manifest.pack_file = pack_file_name;
  manifest.entries.resize(total);

  const auto pack_path = out_dir / pack_file_name;
  std::ofstream pack(pack_path, std::ios::binary | std::ios::trunc);
  if (!pack) throw DataError("dataset: cannot open " + pack_path.string());
  std::uint64_t offset = 0;
  for (std::uint64_t i = 0; i < total; ++i) {
    auto& e = manifest.entries[i];
    e.scene = scenes[i];
    e.sim_seed = exposure_sim_seed(master_seed, i);
    e.offset = offset;
    e.length = blobs[i].size();
    e.sha256 = sha256_hex(blobs[i]);
    pack.write(blobs[i].data(), static_cast<std::streamsize>(blobs[i].size()));
    offset += blobs[i].size();
  }
  pack.close();
  if (!pack) throw DataError("dataset: write failed: " + pack_path.string());

  save_manifest(out_dir / "manifest.json", manifest);
  return manifest;
}

void save_manifest(const std::filesystem::path& file, const DatasetManifest& m) {
  nlohmann::ordered_json j;
  j["format_version"] = manifest_version;
  j["master_seed"] = m.master_seed;
  j["rng_algorithm"] = m.rng_algorithm;
  j["pack_file"] = m.pack_file;

  nlohmann::ordered_json spec;
  spec["mode"] = m.spec.mode == DatasetSpec::Mode::train ? "train" : "test";
  spec["count"] = m.spec.count;
  spec["depth_min_m"] = m.spec.depth_min_m;
  spec["depth_max_m"] = m.spec.depth_max_m;
  spec["depth_step_m"] = m.spec.depth_step_m;
  spec["reflectivity_min"] = m.spec.reflectivity_min;
  spec["reflectivity_max"] = m.spec.reflectivity_max;
  spec["ambient_min_klux"] = m.spec.ambient_min_klux;
  spec["ambient_max_klux"] = m.spec.ambient_max_klux;
  spec["test_reflectivity"] = m.spec.test_reflectivity;
  spec["test_ambient_klux"] = m.spec.test_ambient_klux;
  j["spec"] = spec;

  std::ostringstream cfg;
  write_config(cfg, m.config);
  j["config_text"] = cfg.str();

  nlohmann::ordered_json entries = nlohmann::ordered_json::array();
  for (const auto& e : m.entries) {
    nlohmann::ordered_json je;
    je["depth_m"] = e.scene.depth_m;
    je["reflectivity"] = e.scene.reflectivity;
    je["ambient_klux"] = e.scene.ambient_klux;
    je["sim_seed"] = e.sim_seed;
    je["offset"] = e.offset;
    je["length"] = e.length;
    je["sha256"] = e.sha256;
    entries.push_back(std::move(je));
  }
  j["entries"] = std::move(entries);

  std::ofstream out(file, std::ios::trunc);
  if (!out) throw DataError("manifest: cannot open " + file.string());
  out << j.dump(1) << "\n";
  if (!out) throw DataError("manifest: write failed: " + file.string());
}

DatasetManifest load_manifest(const std::filesystem::path& file) {
  std::ifstream in(file);
  if (!in) throw DataError("manifest: cannot open " + file.string());
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("manifest: parse error: ") + e.what());
  }
  try {
    if (j.at("format_version").get<std::uint32_t>() != manifest_version) {
      throw DataError("manifest: unsupported format version");
    }
    DatasetManifest m;
    m.master_seed = j.at("master_seed").get<std::uint64_t>();
    m.rng_algorithm = j.at("rng_algorithm").get<std::string>();
    m.pack_file = j.at("pack_file").get<std::string>();

    const auto& spec = j.at("spec");
    m.spec.mode = spec.at("mode").get<std::string>() == "train" ? DatasetSpec::Mode::train
                                                                : DatasetSpec::Mode::test;
    m.spec.count = spec.at("count").get<std::uint32_t>();
    m.spec.depth_min_m = spec.at("depth_min_m").get<double>();
    m.spec.depth_max_m = spec.at("depth_max_m").get<double>();
    m.spec.depth_step_m = spec.at("depth_step_m").get<double>();
    m.spec.reflectivity_min = spec.at("reflectivity_min").get<double>();
    m.spec.reflectivity_max = spec.at("reflectivity_max").get<double>();
    m.spec.ambient_min_klux = spec.at("ambient_min_klux").get<double>();
    m.spec.ambient_max_klux = spec.at("ambient_max_klux").get<double>();
    m.spec.test_reflectivity = spec.at("test_reflectivity").get<double>();
    m.spec.test_ambient_klux = spec.at("test_ambient_klux").get<double>();

    std::istringstream cfg_in(j.at("config_text").get<std::string>());
    m.config = parse_config(cfg_in);

    for (const auto& je : j.at("entries")) {
      DatasetEntry e;
      e.scene.depth_m = je.at("depth_m").get<double>();
      e.scene.reflectivity = je.at("reflectivity").get<double>();
      e.scene.ambient_klux = je.at("ambient_klux").get<double>();
      e.sim_seed = je.at("sim_seed").get<std::uint64_t>();
      e.offset = je.at("offset").get<std::uint64_t>();
      e.length = je.at("length").get<std::uint64_t>();
      e.sha256 = je.at("sha256").get<std::string>();
      m.entries.push_back(std::move(e));
    }
    return m;
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("manifest: missing or mistyped field: ") + e.what());
  }
}

ExposureRecord load_exposure(const DatasetManifest& manifest,
                             const std::filesystem::path& manifest_dir, std::size_t index) {
  if (index >= manifest.entries.size()) throw DomainError("load_exposure: index out of range");
  const auto& e = manifest.entries[index];
  const auto pack_path = manifest_dir / manifest.pack_file;
  std::ifstream in(pack_path, std::ios::binary);
  if (!in) throw DataError("dataset: cannot open " + pack_path.string());
  in.seekg(static_cast<std::streamoff>(e.offset));
  std::string bytes(e.length, '\0');
  in.read(bytes.data(), static_cast<std::streamsize>(e.length));
  if (in.gcount() != static_cast<std::streamsize>(e.length)) {
    throw DataError("dataset: short read from " + pack_path.string());
  }
  if (sha256_hex(bytes) != e.sha256) {
    throw DataError("dataset: digest mismatch for exposure " + std::to_string(index));
  }
  return deserialize_exposure(bytes);
}

std::vector<ExposureRecord> load_all_exposures(const DatasetManifest& manifest,
                                               const std::filesystem::path& manifest_dir) {
  const auto pack_path = manifest_dir / manifest.pack_file;
  std::ifstream in(pack_path, std::ios::binary);
  if (!in) throw DataError("dataset: cannot open " + pack_path.string());
  std::vector<ExposureRecord> out;
  out.reserve(manifest.entries.size());
  for (std::size_t i = 0; i < manifest.entries.size(); ++i) {
    const auto& e = manifest.entries[i];
    std::string bytes(e.length, '\0');
    in.seekg(static_cast<std::streamoff>(e.offset));
    in.read(bytes.data(), static_cast<std::streamsize>(e.length));
    if (in.gcount() != static_cast<std::streamsize>(e.length)) {
      throw DataError("dataset: short read from " + pack_path.string());
    }
    if (sha256_hex(bytes) != e.sha256) {
      throw DataError("dataset: digest mismatch for exposure " + std::to_string(i));
    }
    out.push_back(deserialize_exposure(bytes));
  }
  return out;
}

} // namespace dtof
