#include "dtof/ingest.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>
#include <sstream>
#include <thread>

#include "dtof/histogram.hpp"

namespace dtof {

void RealFrameSet::validate() const {
  if (width == 0 || height == 0) throw DataError("frame set: empty array dimensions");
  if (n_frames == 0) throw DataError("frame set: no frames declared");
  if (!(code_to_ps > 0.0)) throw DataError("frame set: code_to_ps must be > 0");
  for (const auto& r : records) {
    if (r.x >= width || r.y >= height) {
      throw DataError("frame set: pixel (" + std::to_string(r.x) + "," +
                      std::to_string(r.y) + ") outside " + std::to_string(width) + "x" +
                      std::to_string(height));
    }
    if (r.frame >= n_frames) {
      throw DataError("frame set: record in frame " + std::to_string(r.frame) +
                      " but only " + std::to_string(n_frames) + " frames declared");
    }
  }
}

RealFrameSet load_real_frames_text(const std::filesystem::path& file) {
  std::ifstream in(file);
  if (!in) throw DataError("cannot open frame set: " + file.string());
  RealFrameSet set;
  std::string line;
  std::size_t line_no = 0;
  bool in_records = false;
  while (std::getline(in, line)) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    while (!line.empty() && (line.back() == ' ' || line.back() == '\t' || line.back() == '\r')) {
      line.pop_back();
    }
    if (line.empty()) continue;
    std::istringstream ss(line);
    if (!in_records) {
      std::string key;
      ss >> key;
      if (key == "records") {
        in_records = true;
      } else if (key == "width") {
        ss >> set.width;
      } else if (key == "height") {
        ss >> set.height;
      } else if (key == "n_frames") {
        ss >> set.n_frames;
      } else if (key == "code_to_ps") {
        ss >> set.code_to_ps;
      } else {
        throw DataError(file.string() + ":" + std::to_string(line_no) +
                        ": unknown header key '" + key + "'");
      }
      if (ss.fail()) {
        throw DataError(file.string() + ":" + std::to_string(line_no) + ": bad header value");
      }
    } else {
      RealFrameRecord r;
      char c1 = 0, c2 = 0, c3 = 0;
      ss >> r.frame >> c1 >> r.x >> c2 >> r.y >> c3 >> r.code;
      if (ss.fail() || c1 != ',' || c2 != ',' || c3 != ',') {
        throw DataError(file.string() + ":" + std::to_string(line_no) +
                        ": expected frame,x,y,code");
      }
      set.records.push_back(r);
    }
  }
  set.validate();
  return set;
}

void save_real_frames_text(const std::filesystem::path& file, const RealFrameSet& set) {
  set.validate();
  std::ofstream out(file);
  if (!out) throw DataError("cannot write frame set: " + file.string());
  out.precision(17);
  out << "width " << set.width << "\nheight " << set.height << "\nn_frames "
      << set.n_frames << "\ncode_to_ps " << set.code_to_ps << "\nrecords\n";
  for (const auto& r : set.records) {
    out << r.frame << ',' << r.x << ',' << r.y << ',' << r.code << '\n';
  }
}

namespace {

constexpr char kPackedMagic[4] = {'R', 'F', 'S', '1'};

template <typename T>
void put(std::string& buf, T v) {
  static_assert(std::endian::native == std::endian::little);
  buf.append(reinterpret_cast<const char*>(&v), sizeof v);
}

template <typename T>
T take(const std::string& buf, std::size_t& pos) {
  if (pos + sizeof(T) > buf.size()) throw DataError("packed frame set: truncated");
  T v;
  std::memcpy(&v, buf.data() + pos, sizeof v);
  pos += sizeof v;
  return v;
}

} // namespace

void save_real_frames_packed(const std::filesystem::path& file, const RealFrameSet& set) {
  set.validate();
  std::string buf;
  buf.append(kPackedMagic, sizeof kPackedMagic);
  put<std::uint32_t>(buf, set.width);
  put<std::uint32_t>(buf, set.height);
  put<std::uint32_t>(buf, set.n_frames);
  put<double>(buf, set.code_to_ps);
  put<std::uint64_t>(buf, set.records.size());
  for (const auto& r : set.records) {
    put<std::uint32_t>(buf, r.frame);
    put<std::uint16_t>(buf, r.x);
    put<std::uint16_t>(buf, r.y);
    put<std::uint32_t>(buf, r.code);
  }
  std::ofstream out(file, std::ios::binary);
  if (!out) throw DataError("cannot write frame set: " + file.string());
  out.write(buf.data(), static_cast<std::streamsize>(buf.size()));
}

RealFrameSet load_real_frames_packed(const std::filesystem::path& file) {
  std::ifstream in(file, std::ios::binary);
  if (!in) throw DataError("cannot open frame set: " + file.string());
  std::string buf((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (buf.size() < 4 || std::memcmp(buf.data(), kPackedMagic, 4) != 0) {
    throw DataError("packed frame set: bad magic in " + file.string());
  }
  std::size_t pos = 4;
  RealFrameSet set;
  set.width = take<std::uint32_t>(buf, pos);
  set.height = take<std::uint32_t>(buf, pos);
  set.n_frames = take<std::uint32_t>(buf, pos);
  set.code_to_ps = take<double>(buf, pos);
  const auto n = take<std::uint64_t>(buf, pos);
  set.records.reserve(n);
  for (std::uint64_t i = 0; i < n; ++i) {
    RealFrameRecord r;
    r.frame = take<std::uint32_t>(buf, pos);
    r.x = take<std::uint16_t>(buf, pos);
    r.y = take<std::uint16_t>(buf, pos);
    r.code = take<std::uint32_t>(buf, pos);
    set.records.push_back(r);
  }
  if (pos != buf.size()) throw DataError("packed frame set: trailing bytes");
  set.validate();
  return set;
}

ReformatResult reformat_frames(const RealFrameSet& set, const ToolConfig& config,
                               const ReformatOptions& opts) {
  set.validate();
  config.optical.validate();
  config.sensor.validate();
  if (opts.frames_per_exposure == 0) throw DomainError("reformat: frames_per_exposure must be >= 1");
  if (opts.group == 0) throw DomainError("reformat: group must be >= 1");
  if (!(opts.time_scale > 0.0)) throw DomainError("reformat: time_scale must be > 0");
  if (set.n_frames < opts.frames_per_exposure) {
    throw DataError("reformat: " + std::to_string(set.n_frames) + " frames < " +
                    std::to_string(opts.frames_per_exposure) + " per exposure");
  }
  if (set.width % opts.group != 0 || set.height % opts.group != 0) {
    throw DataError("reformat: array " + std::to_string(set.width) + "x" +
                    std::to_string(set.height) + " not divisible into " +
                    std::to_string(opts.group) + "x" + std::to_string(opts.group) +
                    " macropixels");
  }

  const Ps cycle = config.sensor.cycle_window_ps;
  const std::size_t n_exposures = set.n_frames / opts.frames_per_exposure;
  const std::size_t mw = set.width / opts.group;
  const std::size_t mh = set.height / opts.group;
  const std::uint32_t lanes = opts.group * opts.group;
  const Ps window = static_cast<Ps>(opts.frames_per_exposure) * cycle;

  ReformatResult result;
  result.map_width = mw;
  result.map_height = mh;
  result.exposures.assign(n_exposures, {});

  // Sensor description carried by every emitted exposure; the cycle count is
  // the frame block size so exposure_length matches the pooled window.
  OpticalConfig optical = config.optical;
  optical.laser_cycles = opts.frames_per_exposure;
  SensorConfig sensor = config.sensor;
  sensor.spads_per_pixel = lanes;

  for (std::size_t e = 0; e < n_exposures; ++e) {
    auto& grid = result.exposures[e];
    grid.assign(mw * mh, ExposureRecord{});
    for (auto& rec : grid) {
      rec.optical = optical;
      rec.sensor = sensor;
      rec.ground_truth_tof_ps = -1;
      rec.trigger_times.resize(opts.frames_per_exposure);
      for (std::uint32_t k = 0; k < opts.frames_per_exposure; ++k) {
        rec.trigger_times[k] = static_cast<Ps>(k) * cycle;
      }
      rec.events.per_spad.assign(lanes, {});
    }
  }

  for (const auto& r : set.records) {
    const std::size_t e = r.frame / opts.frames_per_exposure;
    if (e >= n_exposures) { // tail frames beyond the last full block
      ++result.dropped;
      continue;
    }
    const std::uint32_t k = r.frame % opts.frames_per_exposure;
    const double code_ps = static_cast<double>(r.code) * set.code_to_ps;
    Ps t;
    if (opts.scale_after_shift) {
      t = static_cast<Ps>(std::llround(
          opts.time_scale * (static_cast<double>(k) * static_cast<double>(cycle) + code_ps)));
    } else {
      t = static_cast<Ps>(k) * cycle + static_cast<Ps>(std::llround(opts.time_scale * code_ps));
    }
    if (t < 0 || t >= window) {
      ++result.dropped;
      continue;
    }
    const std::size_t mx = r.x / opts.group;
    const std::size_t my = r.y / opts.group;
    const std::uint32_t lane =
        (r.y % opts.group) * opts.group + (r.x % opts.group);
    result.exposures[e][my * mw + mx].events.per_spad[lane].push_back(t);
  }

  // Restore the per-SPAD stream invariants: sorted, and no two detections
  // closer than the dead time (the sensor's own dead time predates the x3
  // stretch, so pooled codes can violate it).
  const Ps dead = config.sensor.dead_time_ps;
  for (auto& grid : result.exposures) {
    for (auto& rec : grid) {
      for (auto& lane : rec.events.per_spad) {
        std::sort(lane.begin(), lane.end());
        std::vector<Ps> kept;
        kept.reserve(lane.size());
        for (Ps t : lane) {
          if (kept.empty() || t - kept.back() >= dead) {
            kept.push_back(t);
          } else {
            ++result.dead_filtered;
          }
        }
        lane.swap(kept);
      }
    }
  }
  return result;
}

namespace {

template <typename Fn>
void parallel_for(std::size_t n, unsigned workers, Fn&& fn) {
  if (workers <= 1 || n <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  const unsigned k = static_cast<unsigned>(std::min<std::size_t>(workers, n));
  std::vector<std::thread> pool;
  pool.reserve(k);
  for (unsigned w = 0; w < k; ++w) {
    pool.emplace_back([&fn, w, k, n] {
      for (std::size_t i = w; i < n; i += k) fn(i);
    });
  }
  for (auto& t : pool) t.join();
}

void check_grid(const std::vector<ExposureRecord>& grid, std::size_t width,
                std::size_t height) {
  if (grid.size() != width * height) {
    throw ContractViolation("depth map: grid size " + std::to_string(grid.size()) +
                            " != " + std::to_string(width) + "x" + std::to_string(height));
  }
}

} // namespace

DepthMap render_depth_map_com(const std::vector<ExposureRecord>& grid, std::size_t width,
                              std::size_t height, std::size_t window_halfwidth,
                              unsigned workers) {
  check_grid(grid, width, height);
  DepthMap map;
  map.width = width;
  map.height = height;
  map.depth_m.assign(width * height, std::numeric_limits<double>::quiet_NaN());
  parallel_for(grid.size(), workers, [&](std::size_t i) {
    try {
      const Histogram h = accumulate_histogram(grid[i], grid[i].sensor);
      map.depth_m[i] = com_depth(h, window_halfwidth).depth_estimate_m;
    } catch (const DataError&) {
      // no usable peak: leave the sentinel
    }
  });
  return map;
}

DepthMap render_depth_map_snn(const std::vector<ExposureRecord>& grid, std::size_t width,
                              std::size_t height, const NetworkParams& net,
                              Combiner combiner, unsigned workers) {
  check_grid(grid, width, height);
  DepthMap map;
  map.width = width;
  map.height = height;
  map.depth_m.assign(width * height, std::numeric_limits<double>::quiet_NaN());
  parallel_for(grid.size(), workers, [&](std::size_t i) {
    const NetworkInput input = build_network_input(grid[i], combiner, net.cfg);
    const InferResult r = infer_exposure(input, net);
    const bool silent = net.mode == RunMode::spiking && r.counters.neural == 0;
    if (!silent) map.depth_m[i] = r.depth_m;
  });
  return map;
}

void write_depth_csv(const std::filesystem::path& file, const DepthMap& map) {
  std::ofstream out(file);
  if (!out) throw DataError("cannot write depth map: " + file.string());
  out.precision(10);
  for (std::size_t y = 0; y < map.height; ++y) {
    for (std::size_t x = 0; x < map.width; ++x) {
      if (x) out << ',';
      out << map.at(x, y);
    }
    out << '\n';
  }
}

void write_depth_pgm(const std::filesystem::path& file, const DepthMap& map) {
  std::ofstream out(file, std::ios::binary);
  if (!out) throw DataError("cannot write depth map: " + file.string());
  out << "P5\n" << map.width << ' ' << map.height << "\n65535\n";
  for (std::size_t y = 0; y < map.height; ++y) {
    for (std::size_t x = 0; x < map.width; ++x) {
      const double d = map.at(x, y);
      std::uint16_t v = 65535; // sentinel
      if (std::isfinite(d)) {
        const long long mm = std::llround(std::max(0.0, d) * 1000.0);
        v = static_cast<std::uint16_t>(std::min<long long>(mm, 65534));
      }
      const char bytes[2] = {static_cast<char>(v >> 8), static_cast<char>(v & 0xff)};
      out.write(bytes, 2); // PGM samples are big-endian
    }
  }
}

} // namespace dtof
