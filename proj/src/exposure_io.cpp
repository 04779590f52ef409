#include "dtof/exposure_io.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <sstream>
#include <type_traits>

static_assert(std::endian::native == std::endian::little,
              "serialization assumes a little-endian host");

namespace dtof {

namespace {

constexpr char magic[4] = {'S', 'P', 'E', 'X'};
constexpr std::uint32_t format_version = 1;

class Writer {
public:
  template <typename T>
  void put(T v) {
    static_assert(std::is_trivially_copyable_v<T>);
    char buf[sizeof(T)];
    std::memcpy(buf, &v, sizeof(T));
    out_.append(buf, sizeof(T));
  }
  void put_bytes(const void* p, std::size_t n) { out_.append(static_cast<const char*>(p), n); }
  std::string take() { return std::move(out_); }

private:
  std::string out_;
};

class Reader {
public:
  explicit Reader(std::string_view b) : bytes_(b) {}

  template <typename T>
  T get() {
    static_assert(std::is_trivially_copyable_v<T>);
    if (pos_ + sizeof(T) > bytes_.size()) throw DataError("exposure file: truncated");
    T v;
    std::memcpy(&v, bytes_.data() + pos_, sizeof(T));
    pos_ += sizeof(T);
    return v;
  }
  std::string_view get_bytes(std::size_t n) {
    if (pos_ + n > bytes_.size()) throw DataError("exposure file: truncated");
    auto v = bytes_.substr(pos_, n);
    pos_ += n;
    return v;
  }
  bool exhausted() const { return pos_ == bytes_.size(); }

private:
  std::string_view bytes_;
  std::size_t pos_ = 0;
};

} // namespace

std::string serialize_exposure(const ExposureRecord& rec) {
  Writer w;
  w.put_bytes(magic, sizeof(magic));
  w.put<std::uint32_t>(format_version);

  std::ostringstream cfg;
  write_config(cfg, ToolConfig{rec.optical, rec.sensor});
  const std::string cfg_text = cfg.str();
  w.put<std::uint32_t>(static_cast<std::uint32_t>(cfg_text.size()));
  w.put_bytes(cfg_text.data(), cfg_text.size());

  w.put<double>(rec.scene.depth_m);
  w.put<double>(rec.scene.reflectivity);
  w.put<double>(rec.scene.ambient_klux);
  w.put<std::int64_t>(rec.ground_truth_tof_ps);
  w.put<std::uint64_t>(rec.seed);

  w.put<std::uint32_t>(static_cast<std::uint32_t>(rec.trigger_times.size()));
  for (const Ps t : rec.trigger_times) w.put<std::uint64_t>(static_cast<std::uint64_t>(t));

  w.put<std::uint32_t>(static_cast<std::uint32_t>(rec.events.per_spad.size()));
  for (const auto& spad : rec.events.per_spad) {
    w.put<std::uint32_t>(static_cast<std::uint32_t>(spad.size()));
    for (const Ps t : spad) {
      if (t < 0) throw ContractViolation("serialize_exposure: negative event time");
      w.put<std::uint64_t>(static_cast<std::uint64_t>(t));
    }
  }

  w.put<std::uint32_t>(0); // no optional sections
  return w.take();
}

ExposureRecord deserialize_exposure(std::string_view bytes) {
  Reader r(bytes);
  const auto m = r.get_bytes(4);
  if (std::memcmp(m.data(), magic, 4) != 0) throw DataError("exposure file: bad magic");
  const auto version = r.get<std::uint32_t>();
  if (version != format_version) {
    throw DataError("exposure file: unsupported version " + std::to_string(version));
  }

  const auto cfg_len = r.get<std::uint32_t>();
  const auto cfg_text = r.get_bytes(cfg_len);
  std::istringstream cfg_in{std::string(cfg_text)};
  const ToolConfig cfg = parse_config(cfg_in);

  ExposureRecord rec;
  rec.optical = cfg.optical;
  rec.sensor = cfg.sensor;
  rec.scene.depth_m = r.get<double>();
  rec.scene.reflectivity = r.get<double>();
  rec.scene.ambient_klux = r.get<double>();
  rec.scene.validate();
  rec.ground_truth_tof_ps = r.get<std::int64_t>();
  rec.seed = r.get<std::uint64_t>();

  const auto n_triggers = r.get<std::uint32_t>();
  if (n_triggers != rec.optical.laser_cycles) {
    throw DataError("exposure file: trigger count does not match laser_cycles");
  }
  rec.trigger_times.reserve(n_triggers);
  for (std::uint32_t i = 0; i < n_triggers; ++i) {
    rec.trigger_times.push_back(static_cast<Ps>(r.get<std::uint64_t>()));
  }

  const auto n_spads = r.get<std::uint32_t>();
  if (n_spads != rec.sensor.spads_per_pixel) {
    throw DataError("exposure file: SPAD count does not match config");
  }
  const Ps exposure_length = rec.exposure_length_ps();
  rec.events.per_spad.resize(n_spads);
  for (std::uint32_t s = 0; s < n_spads; ++s) {
    const auto count = r.get<std::uint32_t>();
    auto& lane = rec.events.per_spad[s];
    lane.reserve(count);
    Ps prev = -1;
    for (std::uint32_t i = 0; i < count; ++i) {
      const Ps t = static_cast<Ps>(r.get<std::uint64_t>());
      if (t <= prev || t >= exposure_length) {
        throw DataError("exposure file: event stream violates ordering/window");
      }
      lane.push_back(t);
      prev = t;
    }
  }

  const auto n_sections = r.get<std::uint32_t>();
  for (std::uint32_t i = 0; i < n_sections; ++i) {
    r.get<std::uint32_t>(); // tag
    const auto len = r.get<std::uint64_t>();
    r.get_bytes(static_cast<std::size_t>(len)); // skip unknown payloads
  }
  if (!r.exhausted()) throw DataError("exposure file: trailing bytes");
  return rec;
}

void write_exposure_file(const std::filesystem::path& file, const ExposureRecord& rec) {
  std::ofstream out(file, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot open for write: " + file.string());
  const std::string bytes = serialize_exposure(rec);
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw DataError("write failed: " + file.string());
}

ExposureRecord read_exposure_file(const std::filesystem::path& file) {
  std::ifstream in(file, std::ios::binary);
  if (!in) throw DataError("cannot open: " + file.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return deserialize_exposure(ss.str());
}

} // namespace dtof
