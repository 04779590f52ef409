#include "dtof/energy.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>

#include "dtof/units.hpp"

namespace dtof {

void NeuronEnergyProfile::validate() const {
  if (e_n_zj <= 0 || e_s_zj <= 0) {
    throw DomainError("energy profile '" + name + "': per-spike energies must be > 0");
  }
}

std::vector<NeuronEnergyProfile> energy_presets() {
  // Synaptic entries follow the published neural/10 ratio except graphene,
  // whose source table prints 30 fJ (a 13.3 ratio).
  return {
      {"btbt-lif", 1'900'000, 190'000, "band-to-band-tunneling LIF"},
      {"graphene-lif", 400'000'000, 30'000'000, "graphene LIF"},
      {"cmos-benchmark-lif", 2'180'000'000, 218'000'000, "digital CMOS benchmark LIF"},
      {"bimos-lif", 180'000'000, 18'000'000, "lateral BiMOS LIF"},
      {"tfet-lif", 1'500, 150, "tunnel-FET LIF"},
  };
}

const NeuronEnergyProfile& energy_preset(const std::string& name) {
  static const std::vector<NeuronEnergyProfile> presets = energy_presets();
  for (const auto& p : presets) {
    if (p.name == name) return p;
  }
  std::string known;
  for (const auto& p : presets) known += (known.empty() ? "" : ", ") + p.name;
  throw DomainError("unknown energy preset '" + name + "' (have: " + known + ")");
}

namespace {

std::int64_t checked_mul(std::int64_t energy_zj, std::uint64_t count,
                         const char* what) {
  std::int64_t out = 0;
  if (count > static_cast<std::uint64_t>(std::numeric_limits<std::int64_t>::max()) ||
      __builtin_mul_overflow(energy_zj, static_cast<std::int64_t>(count), &out)) {
    throw NumericError(std::string("energy estimate overflows 64-bit zJ: ") + what);
  }
  return out;
}

} // namespace

EnergyBreakdown estimate_energy(const SpikeCounters& counters,
                                const NeuronEnergyProfile& profile) {
  profile.validate();
  EnergyBreakdown b;
  b.neural_zj = checked_mul(profile.e_n_zj, counters.neural, "neural term");
  b.synaptic_zj = checked_mul(profile.e_s_zj, counters.synaptic, "synaptic term");
  if (__builtin_add_overflow(b.neural_zj, b.synaptic_zj, &b.total_zj)) {
    throw NumericError("energy estimate overflows 64-bit zJ: total");
  }
  return b;
}

double power_at_fps(double total_j, double fps) {
  if (!(fps > 0.0)) throw DomainError("power_at_fps: fps must be > 0");
  if (!(total_j >= 0.0)) throw DomainError("power_at_fps: energy must be >= 0");
  return total_j * fps;
}

std::int64_t derive_synaptic_energy(std::int64_t e_n_zj, double ratio) {
  if (e_n_zj <= 0) throw DomainError("derive_synaptic_energy: E_n must be > 0");
  if (!(ratio > 0.0)) throw DomainError("derive_synaptic_energy: ratio must be > 0");
  return std::llround(static_cast<double>(e_n_zj) / ratio);
}

namespace {

struct Unit {
  const char* suffix;
  double scale_zj; // zeptojoules per unit
};

constexpr Unit kUnits[] = {
    {"J", 1e21}, {"mJ", 1e18}, {"uJ", 1e15}, {"nJ", 1e12},
    {"pJ", 1e9}, {"fJ", 1e6},  {"aJ", 1e3},  {"zJ", 1.0},
};

} // namespace

std::string format_energy_zj(std::int64_t zj) {
  if (zj == 0) return "0 zJ";
  const double mag = std::abs(static_cast<double>(zj));
  for (const Unit& u : kUnits) {
    if (mag >= u.scale_zj) {
      long long mant = std::llround(static_cast<double>(zj) / u.scale_zj);
      return std::to_string(mant) + " " + u.suffix;
    }
  }
  return std::to_string(zj) + " zJ";
}

std::string format_power_w(double watts) {
  static constexpr struct {
    const char* suffix;
    double scale;
  } units[] = {{"W", 1.0},    {"mW", 1e-3}, {"uW", 1e-6}, {"nW", 1e-9},
               {"pW", 1e-12}, {"fW", 1e-15}, {"aW", 1e-18}};
  if (watts == 0.0) return "0 W";
  const double mag = std::abs(watts);
  for (const auto& u : units) {
    if (mag >= u.scale) {
      char buf[64];
      std::snprintf(buf, sizeof buf, "%.2f", watts / u.scale);
      std::string s = buf;
      while (!s.empty() && s.back() == '0') s.pop_back();
      if (!s.empty() && s.back() == '.') s.pop_back();
      return s + " " + u.suffix;
    }
  }
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.3g W", watts);
  return buf;
}

void write_energy_report(const std::filesystem::path& file, const SpikeCounters& counters,
                         const std::vector<NeuronEnergyProfile>& profiles, double fps) {
  std::ofstream out(file);
  if (!out) throw DataError("cannot write energy report: " + file.string());
  out << "profile,e_n,e_s,n_neural,n_synaptic,neural,synaptic,total,power_at_"
      << fps << "fps\n";
  for (const auto& p : profiles) {
    const EnergyBreakdown b = estimate_energy(counters, p);
    out << p.name << ',' << format_energy_zj(p.e_n_zj) << ',' << format_energy_zj(p.e_s_zj)
        << ',' << counters.neural << ',' << counters.synaptic << ','
        << format_energy_zj(b.neural_zj) << ',' << format_energy_zj(b.synaptic_zj) << ','
        << format_energy_zj(b.total_zj) << ',' << format_power_w(power_at_fps(b.total_j(), fps))
        << '\n';
  }
}

} // namespace dtof
