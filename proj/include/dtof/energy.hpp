#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "dtof/network.hpp"

namespace dtof {

// Per-spike energy costs of a neuron technology. Stored as integer
// zeptojoules (1e-21 J) so every built-in preset is exact and reports
// cannot drift across platforms.
struct NeuronEnergyProfile {
  std::string name;
  std::int64_t e_n_zj = 0; // energy per neural spike
  std::int64_t e_s_zj = 0; // energy per synaptic event
  std::string note;

  void validate() const; // throws DomainError unless both energies > 0
};

// The five built-in profiles (published device-level estimates); synaptic
// energy is neural / 10 except graphene's published 30 fJ.
std::vector<NeuronEnergyProfile> energy_presets();
const NeuronEnergyProfile& energy_preset(const std::string& name);

struct EnergyBreakdown {
  std::int64_t neural_zj = 0;    // E_n * N_n
  std::int64_t synaptic_zj = 0;  // E_s * N_s
  std::int64_t total_zj = 0;

  double neural_j() const { return static_cast<double>(neural_zj) * 1e-21; }
  double synaptic_j() const { return static_cast<double>(synaptic_zj) * 1e-21; }
  double total_j() const { return static_cast<double>(total_zj) * 1e-21; }
};

// E_T = E_s * N_s + E_n * N_n, exact integer arithmetic.
EnergyBreakdown estimate_energy(const SpikeCounters& counters,
                                const NeuronEnergyProfile& profile);

// Average power at a frame rate: E_T * fps. fps must be > 0.
double power_at_fps(double total_j, double fps);

// E_s = E_n / ratio (rounded to the nearest zeptojoule).
std::int64_t derive_synaptic_energy(std::int64_t e_n_zj, double ratio);

// Display formatting used by reports: integer mantissa in the largest unit
// >= 1 (half away from zero), e.g. 202,500,000,000 zJ -> "203 pJ".
std::string format_energy_zj(std::int64_t zj);
// Power keeps two decimals, trailing zeros trimmed: 6.12e-9 -> "6.12 nW".
std::string format_power_w(double watts);

// CSV: profile,e_n,e_s,n_neural,n_synaptic,neural,synaptic,total,power_at_fps
void write_energy_report(const std::filesystem::path& file, const SpikeCounters& counters,
                         const std::vector<NeuronEnergyProfile>& profiles, double fps);

} // namespace dtof
