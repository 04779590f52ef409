#pragma once

#include <cstdint>
#include <vector>

#include "dtof/config.hpp"
#include "dtof/link_budget.hpp"
#include "dtof/rng.hpp"
#include "dtof/units.hpp"

namespace dtof {

enum class PhotonOrigin : std::uint8_t { signal = 0, ambient = 1 };

// A detection candidate before SPAD jitter / dead time.
struct PhotonArrival {
  Ps time_ps = 0; // exposure-global, in [0, exposure_length)
  PhotonOrigin origin = PhotonOrigin::ambient;
  std::uint32_t spad_index = 0;
};

// Final detections: per SPAD, strictly increasing, consecutive gaps >= dead
// time, all within the exposure window.
struct SpadEventStream {
  std::vector<std::vector<Ps>> per_spad;

  std::size_t total_events() const {
    std::size_t n = 0;
    for (const auto& s : per_spad) n += s.size();
    return n;
  }
};

struct ExposureRecord {
  OpticalConfig optical;
  SensorConfig sensor;
  SceneInstance scene;
  std::vector<Ps> trigger_times; // one jittered start per laser cycle
  SpadEventStream events;
  Ps ground_truth_tof_ps = -1; // -1 when unknown (ingested real data)
  std::uint64_t seed = 0;      // stream seed that generated this exposure

  Ps exposure_length_ps() const { return sensor.exposure_length_ps(optical.laser_cycles); }
};

// Jittered cycle starts: k*cycle_window + N(0, sigma), sigma from the trigger
// jitter FWHM, truncated at +-5 sigma by rejection, rounded to integer ps.
std::vector<Ps> sample_trigger_times(const OpticalConfig& optical, const SensorConfig& sensor,
                                     Rng& rng);

// Homogeneous Poisson process on [0, exposure_length) via exponential
// inter-arrival times; sorted integer ps.
std::vector<Ps> sample_ambient(double rate_per_ps, Ps exposure_length_ps, Rng& rng);

// Per cycle, an inhomogeneous Poisson process with intensity
// signal_mean_per_cycle * gaussian_profile(t - trigger) realized by thinning
// a homogeneous envelope over mu +- 6 sigma. Times outside the exposure are
// dropped; result sorted.
std::vector<Ps> sample_signal(const RateBudget& budget, const PulseProfile& profile,
                              const std::vector<Ps>& trigger_times, Ps exposure_length_ps,
                              Rng& rng);

// Tag origins, assign each arrival to a SPAD uniformly at random, keep time
// order (inputs must be sorted).
std::vector<PhotonArrival> merge_arrivals(const std::vector<Ps>& signal_times,
                                          const std::vector<Ps>& ambient_times,
                                          std::uint32_t spads_per_pixel, Rng& rng);

// Firing jitter (Gaussian, FWHM from config, rounded to ps; out-of-window
// results dropped) followed by per-SPAD dead-time filtering.
SpadEventStream apply_spad(const std::vector<PhotonArrival>& arrivals, const SensorConfig& sensor,
                           Ps exposure_length_ps, Rng& rng);

// Full pipeline for one exposure; deterministic in (configs, scene, seed).
ExposureRecord simulate_exposure(const OpticalConfig& optical, const SensorConfig& sensor,
                                 const SceneInstance& scene, std::uint64_t seed);

} // namespace dtof
