#include "dtof/event_sim.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace dtof {

namespace {

// Truncated-at-5-sigma Gaussian draw (rejection); keeps the documented
// trigger-time bound while changing the distribution by ~1e-6 mass.
double truncated_gaussian(Rng& rng, double sigma) {
  if (sigma == 0.0) return 0.0;
  double g;
  do {
    g = rng.gaussian();
  } while (std::abs(g) > 5.0);
  return g * sigma;
}

} // namespace

std::vector<Ps> sample_trigger_times(const OpticalConfig& optical, const SensorConfig& sensor,
                                     Rng& rng) {
  const double sigma = optical.trigger_jitter_fwhm_ps > 0
                           ? fwhm_to_sigma(optical.trigger_jitter_fwhm_ps)
                           : 0.0;
  std::vector<Ps> triggers;
  triggers.reserve(optical.laser_cycles);
  for (std::uint32_t k = 0; k < optical.laser_cycles; ++k) {
    const double nominal = static_cast<double>(k) * static_cast<double>(sensor.cycle_window_ps);
    triggers.push_back(std::llround(nominal + truncated_gaussian(rng, sigma)));
  }
  return triggers;
}

std::vector<Ps> sample_ambient(double rate_per_ps, Ps exposure_length_ps, Rng& rng) {
  std::vector<Ps> times;
  if (rate_per_ps <= 0.0) return times;
  const double length = static_cast<double>(exposure_length_ps);
  double t = rng.exponential(rate_per_ps);
  while (t < length) {
    const Ps ti = std::llround(t);
    if (ti < exposure_length_ps) times.push_back(ti);
    t += rng.exponential(rate_per_ps);
  }
  return times;
}

std::vector<Ps> sample_signal(const RateBudget& budget, const PulseProfile& profile,
                              const std::vector<Ps>& trigger_times, Ps exposure_length_ps,
                              Rng& rng) {
  std::vector<Ps> times;
  if (budget.signal_mean_per_cycle <= 0.0) return times;

  const double mu = profile.mu_ps;
  const double sigma = profile.sigma_ps;
  // Envelope: constant at the Gaussian peak over mu +- 6 sigma (mass outside
  // is ~2e-9 of the pulse and is dropped).
  const double peak = gaussian_profile(mu, profile);
  const double envelope_rate = budget.signal_mean_per_cycle * peak;
  const double lo = mu - 6.0 * sigma;
  const double hi = mu + 6.0 * sigma;

  for (const Ps trigger : trigger_times) {
    double t = lo + rng.exponential(envelope_rate);
    while (t < hi) {
      const double z = (t - mu) / sigma;
      if (rng.uniform() < std::exp(-0.5 * z * z)) {
        const Ps global = std::llround(static_cast<double>(trigger) + t);
        if (global >= 0 && global < exposure_length_ps) times.push_back(global);
      }
      t += rng.exponential(envelope_rate);
    }
  }
  std::sort(times.begin(), times.end());
  return times;
}

std::vector<PhotonArrival> merge_arrivals(const std::vector<Ps>& signal_times,
                                          const std::vector<Ps>& ambient_times,
                                          std::uint32_t spads_per_pixel, Rng& rng) {
  std::vector<PhotonArrival> arrivals;
  arrivals.reserve(signal_times.size() + ambient_times.size());
  std::size_t i = 0;
  std::size_t j = 0;
  while (i < signal_times.size() || j < ambient_times.size()) {
    const bool take_signal =
        j >= ambient_times.size() ||
        (i < signal_times.size() && signal_times[i] <= ambient_times[j]);
    PhotonArrival a;
    if (take_signal) {
      a.time_ps = signal_times[i++];
      a.origin = PhotonOrigin::signal;
    } else {
      a.time_ps = ambient_times[j++];
      a.origin = PhotonOrigin::ambient;
    }
    a.spad_index = static_cast<std::uint32_t>(rng.uniform_below(spads_per_pixel));
    arrivals.push_back(a);
  }
  return arrivals;
}

SpadEventStream apply_spad(const std::vector<PhotonArrival>& arrivals, const SensorConfig& sensor,
                           Ps exposure_length_ps, Rng& rng) {
  const double sigma = sensor.spad_jitter_fwhm_ps > 0
                           ? fwhm_to_sigma(sensor.spad_jitter_fwhm_ps)
                           : 0.0;
  std::vector<std::vector<Ps>> candidates(sensor.spads_per_pixel);
  for (const PhotonArrival& a : arrivals) {
    if (a.spad_index >= sensor.spads_per_pixel) {
      throw ContractViolation("apply_spad: spad_index out of range");
    }
    double t = static_cast<double>(a.time_ps);
    if (sigma > 0.0) t += sigma * rng.gaussian();
    const Ps ti = std::llround(t);
    if (ti < 0 || ti >= exposure_length_ps) continue;
    candidates[a.spad_index].push_back(ti);
  }

  SpadEventStream out;
  out.per_spad.resize(sensor.spads_per_pixel);
  // Gap threshold >= 1 keeps timestamps strictly increasing even with a
  // zero dead time configured.
  const Ps min_gap = std::max<Ps>(sensor.dead_time_ps, 1);
  for (std::uint32_t s = 0; s < sensor.spads_per_pixel; ++s) {
    auto& cand = candidates[s];
    std::sort(cand.begin(), cand.end());
    auto& kept = out.per_spad[s];
    if (sensor.paralyzable_dead_time) {
      // Every arrival restarts the dead window whether or not it was
      // detected: detect iff the previous arrival is at least min_gap away.
      Ps prev_arrival = std::numeric_limits<Ps>::min() / 2;
      Ps prev_kept = prev_arrival;
      for (const Ps t : cand) {
        if (t - prev_arrival >= min_gap && t - prev_kept >= min_gap) {
          kept.push_back(t);
          prev_kept = t;
        }
        prev_arrival = t;
      }
    } else {
      // Non-paralyzable: dead only after detected events.
      Ps prev_kept = std::numeric_limits<Ps>::min() / 2;
      for (const Ps t : cand) {
        if (t - prev_kept >= min_gap) {
          kept.push_back(t);
          prev_kept = t;
        }
      }
    }
  }
  return out;
}

ExposureRecord simulate_exposure(const OpticalConfig& optical, const SensorConfig& sensor,
                                 const SceneInstance& scene, std::uint64_t seed) {
  optical.validate();
  sensor.validate();
  scene.validate();

  ExposureRecord rec;
  rec.optical = optical;
  rec.sensor = sensor;
  rec.scene = scene;
  rec.seed = seed;

  const Ps exposure_length = sensor.exposure_length_ps(optical.laser_cycles);
  const RateBudget budget = link_budget(optical, sensor, scene);
  const PulseProfile profile = pulse_profile_for(optical, scene);
  profile.validate(sensor.cycle_window_ps);

  Rng rng(seed);
  rec.trigger_times = sample_trigger_times(optical, sensor, rng);
  const auto ambient = sample_ambient(budget.ambient_rate_per_ps, exposure_length, rng);
  const auto signal =
      sample_signal(budget, profile, rec.trigger_times, exposure_length, rng);
  const auto arrivals = merge_arrivals(signal, ambient, sensor.spads_per_pixel, rng);
  rec.events = apply_spad(arrivals, sensor, exposure_length, rng);
  rec.ground_truth_tof_ps = std::llround(depth_to_tof_ps(scene.depth_m));
  return rec;
}

} // namespace dtof
