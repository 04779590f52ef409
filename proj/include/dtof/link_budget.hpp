#pragma once

#include "dtof/config.hpp"
#include "dtof/units.hpp"

namespace dtof {

// Temporal profile of the laser return: a normalized Gaussian centred on
// the signal arrival time. Times in ps.
struct PulseProfile {
  double mu_ps = 0.0;
  double sigma_ps = 1.0;

  void validate(Ps cycle_window_ps) const;
};

// Value of the unit-area Gaussian profile at time t (units: 1/ps).
double gaussian_profile(double t_ps, const PulseProfile& profile);

// Expected *detected* photon rates for one scene. PDE, lens transmittance
// and collection efficiency are already folded in, so downstream sampling
// only applies jitter and dead time.
struct RateBudget {
  double signal_mean_per_cycle = 0.0; // detected signal photons per laser cycle
  double ambient_rate_per_ps = 0.0;   // detected ambient photons per ps

  void validate() const;
};

// Radiometry chain, applied identically to signal and ambient except for
// the source term:
//   photons per pulse  N = pulse_energy / (h c / lambda)
//   target fluence     F = N / (pi (d tan(div))^2)        [divergence = half-angle]
//   Lambertian return through the lens onto one macropixel:
//                      n = rho F A_pix / (4 N_f^2)
//   detected           n_det = n T_lens eta_coll PDE
// Ambient uses the in-band solar irradiance constant (see units.hpp) times
// ambient_klux and filter_bandwidth in place of the pulse fluence, and is
// returned per ps instead of per pulse.
RateBudget link_budget(const OpticalConfig& optical, const SensorConfig& sensor,
                       const SceneInstance& scene);

// Escape hatch for injecting rates computed by an external optical model.
RateBudget rate_override(double signal_mean_per_cycle, double ambient_rate_per_ps);

// Pulse profile for a scene: mu at the round-trip time of flight, sigma from
// the pulse FWHM. mu is relative to the cycle trigger.
PulseProfile pulse_profile_for(const OpticalConfig& optical, const SceneInstance& scene);

} // namespace dtof
