#include "dtof/link_budget.hpp"

#include <cmath>
#include <numbers>
#include <string>

namespace dtof {

void PulseProfile::validate(Ps cycle_window_ps) const {
  if (!(std::isfinite(sigma_ps) && sigma_ps > 0)) {
    throw DomainError("pulse profile: sigma_ps must be > 0");
  }
  if (!(std::isfinite(mu_ps) && mu_ps >= 0 && mu_ps < static_cast<double>(cycle_window_ps))) {
    throw DomainError("pulse profile: mu_ps = " + std::to_string(mu_ps) +
                      " outside [0, " + std::to_string(cycle_window_ps) + ")");
  }
}

double gaussian_profile(double t_ps, const PulseProfile& profile) {
  const double z = (t_ps - profile.mu_ps) / profile.sigma_ps;
  return std::exp(-0.5 * z * z) /
         (profile.sigma_ps * std::sqrt(2.0 * std::numbers::pi));
}

void RateBudget::validate() const {
  if (!(std::isfinite(signal_mean_per_cycle) && signal_mean_per_cycle >= 0)) {
    throw DomainError("rate budget: signal_mean_per_cycle must be finite and >= 0");
  }
  if (!(std::isfinite(ambient_rate_per_ps) && ambient_rate_per_ps >= 0)) {
    throw DomainError("rate budget: ambient_rate_per_ps must be finite and >= 0");
  }
}

RateBudget link_budget(const OpticalConfig& optical, const SensorConfig& sensor,
                       const SceneInstance& scene) {
  optical.validate();
  sensor.validate();
  scene.validate();

  const double lambda_m = optical.wavelength_nm * 1e-9;
  const double photon_energy_J =
      constants::planck_J_s * constants::speed_of_light_m_s / lambda_m;
  const double photons_per_pulse = optical.pulse_energy_nj * 1e-9 / photon_energy_J;

  // Illuminated disc radius at the target for a cone with the given half-angle.
  const double half_angle_rad = optical.beam_divergence_deg * std::numbers::pi / 180.0;
  const double spot_radius_m = scene.depth_m * std::tan(half_angle_rad);
  const double spot_area_m2 = std::numbers::pi * spot_radius_m * spot_radius_m;
  const double fluence_photons_m2 = photons_per_pulse / spot_area_m2;

  // Lambertian target: radiance L = rho * F / pi per pulse. A lens of
  // f-number N_f images the patch conjugate to one macropixel; the photons
  // collected onto that pixel are L * pi / (4 N_f^2) * A_pix (image-side
  // throughput, independent of range for an extended source).
  const double pixel_area_m2 = sensor.pixel_area_um2 * 1e-12;
  const double throughput = pixel_area_m2 / (4.0 * optical.f_number * optical.f_number);
  const double losses = optical.lens_transmittance * optical.collection_efficiency * sensor.pde;

  const double signal_mean =
      scene.reflectivity * fluence_photons_m2 * throughput * losses;

  // Ambient: in-band solar irradiance per kLux, same Lambertian bounce and
  // receiver throughput, expressed per picosecond.
  const double ambient_irradiance_W_m2 =
      constants::solar_irradiance_940nm_W_m2_nm_klux * scene.ambient_klux *
      optical.filter_bandwidth_nm;
  const double ambient_photons_m2_s = ambient_irradiance_W_m2 / photon_energy_J;
  const double ambient_rate_per_s =
      scene.reflectivity * ambient_photons_m2_s * throughput * losses;
  const double ambient_rate_per_ps = ambient_rate_per_s / constants::ps_per_s;

  RateBudget budget{signal_mean, ambient_rate_per_ps};
  budget.validate();
  return budget;
}

RateBudget rate_override(double signal_mean_per_cycle, double ambient_rate_per_ps) {
  RateBudget budget{signal_mean_per_cycle, ambient_rate_per_ps};
  budget.validate();
  return budget;
}

PulseProfile pulse_profile_for(const OpticalConfig& optical, const SceneInstance& scene) {
  PulseProfile p;
  p.mu_ps = depth_to_tof_ps(scene.depth_m);
  p.sigma_ps = fwhm_to_sigma(optical.pulse_fwhm_ns * 1e3);
  return p;
}

} // namespace dtof
