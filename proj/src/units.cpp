#include "dtof/units.hpp"

namespace dtof {

double fwhm_to_sigma(double fwhm) {
  if (!(fwhm > 0.0)) {
    throw DomainError("fwhm_to_sigma: fwhm must be > 0, got " + std::to_string(fwhm));
  }
  return fwhm / constants::fwhm_per_sigma;
}

double depth_to_tof_ps(double depth_m) {
  if (depth_m < 0.0) {
    throw DomainError("depth_to_tof_ps: negative depth " + std::to_string(depth_m));
  }
  return 2.0 * depth_m / constants::speed_of_light_m_s * constants::ps_per_s;
}

double tof_to_depth_m(double tof_ps) {
  if (tof_ps < 0.0) {
    throw DomainError("tof_to_depth_m: negative time of flight " + std::to_string(tof_ps));
  }
  return tof_ps / constants::ps_per_s * constants::speed_of_light_m_s / 2.0;
}

} // namespace dtof
