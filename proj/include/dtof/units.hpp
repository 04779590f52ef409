#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

// Base units used throughout: time in picoseconds (integer where it is a
// timestamp, double where it is a derived quantity), length in metres,
// energy in joules unless a function says otherwise.

namespace dtof {

using Ps = std::int64_t; // absolute timestamps, integer picoseconds

namespace constants {
inline constexpr double speed_of_light_m_s = 2.99792458e8;
inline constexpr double planck_J_s = 6.62607015e-34;
// FWHM = 2*sqrt(2*ln 2) * sigma for a Gaussian
inline constexpr double fwhm_per_sigma = 2.354820045030949;
inline constexpr double ps_per_s = 1e12;
// In-band solar spectral irradiance per kLux of ambient illumination,
// W / (m^2 nm kLux).  Derived from AM1.5 direct sun: ~0.33 W/m^2/nm at
// 940 nm for ~120 kLux of broadband illuminance.
inline constexpr double solar_irradiance_940nm_W_m2_nm_klux = 2.75e-3;
} // namespace constants

// Error taxonomy mapped to CLI exit codes: DataError -> 2, NumericError -> 3.
// DomainError and ContractViolation indicate caller bugs or invalid config.

class DomainError : public std::runtime_error {
public:
  explicit DomainError(const std::string& msg) : std::runtime_error(msg) {}
};

class DataError : public std::runtime_error {
public:
  explicit DataError(const std::string& msg) : std::runtime_error(msg) {}
};

class NumericError : public std::runtime_error {
public:
  explicit NumericError(const std::string& msg) : std::runtime_error(msg) {}
};

class ContractViolation : public std::logic_error {
public:
  explicit ContractViolation(const std::string& msg) : std::logic_error(msg) {}
};

// Gaussian FWHM <-> standard deviation.
double fwhm_to_sigma(double fwhm);

// Round-trip time of flight for a target at distance d (metres), in ps.
double depth_to_tof_ps(double depth_m);

// Inverse of depth_to_tof_ps.
double tof_to_depth_m(double tof_ps);

} // namespace dtof
