// Physical constants and unit conversions.
//
// Internal units: energies in meV, lengths in nm, densities in cm^-2 / cm^-3
// at the API boundary. Time dependence is e^{-i omega t} throughout, so a
// passive (lossy) medium has Im(eps) >= 0 and a decaying wave e^{i kz z}
// has Im(kz) >= 0.
#ifndef ISBPOL_UNITS_HPP
#define ISBPOL_UNITS_HPP

#include <complex>
#include <numbers>

namespace isbpol {

using Complex = std::complex<double>;

namespace constants {
inline constexpr double hbar = 1.054571817e-34;            // J s
inline constexpr double electron_charge = 1.602176634e-19; // C
inline constexpr double vacuum_permittivity = 8.8541878128e-12;
inline constexpr double electron_mass = 9.1093837015e-31;  // kg
inline constexpr double speed_of_light = 299792458.0;
inline constexpr double boltzmann_mev = 8.617333262e-2;    // meV / K

/// hbar*c in meV*nm.
inline constexpr double hbar_c_mev_nm = 197326.9804;
/// hbar^2 / (2 m0) in meV*nm^2.
inline constexpr double hbar2_over_2m0 = 38.09982121;
/// e^2 / eps0 in meV*nm.
inline constexpr double e2_over_eps0 = 18095.128;
}  // namespace constants

/// 1 meV expressed in cm^-1.
inline constexpr double kWavenumberPerMeV = 8.06554;

inline constexpr double meV_to_wavenumber(double mev) { return mev * kWavenumberPerMeV; }
inline constexpr double wavenumber_to_meV(double cm1) { return cm1 / kWavenumberPerMeV; }

/// Vacuum wavenumber k0 = E / (hbar c) in nm^-1.
inline constexpr double vacuum_wavenumber(double energy_mev) {
  return energy_mev / constants::hbar_c_mev_nm;
}

inline constexpr double deg_to_rad(double deg) { return deg * std::numbers::pi / 180.0; }
inline constexpr double rad_to_deg(double rad) { return rad * 180.0 / std::numbers::pi; }

}  // namespace isbpol

#endif  // ISBPOL_UNITS_HPP
