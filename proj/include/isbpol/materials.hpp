// Dispersive, optionally uniaxial permittivity models.
//
// Sign convention: fields vary as e^{-i omega t}; passive media have
// Im(eps) >= 0. The growth axis is z; eps_x is the in-plane component.
#ifndef ISBPOL_MATERIALS_HPP
#define ISBPOL_MATERIALS_HPP

#include <optional>
#include <variant>

#include "isbpol/units.hpp"

namespace isbpol {

/// Photon energy in meV. Construction does not validate; evaluation does.
struct PhotonEnergy {
  double mev = 0.0;

  static constexpr PhotonEnergy from_wavenumber(double cm1) { return {wavenumber_to_meV(cm1)}; }
  constexpr double wavenumber() const { return meV_to_wavenumber(mev); }
  /// Angular frequency in rad/s.
  constexpr double angular_frequency() const {
    return mev * 1e-3 * constants::electron_charge / constants::hbar;
  }
};

struct Permittivity {
  Complex x;  ///< in-plane
  Complex z;  ///< growth axis

  bool isotropic() const { return x == z; }
};

struct ConstantMedium {
  double eps_bg = 1.0;
  friend bool operator==(const ConstantMedium&, const ConstantMedium&) = default;
};

/// eps_inf - Ep^2 / (E^2 + i gamma E)
struct DrudeMedium {
  double eps_inf = 1.0;
  double plasma_energy = 0.0;  // meV
  double damping = 0.0;        // meV
  friend bool operator==(const DrudeMedium&, const DrudeMedium&) = default;
};

/// Intersubband transition as a classical Lorentz oscillator ensemble:
/// eps_bg + (hbar wP)^2 / (E12^2 - E^2 - i gamma12 E), on eps_z only unless
/// isotropic. A layered background may carry a distinct growth-axis value.
struct IsbLorentzMedium {
  double eps_bg = 1.0;
  double transition_energy = 0.0;  // meV
  double plasma_energy = 0.0;      // meV
  double linewidth = 0.0;          // meV
  bool anisotropic = true;
  std::optional<double> eps_bg_z;  ///< defaults to eps_bg

  double background_z() const { return eps_bg_z.value_or(eps_bg); }
  friend bool operator==(const IsbLorentzMedium&, const IsbLorentzMedium&) = default;
};

using MaterialModel = std::variant<ConstantMedium, DrudeMedium, IsbLorentzMedium>;

/// Throws std::domain_error on invalid parameters (negative energies,
/// background permittivity below 1).
void validate(const MaterialModel& model);

/// Throws std::domain_error when E <= 0.
Permittivity permittivity(const MaterialModel& model, PhotonEnergy energy);

template <typename Scalar>
std::complex<Scalar> drude_term(Scalar energy, Scalar plasma, Scalar damping) {
  using C = std::complex<Scalar>;
  return -plasma * plasma / C(energy * energy, damping * energy);
}

template <typename Scalar>
std::complex<Scalar> lorentz_term(Scalar energy, Scalar resonance, Scalar plasma, Scalar width) {
  using C = std::complex<Scalar>;
  return plasma * plasma / C(resonance * resonance - energy * energy, -width * energy);
}

struct SheetDensityParams {
  double sheet_density = 0.0;   // cm^-2
  double effective_mass = 0.0;  // m0
  double effective_length = 0.0;  // nm
  double screening = 1.0;       // eps_s
};

/// hbar*sqrt(Ns e^2 / (eps0 eps_s m L)) in meV.
double sheet_to_plasma(const SheetDensityParams& p);

/// Unscreened free-carrier plasma energy hbar*sqrt(N e^2 / (eps0 m)) in meV
/// for a volume density in cm^-3.
double volume_plasma_energy(double density_cm3, double effective_mass);

}  // namespace isbpol

#endif  // ISBPOL_MATERIALS_HPP
