#include "isbpol/materials.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace isbpol {

namespace {

void require(bool ok, const char* what) {
  if (!ok) throw std::domain_error(what);
}

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};

}  // namespace

void validate(const MaterialModel& model) {
  std::visit(overloaded{
                 [](const ConstantMedium& m) {
                   require(std::isfinite(m.eps_bg) && m.eps_bg >= 1.0,
                           "constant medium: eps must be >= 1");
                 },
                 [](const DrudeMedium& m) {
                   require(std::isfinite(m.eps_inf) && m.eps_inf >= 1.0,
                           "drude medium: eps_inf must be >= 1");
                   require(m.plasma_energy >= 0.0 && m.damping >= 0.0,
                           "drude medium: energies must be >= 0");
                 },
                 [](const IsbLorentzMedium& m) {
                   require(std::isfinite(m.eps_bg) && m.eps_bg >= 1.0,
                           "isb medium: eps_bg must be >= 1");
                   require(!m.eps_bg_z || (std::isfinite(*m.eps_bg_z) && *m.eps_bg_z >= 1.0),
                           "isb medium: eps_bg_z must be >= 1");
                   require(m.transition_energy >= 0.0 && m.plasma_energy >= 0.0 &&
                               m.linewidth >= 0.0,
                           "isb medium: energies must be >= 0");
                 },
             },
             model);
}

Permittivity permittivity(const MaterialModel& model, PhotonEnergy energy) {
  if (!(energy.mev > 0.0) || !std::isfinite(energy.mev))
    throw std::domain_error("photon energy must be positive, got " + std::to_string(energy.mev));
  const double e = energy.mev;
  return std::visit(overloaded{
                        [](const ConstantMedium& m) {
                          return Permittivity{Complex(m.eps_bg), Complex(m.eps_bg)};
                        },
                        [e](const DrudeMedium& m) {
                          const Complex eps = m.eps_inf + drude_term(e, m.plasma_energy, m.damping);
                          return Permittivity{eps, eps};
                        },
                        [e](const IsbLorentzMedium& m) {
                          const Complex bg(m.eps_bg), bg_z(m.background_z());
                          if (m.plasma_energy == 0.0) return Permittivity{bg, bg_z};
                          const Complex lorentz = lorentz_term(e, m.transition_energy, m.plasma_energy, m.linewidth);
                          return Permittivity{m.anisotropic ? bg : bg + lorentz, bg_z + lorentz};
                        },
                    },
                    model);
}

double sheet_to_plasma(const SheetDensityParams& p) {
  require(p.sheet_density > 0.0 && p.effective_mass > 0.0 && p.effective_length > 0.0 &&
              p.screening > 0.0,
          "sheet_to_plasma: all parameters must be strictly positive");
  using namespace constants;
  const double ns = p.sheet_density * 1e4;        // m^-2
  const double length = p.effective_length * 1e-9;  // m
  const double omega2 = ns * electron_charge * electron_charge /
                        (vacuum_permittivity * p.screening * p.effective_mass * electron_mass * length);
  return hbar * std::sqrt(omega2) / electron_charge * 1e3;
}

double volume_plasma_energy(double density_cm3, double effective_mass) {
  require(density_cm3 >= 0.0 && effective_mass > 0.0,
          "volume_plasma_energy: density >= 0 and mass > 0 required");
  using namespace constants;
  const double n = density_cm3 * 1e6;
  const double omega2 =
      n * electron_charge * electron_charge / (vacuum_permittivity * effective_mass * electron_mass);
  return hbar * std::sqrt(omega2) / electron_charge * 1e3;
}

}  // namespace isbpol
