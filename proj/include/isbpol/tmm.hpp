// Transfer-matrix solver for plane waves in planar, uniaxial (optic axis
// along z) stratified media.
//
// Fields are carried as (tangential E, tangential H) pairs normalised so that
// the z-directed Poynting flux is Re(E conj(H)). For TM the tangential
// components are (Ex, Hy) and the admittance is eps_x / kz; for TE they are
// (Ey, -Hx) with admittance kz. Wavevectors are in units of k0. Every
// normal wavevector takes the branch Im(kz) >= 0 (Re(kz) >= 0 when real).
#ifndef ISBPOL_TMM_HPP
#define ISBPOL_TMM_HPP

#include <span>
#include <vector>

#include <Eigen/Core>

#include "isbpol/stack.hpp"

namespace isbpol {

enum class Polarization { TM, TE };

struct Incidence {
  PhotonEnergy energy;
  double angle_deg = 0.0;  ///< propagation angle inside the incident medium
  Polarization polarization = Polarization::TM;
};

struct OpticalResponse {
  Complex r;
  double reflectance = 0.0;
  double transmittance = 0.0;  ///< flux entering the exit medium
  double absorptance = 0.0;    ///< sum over finite layers
  std::vector<double> layer_absorptance;
};

/// Normal wavevector (units of k0) for in-plane wavevector kx (units of k0).
Complex normal_wavevector(const Permittivity& eps, double kx, Polarization pol);

/// Throws std::domain_error for angles outside [0, 90) and any
/// material/stack error.
OpticalResponse solve(const Stack& stack, const Incidence& inc);

std::vector<double> layer_absorption(const Stack& stack, const Incidence& inc);

/// Absorptance at a fixed angle over a strictly increasing energy grid.
Eigen::VectorXd absorptance_spectrum(const Stack& stack, double angle_deg, std::span<const double> energies,
                                     Polarization pol = Polarization::TM);

struct FieldSample {
  Complex e_t;  ///< tangential E
  Complex h_t;  ///< tangential H
  Complex d_n;  ///< normal D (zero for TE), units of eps0
  Complex e_n;  ///< normal E (zero for TE)
  double intensity() const { return std::norm(e_t) + std::norm(e_n); }
};

/// Full field solution for one incidence; region 0 is the incident medium,
/// regions 1..N the layers, N+1 the exit medium. z = 0 is the first
/// interface and grows toward the exit. Incident amplitude is unity.
class FieldSolution {
 public:
  FieldSolution(const Stack& stack, const Incidence& inc);

  std::size_t region_count() const { return regions_.size(); }
  /// z positions of the N+1 interfaces.
  const std::vector<double>& interfaces() const { return interfaces_; }
  std::size_t region_at(double z) const;
  /// Evaluates the field of a given region's solution at z (may lie outside
  /// the region, used to take one-sided limits at interfaces).
  FieldSample evaluate(std::size_t region, double z) const;
  FieldSample at(double z) const { return evaluate(region_at(z), z); }

  const OpticalResponse& response() const { return response_; }
  /// 1/e length of |E|^2 in a semi-infinite medium, or one wavelength along
  /// z when the wave propagates.
  double penetration_depth(std::size_t region) const;

 private:
  struct Region {
    Permittivity eps;
    Complex kz;
    Complex q;
    double z0 = 0.0;  ///< reference plane for the amplitudes
    Complex fwd, bwd;
  };
  std::vector<Region> regions_;
  std::vector<double> interfaces_;
  double k0_ = 0.0;
  double kx_ = 0.0;
  Polarization pol_;
  OpticalResponse response_;
};

struct FieldProfile {
  std::vector<double> z;  // nm
  std::vector<Complex> e_t, h_t, d_n;
  std::vector<double> intensity;
  std::vector<double> interfaces;
};

/// Samples the field on a uniform grid covering the finite layers plus one
/// penetration depth into each semi-infinite medium.
FieldProfile field_profile(const Stack& stack, const Incidence& inc, double step_nm = 2.0);

}  // namespace isbpol

#endif  // ISBPOL_TMM_HPP
