#include "isbpol/tmm.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include <Eigen/Dense>

namespace isbpol {

namespace {

constexpr Complex I(0.0, 1.0);

double incident_index(const Stack& stack, PhotonEnergy energy) {
  // Lossless by stack validation, so the permittivity is real.
  const auto eps = permittivity(stack.material(stack.incident), energy);
  return std::sqrt(eps.x.real());
}

Complex admittance(const Permittivity& eps, Complex kz, Polarization pol) {
  return pol == Polarization::TM ? eps.x / kz : kz;
}

// Maps (E, H) at the exit-side plane of a layer to the incident-side plane.
Eigen::Matrix2cd layer_matrix(Complex kz, Complex q, double phase_scale) {
  const Complex delta = kz * phase_scale;
  const Complex c = std::cos(delta);
  const Complex s = std::sin(delta);
  Eigen::Matrix2cd m;
  m << c, -I * s / q, -I * q * s, c;
  return m;
}

bool lossless(const Permittivity& eps) { return eps.x.imag() == 0.0 && eps.z.imag() == 0.0; }

}  // namespace

Complex normal_wavevector(const Permittivity& eps, double kx, Polarization pol) {
  const double kx2 = kx * kx;
  const Complex kz2 = pol == Polarization::TM ? eps.x - (eps.x / eps.z) * kx2 : eps.x - kx2;
  Complex kz = std::sqrt(kz2);
  if (kz.imag() < 0.0 || (kz.imag() == 0.0 && kz.real() < 0.0)) kz = -kz;
  return kz;
}

FieldSolution::FieldSolution(const Stack& stack, const Incidence& inc) : pol_(inc.polarization) {
  validate(stack);
  if (!(inc.angle_deg >= 0.0 && inc.angle_deg < 90.0))
    throw std::domain_error("incidence angle must lie in [0, 90) degrees");
  const PhotonEnergy energy = inc.energy;
  k0_ = vacuum_wavenumber(energy.mev);
  kx_ = incident_index(stack, energy) * std::sin(deg_to_rad(inc.angle_deg));

  const std::size_t n = stack.layers.size();
  regions_.resize(n + 2);
  interfaces_.resize(n + 1);
  auto setup = [&](Region& r, const std::string& name) {
    r.eps = permittivity(stack.material(name), energy);
    r.kz = normal_wavevector(r.eps, kx_, pol_);
    r.q = admittance(r.eps, r.kz, pol_);
  };
  setup(regions_.front(), stack.incident);
  setup(regions_.back(), stack.exit);
  double z = 0.0;
  interfaces_[0] = 0.0;
  for (std::size_t j = 0; j < n; ++j) {
    setup(regions_[j + 1], stack.layers[j].material);
    regions_[j + 1].z0 = z;
    z += stack.layers[j].thickness;
    interfaces_[j + 1] = z;
  }
  regions_.back().z0 = z;

  // Back-propagate an outgoing unit wave from the exit medium.
  std::vector<Eigen::Vector2cd> eh(n + 1);
  eh[n] << 1.0, regions_.back().q;
  for (std::size_t j = n; j-- > 0;) {
    const Region& r = regions_[j + 1];
    eh[j] = layer_matrix(r.kz, r.q, k0_ * stack.layers[j].thickness) * eh[j + 1];
  }
  const Region& in = regions_.front();
  const Complex a = 0.5 * (eh[0](0) + eh[0](1) / in.q);
  const Complex b = 0.5 * (eh[0](0) - eh[0](1) / in.q);
  for (auto& v : eh) v /= a;

  regions_.front().fwd = 1.0;
  regions_.front().bwd = b / a;
  for (std::size_t j = 0; j < n; ++j) {
    Region& r = regions_[j + 1];
    r.fwd = 0.5 * (eh[j](0) + eh[j](1) / r.q);
    r.bwd = 0.5 * (eh[j](0) - eh[j](1) / r.q);
  }
  regions_.back().fwd = eh[n](0);
  regions_.back().bwd = 0.0;

  const double incident_flux = in.q.real();
  auto flux = [&](const Eigen::Vector2cd& v) { return (v(0) * std::conj(v(1))).real() / incident_flux; };

  response_.r = regions_.front().bwd;
  response_.reflectance = std::norm(response_.r);
  response_.transmittance = flux(eh[n]);
  response_.layer_absorptance.resize(n);
  double total = 0.0;
  for (std::size_t j = 0; j < n; ++j) {
    const double aj = lossless(regions_[j + 1].eps) ? 0.0 : flux(eh[j]) - flux(eh[j + 1]);
    response_.layer_absorptance[j] = aj;
    total += aj;
  }
  response_.absorptance = total;
}

std::size_t FieldSolution::region_at(double z) const {
  const auto it = std::upper_bound(interfaces_.begin(), interfaces_.end(), z);
  return static_cast<std::size_t>(it - interfaces_.begin());
}

FieldSample FieldSolution::evaluate(std::size_t region, double z) const {
  const Region& r = regions_.at(region);
  const Complex phase = I * r.kz * (k0_ * (z - r.z0));
  const Complex f = r.fwd * std::exp(phase);
  const Complex b = r.bwd == 0.0 ? Complex(0.0) : r.bwd * std::exp(-phase);
  FieldSample s;
  s.e_t = f + b;
  s.h_t = r.q * (f - b);
  if (pol_ == Polarization::TM) {
    s.d_n = -kx_ * s.h_t;
    s.e_n = s.d_n / r.eps.z;
  }
  return s;
}

double FieldSolution::penetration_depth(std::size_t region) const {
  const Complex kz = regions_.at(region).kz * k0_;
  double depth = 1000.0;
  if (kz.imag() > 1e-9 * std::abs(kz))
    depth = 1.0 / kz.imag();
  else if (kz.real() > 0.0)
    depth = 2.0 * std::numbers::pi / kz.real();
  return std::min(depth, 10000.0);
}

OpticalResponse solve(const Stack& stack, const Incidence& inc) { return FieldSolution(stack, inc).response(); }

std::vector<double> layer_absorption(const Stack& stack, const Incidence& inc) {
  return solve(stack, inc).layer_absorptance;
}

Eigen::VectorXd absorptance_spectrum(const Stack& stack, double angle_deg, std::span<const double> energies,
                                     Polarization pol) {
  if (energies.empty()) throw std::invalid_argument("empty energy grid");
  for (std::size_t i = 1; i < energies.size(); ++i)
    if (!(energies[i] > energies[i - 1])) throw std::invalid_argument("energy grid must be strictly increasing");
  Eigen::VectorXd out(static_cast<Eigen::Index>(energies.size()));
  for (std::size_t i = 0; i < energies.size(); ++i)
    out(static_cast<Eigen::Index>(i)) = solve(stack, {PhotonEnergy{energies[i]}, angle_deg, pol}).absorptance;
  return out;
}

FieldProfile field_profile(const Stack& stack, const Incidence& inc, double step_nm) {
  if (!(step_nm > 0.0)) throw std::invalid_argument("profile step must be positive");
  const FieldSolution sol(stack, inc);
  FieldProfile p;
  p.interfaces = sol.interfaces();
  const double start = -sol.penetration_depth(0);
  const double stop = p.interfaces.back() + sol.penetration_depth(sol.region_count() - 1);
  const auto count = static_cast<std::size_t>(std::floor((stop - start) / step_nm + 1e-9)) + 1;
  for (std::size_t k = 0; k < count; ++k) {
    const double z = start + static_cast<double>(k) * step_nm;
    const FieldSample s = sol.at(z);
    p.z.push_back(z);
    p.e_t.push_back(s.e_t);
    p.h_t.push_back(s.h_t);
    p.d_n.push_back(s.d_n);
    p.intensity.push_back(s.intensity());
  }
  return p;
}

}  // namespace isbpol
