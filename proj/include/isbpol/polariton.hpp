// Dispersion scans, polariton branch extraction and the two-mode
// coupled-oscillator analysis of the anticrossing.
#ifndef ISBPOL_POLARITON_HPP
#define ISBPOL_POLARITON_HPP

#include <cmath>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Core>

#include "isbpol/stack.hpp"
#include "isbpol/tmm.hpp"

namespace isbpol {

struct DispersionScan {
  std::vector<double> angles;    // degrees
  std::vector<double> energies;  // meV
  Eigen::MatrixXd absorptance;   // rows: angles, columns: energies
};

/// Throws std::invalid_argument for empty or non-increasing axes.
DispersionScan dispersion_scan(const Stack& stack, const std::vector<double>& angles,
                               const std::vector<double>& energies, Polarization pol = Polarization::TM);

/// Copy of the stack with every intersubband oscillator switched off.
Stack without_coupling(const Stack& stack);

struct Peak {
  double energy = 0.0;  // meV, quadratically interpolated
  double height = 0.0;
  double width = 0.0;   // FWHM, meV
};

enum class BranchFlag {
  Ok,
  SinglePeak,  ///< one resolvable peak
  NoPeak,
  Tie,         ///< the two maxima are closer than one grid step
};

std::string to_string(BranchFlag f);

struct BranchPoint {
  double angle = 0.0;
  std::optional<Peak> lp;
  std::optional<Peak> up;
  BranchFlag flag = BranchFlag::NoPeak;
  bool both() const { return lp.has_value() && up.has_value(); }
};

using Branches = std::vector<BranchPoint>;

struct ExtractOptions {
  /// Peaks with prominence below this fraction of the row maximum are ignored.
  double min_prominence = 1e-3;
  /// When set, a lone peak is assigned to the branch on its side of this
  /// energy (the bare transition); otherwise it is reported as LP.
  std::optional<double> reference_energy;
};

/// All local maxima of one absorptance row, strongest first.
std::vector<Peak> find_peaks(const std::vector<double>& energies, const Eigen::VectorXd& row,
                             double min_prominence = 1e-3);

Branches extract_branches(const DispersionScan& scan, const ExtractOptions& options = {});

/// Dominant peak per angle of a scan (bare cavity when coupling is off).
std::vector<std::optional<double>> cavity_dispersion(const DispersionScan& bare_scan,
                                                     double min_prominence = 1e-3);

struct CoupledOscillator {
  double cavity = 0.0;      // Ec, meV
  double transition = 0.0;  // E12, meV
  double coupling = 0.0;    // Omega, meV (half the splitting at resonance)
};

/// E± = (Ec + E12)/2 ± sqrt(((Ec - E12)/2)^2 + Omega^2)
template <typename Scalar>
std::pair<Scalar, Scalar> coupled_energies(Scalar cavity, Scalar transition, Scalar coupling) {
  using std::hypot;
  const Scalar mean = (cavity + transition) / Scalar(2);
  const Scalar half = hypot((cavity - transition) / Scalar(2), coupling);
  return {mean - half, mean + half};
}

inline std::pair<double, double> coupled_energies(const CoupledOscillator& m) {
  return coupled_energies(m.cavity, m.transition, m.coupling);
}

struct AnticrossingFit {
  double coupling = 0.0;    // Omega
  double transition = 0.0;  // E12 used or fitted
  double residual_rms = 0.0;
  std::vector<double> residuals;
  std::size_t points = 0;
};

struct AnticrossingOptions {
  bool fit_transition = false;
  double initial_coupling = 5.0;
};

/// Least-squares fit of Omega (and optionally E12) so the coupled-oscillator
/// energies reproduce every available branch energy. `cavity` gives Ec per
/// branch entry (nullopt where unknown). Throws std::invalid_argument when
/// fewer than three angles carry both branches and a known cavity energy.
AnticrossingFit fit_anticrossing(const Branches& branches, double transition,
                                 const std::vector<std::optional<double>>& cavity,
                                 const AnticrossingOptions& options = {});

struct RabiSplitting {
  double splitting = 0.0;        // meV
  double resonance_angle = 0.0;  // degrees
  bool on_boundary = false;      ///< minimum at the edge of the valid angle range
};

/// Minimum UP - LP over angle, refined with a parabola through the three
/// samples around the discrete minimum. Throws std::invalid_argument for
/// fewer than three angles with both branches.
RabiSplitting rabi_splitting(const Branches& branches);

/// Full pipeline on one device: coupled scan, bare-cavity scan, branch
/// extraction, coupled-oscillator fit and splitting.
struct PolaritonAnalysis {
  DispersionScan scan;
  DispersionScan bare_scan;
  Branches branches;
  std::vector<std::optional<double>> cavity;
  std::optional<AnticrossingFit> fit;
  std::optional<RabiSplitting> splitting;
};

PolaritonAnalysis analyze_dispersion(const Stack& stack, const std::vector<double>& angles,
                                     const std::vector<double>& energies, double transition);

}  // namespace isbpol

#endif  // ISBPOL_POLARITON_HPP
