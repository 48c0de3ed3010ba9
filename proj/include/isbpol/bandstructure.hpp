// One-dimensional single-band effective-mass conduction-band solver with an
// optional Schrodinger-Poisson loop.
//
// The BenDaniel-Duke Hamiltonian -d/dz (hbar^2 / 2m(z)) d/dz + V(z) is
// discretised with linear finite elements on a uniform grid of cells. V, m and
// the doping are constant per cell; the wavefunction is piecewise linear on
// the cell edges (nodes) and vanishes at the outer walls. The weak form
// carries the continuity of psi and (1/m) dpsi/dz across interfaces, and the
// eigenvalues are variational upper bounds that fall under grid refinement.
#ifndef ISBPOL_BANDSTRUCTURE_HPP
#define ISBPOL_BANDSTRUCTURE_HPP

#include <optional>
#include <stdexcept>
#include <utility>
#include <vector>

#include <Eigen/Core>

#include "isbpol/stack.hpp"

namespace isbpol {

struct BandParams {
  double barrier_offset = 390.0;  // meV, Al0.45Ga0.55As on GaAs
  double well_mass = 0.067;
  double barrier_mass = 0.104;
  /// Band gaps for the Kane nonparabolic mass, meV.
  double well_gap = 1519.0;
  double barrier_gap = 2080.0;
  double well_static_eps = 12.9;
  double barrier_static_eps = 11.62;
  double step = 0.05;    // nm
  double padding = 20.0;  // nm of barrier at each hard wall
  double bias = 0.0;      // meV drop per period
  double temperature = 78.0;
};

struct BandProblem {
  Eigen::VectorXd z;          // nm, cell centres, uniform
  Eigen::VectorXd potential;  // meV
  Eigen::VectorXd mass;       // m0
  Eigen::VectorXd doping;     // cm^-3
  Eigen::VectorXd gap;        // meV
  Eigen::VectorXd static_eps;
  double temperature = 78.0;
  /// Every eigenstate counts as bound (box with hard walls at the edges).
  bool hard_wall_box = false;
  /// Main quantum well [begin, end) in nm, when known.
  std::optional<std::pair<double, double>> main_well;

  double step() const { return z.size() > 1 ? z(1) - z(0) : 0.0; }
};

/// Throws std::invalid_argument for inconsistent grids or non-positive masses.
void validate(const BandProblem& p);

/// All repetitions of the sequence: wells at zero, barriers at the offset,
/// optional linear bias. `padded` adds params.padding of barrier at each end.
BandProblem build_potential(const PeriodSequence& seq, const BandParams& params = {}, bool padded = false);

/// One period seen from its widest well: the layers of the neighbouring
/// periods (excluding their copies of that well) pad both sides. Only the
/// central period is doped.
BandProblem main_well_problem(const PeriodSequence& seq, const BandParams& params = {});

/// A single well between padding barriers.
BandProblem isolated_well_problem(double width, const BandParams& params = {});

/// A flat box with hard walls at its edges.
BandProblem infinite_well_problem(double width, double mass, double step = 0.05);

struct SchrodingerOptions {
  /// Kane energy-dependent mass m(E) = m (1 + (E - V) / Eg), solved to self
  /// consistency per state.
  bool nonparabolic = false;
};

struct EigenSolution {
  Eigen::VectorXd energies;       // meV ascending
  Eigen::VectorXd nodes;          // nm, cell edges including both walls
  Eigen::MatrixXd wavefunctions;  // nodal values, one column per state, nm^-1/2
  bool no_bound_states = false;

  Eigen::Index size() const { return energies.size(); }
};

/// Exact integral of psi_i psi_j over the piecewise-linear interpolant.
double overlap(const EigenSolution& s, Eigen::Index i, Eigen::Index j);

/// Wavefunction averaged onto the cell centres of the problem grid.
Eigen::VectorXd on_cells(const EigenSolution& s, Eigen::Index state);

/// Electron density per cell (nm^-3) of a normalised state holding one
/// electron per nm^2.
Eigen::VectorXd cell_density(const EigenSolution& s, Eigen::Index state);

/// Lowest `n_states` bound states (fewer if fewer are bound).
EigenSolution solve_schrodinger(const BandProblem& p, int n_states, const SchrodingerOptions& options = {});

/// Interior sign changes of a wavefunction.
int node_count(const Eigen::VectorXd& psi);

/// Integral of psi^2 over the cells whose centres lie in [begin, end).
double localization(const EigenSolution& s, Eigen::Index state, double begin, double end);

class ConvergenceError : public std::runtime_error {
 public:
  ConvergenceError(const std::string& what, std::vector<double> history)
      : std::runtime_error(what), history_(std::move(history)) {}
  const std::vector<double>& history() const { return history_; }

 private:
  std::vector<double> history_;
};

enum class Filling { GroundSubband, FermiDirac };

struct SelfConsistentOptions {
  int max_iterations = 200;
  double tolerance = 0.1;  // meV, max |dV|
  double mixing = 0.3;
  Filling filling = Filling::GroundSubband;
  int n_states = 6;
  SchrodingerOptions schrodinger;
};

struct SelfConsistentResult {
  BandProblem problem;  ///< potential includes the Hartree term
  EigenSolution states;
  Eigen::VectorXd hartree;
  std::vector<double> occupations;  // nm^-2
  int iterations = 0;
  double residual = 0.0;
  std::vector<double> residual_history;
  /// Largest |net charge| / total donor charge seen over all iterations.
  double charge_imbalance = 0.0;
};

/// Throws ConvergenceError (with the residual history) when the loop
/// diverges or exceeds max_iterations.
SelfConsistentResult poisson_selfconsistent(const BandProblem& p, const SelfConsistentOptions& options = {});

/// Hartree potential energy (meV) for a net charge density (donors minus
/// electrons, nm^-3), zero at both ends.
Eigen::VectorXd hartree_potential(const BandProblem& p, const Eigen::VectorXd& net_charge);

struct E21Options {
  bool nonparabolic = true;
  bool selfconsistent = false;
  bool isolated_main_well = false;
  SelfConsistentOptions poisson;
};

struct TransitionResult {
  double e1 = 0.0;
  double e2 = 0.0;
  double e21 = 0.0;
  double localization1 = 0.0;
  double localization2 = 0.0;
  BandProblem problem;
  EigenSolution states;
  std::optional<SelfConsistentResult> selfconsistent;
};

/// E2 - E1 of the two states localised in the widest well. Throws
/// std::domain_error when fewer than two such states are bound.
TransitionResult transition_e21(const PeriodSequence& seq, const BandParams& params = {},
                                const E21Options& options = {});

}  // namespace isbpol

#endif  // ISBPOL_BANDSTRUCTURE_HPP
