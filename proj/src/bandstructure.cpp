#include "isbpol/bandstructure.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "isbpol/tridiagonal.hpp"
#include "isbpol/units.hpp"

namespace isbpol {

namespace {

constexpr double kCm3ToNm3 = 1e-21;

struct Segment {
  double thickness;
  bool barrier;
  double doping;  // cm^-3
};

BandProblem from_segments(const std::vector<Segment>& segs, const BandParams& bp, double bias_period) {
  if (!(bp.step > 0.0)) throw std::invalid_argument("grid step must be positive");
  double length = 0.0;
  for (const auto& s : segs) length += s.thickness;
  const auto n = static_cast<Eigen::Index>(std::lround(length / bp.step));
  if (n < 3) throw std::invalid_argument("structure shorter than three grid cells");

  BandProblem p;
  p.z.resize(n);
  p.potential.resize(n);
  p.mass.resize(n);
  p.doping.resize(n);
  p.gap.resize(n);
  p.static_eps.resize(n);
  p.temperature = bp.temperature;

  std::size_t seg = 0;
  double seg_end = segs[0].thickness;
  for (Eigen::Index i = 0; i < n; ++i) {
    const double z = (static_cast<double>(i) + 0.5) * bp.step;
    while (z >= seg_end && seg + 1 < segs.size()) seg_end += segs[++seg].thickness;
    const Segment& s = segs[seg];
    p.z(i) = z;
    p.potential(i) = s.barrier ? bp.barrier_offset : 0.0;
    if (bias_period > 0.0) p.potential(i) -= bp.bias * z / bias_period;
    p.mass(i) = s.barrier ? bp.barrier_mass : bp.well_mass;
    p.gap(i) = s.barrier ? bp.barrier_gap : bp.well_gap;
    p.static_eps(i) = s.barrier ? bp.barrier_static_eps : bp.well_static_eps;
    p.doping(i) = s.doping;
  }
  return p;
}

std::size_t widest_well(const PeriodSequence& seq) {
  std::size_t best = seq.layers.size();
  for (std::size_t i = 0; i < seq.layers.size(); ++i)
    if (!seq.layers[i].barrier && (best == seq.layers.size() || seq.layers[i].thickness > seq.layers[best].thickness))
      best = i;
  if (best == seq.layers.size()) throw std::domain_error("sequence has no well");
  return best;
}

double cell_integral(double a, double b) { return (a * a + a * b + b * b) / 3.0; }

// Per-cell masses, optionally with the Kane energy dependence at energy e.
Eigen::VectorXd cell_masses(const BandProblem& p, double e, bool nonparabolic) {
  if (!nonparabolic) return p.mass;
  Eigen::VectorXd m(p.mass.size());
  for (Eigen::Index i = 0; i < m.size(); ++i) {
    // Floored so the mass stays positive deep below tall barriers.
    const double factor = std::max(1.0 + (e - p.potential(i)) / p.gap(i), 0.05);
    m(i) = p.mass(i) * factor;
  }
  return m;
}

tridiagonal::Pencil assemble(const BandProblem& p, const Eigen::VectorXd& mass) {
  const double h = p.step();
  const double c = constants::hbar2_over_2m0;
  const Eigen::Index cells = p.z.size();
  const Eigen::Index n = cells - 1;  // interior nodes
  tridiagonal::Pencil t;
  t.k_diag.resize(n);
  t.m_diag.setConstant(n, 2.0 * h / 3.0);
  t.k_off.resize(n - 1);
  t.m_off.setConstant(n - 1, h / 6.0);
  for (Eigen::Index i = 0; i < n; ++i) {
    // node i + 1 sits between cells i and i + 1
    t.k_diag(i) = c / h * (1.0 / mass(i) + 1.0 / mass(i + 1)) + h / 3.0 * (p.potential(i) + p.potential(i + 1));
    if (i + 1 < n) t.k_off(i) = -c / (h * mass(i + 1)) + h / 6.0 * p.potential(i + 1);
  }
  return t;
}

double m_inner(const tridiagonal::Pencil& t, const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
  return a.dot(tridiagonal::multiply(t.m_diag, t.m_off, b));
}

// Deterministic sign: the first lobe above 1% of the peak is positive.
void fix_sign(Eigen::VectorXd& v) {
  const double peak = v.cwiseAbs().maxCoeff();
  for (Eigen::Index i = 0; i < v.size(); ++i)
    if (std::abs(v(i)) > 1e-2 * peak) {
      if (v(i) < 0.0) v = -v;
      return;
    }
}

struct State {
  double energy;
  Eigen::VectorXd vector;
};

State solve_state(const BandProblem& p, Eigen::Index k, const SchrodingerOptions& options) {
  if (!options.nonparabolic) {
    const auto t = assemble(p, p.mass);
    const double e = tridiagonal::eigenvalue(t, k);
    return {e, tridiagonal::eigenvector(t, e)};
  }
  double e = tridiagonal::eigenvalue(assemble(p, p.mass), k);
  for (int it = 0; it < 100; ++it) {
    const double next = tridiagonal::eigenvalue(assemble(p, cell_masses(p, e, true)), k);
    const bool done = std::abs(next - e) < 1e-9;
    e = next;
    if (done) break;
  }
  const auto t = assemble(p, cell_masses(p, e, true));
  return {e, tridiagonal::eigenvector(t, e)};
}

}  // namespace

void validate(const BandProblem& p) {
  const Eigen::Index n = p.z.size();
  if (n < 3) throw std::invalid_argument("band problem needs at least three cells");
  if (p.potential.size() != n || p.mass.size() != n || p.doping.size() != n || p.gap.size() != n ||
      p.static_eps.size() != n)
    throw std::invalid_argument("band problem grids differ in length");
  const double h = p.z(1) - p.z(0);
  if (!(h > 0.0)) throw std::invalid_argument("grid must be increasing");
  for (Eigen::Index i = 1; i < n; ++i)
    if (std::abs(p.z(i) - p.z(i - 1) - h) > 1e-9 * std::max(1.0, h))
      throw std::invalid_argument("grid must be uniform");
  if (!(p.mass.array() > 0.0).all()) throw std::invalid_argument("effective mass must be positive");
  if (!(p.static_eps.array() > 0.0).all()) throw std::invalid_argument("static permittivity must be positive");
  if (!(p.doping.array() >= 0.0).all()) throw std::invalid_argument("doping must be non-negative");
  if (!p.potential.allFinite()) throw std::invalid_argument("potential must be finite");
}

BandProblem build_potential(const PeriodSequence& seq, const BandParams& params, bool padded) {
  validate(seq);
  std::vector<Segment> segs;
  if (padded) segs.push_back({params.padding, true, 0.0});
  for (int r = 0; r < seq.repetitions; ++r)
    for (const auto& l : seq.layers) segs.push_back({l.thickness, l.barrier, l.doped ? seq.doping : 0.0});
  if (padded) segs.push_back({params.padding, true, 0.0});
  return from_segments(segs, params, period_thickness(seq));
}

BandProblem main_well_problem(const PeriodSequence& seq, const BandParams& params) {
  validate(seq);
  const std::size_t main = widest_well(seq);
  const std::size_t n = seq.layers.size();
  std::vector<Segment> segs{{params.padding, true, 0.0}};
  // Previous period from just after its main well, undoped.
  for (std::size_t k = 1; k < n; ++k) {
    const auto& l = seq.layers[(main + k) % n];
    segs.push_back({l.thickness, l.barrier, 0.0});
  }
  double begin = params.padding;
  for (std::size_t k = 1; k < n; ++k) begin += seq.layers[(main + k) % n].thickness;
  for (std::size_t k = 0; k < n; ++k) {
    const auto& l = seq.layers[(main + k) % n];
    segs.push_back({l.thickness, l.barrier, l.doped ? seq.doping : 0.0});
  }
  segs.push_back({params.padding, true, 0.0});
  BandProblem p = from_segments(segs, params, period_thickness(seq));
  p.main_well = std::make_pair(begin, begin + seq.layers[main].thickness);
  return p;
}

BandProblem isolated_well_problem(double width, const BandParams& params) {
  if (!(width > 0.0)) throw std::invalid_argument("well width must be positive");
  BandProblem p = from_segments({{params.padding, true, 0.0}, {width, false, 0.0}, {params.padding, true, 0.0}},
                                params, 0.0);
  p.main_well = std::make_pair(params.padding, params.padding + width);
  return p;
}

BandProblem infinite_well_problem(double width, double mass, double step) {
  if (!(width > 0.0) || !(mass > 0.0)) throw std::invalid_argument("width and mass must be positive");
  BandParams bp;
  bp.step = step;
  bp.well_mass = mass;
  BandProblem p = from_segments({{width, false, 0.0}}, bp, 0.0);
  p.hard_wall_box = true;
  p.main_well = std::make_pair(0.0, width);
  return p;
}

EigenSolution solve_schrodinger(const BandProblem& p, int n_states, const SchrodingerOptions& options) {
  validate(p);
  if (n_states < 1) throw std::invalid_argument("n_states must be at least 1");
  const double h = p.step();
  const Eigen::Index cells = p.z.size();

  EigenSolution sol;
  sol.nodes.resize(cells + 1);
  for (Eigen::Index i = 0; i <= cells; ++i) sol.nodes(i) = p.z(0) - 0.5 * h + static_cast<double>(i) * h;

  Eigen::Index available = cells - 1;
  if (!p.hard_wall_box) {
    // Bound: below the potential at both walls.
    const double edge = std::min(p.potential(0), p.potential(cells - 1));
    available = tridiagonal::count_below(assemble(p, p.mass), edge);
  }
  const Eigen::Index count = std::min<Eigen::Index>(n_states, available);
  sol.energies.resize(count);
  sol.wavefunctions = Eigen::MatrixXd::Zero(cells + 1, count);
  sol.no_bound_states = count == 0;

  const auto parabolic = assemble(p, p.mass);
  for (Eigen::Index k = 0; k < count; ++k) {
    State s = solve_state(p, k, options);
    if (!options.nonparabolic) {
      // Re-orthogonalise against close neighbours (tunnel-split doublets).
      for (Eigen::Index j = 0; j < k; ++j) {
        if (std::abs(sol.energies(j) - s.energy) > 1e-6 * std::max(1.0, std::abs(s.energy))) continue;
        const Eigen::VectorXd prev = sol.wavefunctions.col(j).segment(1, cells - 1);
        s.vector -= m_inner(parabolic, prev, s.vector) * prev;
        s.vector /= std::sqrt(m_inner(parabolic, s.vector, s.vector));
      }
    }
    fix_sign(s.vector);
    sol.energies(k) = s.energy;
    sol.wavefunctions.col(k).segment(1, cells - 1) = s.vector;
  }
  return sol;
}

double overlap(const EigenSolution& s, Eigen::Index i, Eigen::Index j) {
  const Eigen::Index n = s.nodes.size();
  double sum = 0.0;
  for (Eigen::Index k = 0; k + 1 < n; ++k) {
    const double h = s.nodes(k + 1) - s.nodes(k);
    const double a0 = s.wavefunctions(k, i), a1 = s.wavefunctions(k + 1, i);
    const double b0 = s.wavefunctions(k, j), b1 = s.wavefunctions(k + 1, j);
    sum += h / 6.0 * (2.0 * a0 * b0 + a0 * b1 + a1 * b0 + 2.0 * a1 * b1);
  }
  return sum;
}

Eigen::VectorXd on_cells(const EigenSolution& s, Eigen::Index state) {
  const Eigen::Index n = s.nodes.size() - 1;
  const auto col = s.wavefunctions.col(state);
  return 0.5 * (col.head(n) + col.tail(n));
}

Eigen::VectorXd cell_density(const EigenSolution& s, Eigen::Index state) {
  const Eigen::Index n = s.nodes.size() - 1;
  Eigen::VectorXd rho(n);
  const auto col = s.wavefunctions.col(state);
  for (Eigen::Index k = 0; k < n; ++k) rho(k) = cell_integral(col(k), col(k + 1));
  return rho;
}

int node_count(const Eigen::VectorXd& psi) {
  const double peak = psi.cwiseAbs().maxCoeff();
  const double floor = 1e-9 * peak;
  int nodes = 0;
  double last = 0.0;
  for (Eigen::Index i = 0; i < psi.size(); ++i) {
    if (std::abs(psi(i)) <= floor) continue;
    if (last != 0.0 && (psi(i) > 0.0) != (last > 0.0)) ++nodes;
    last = psi(i);
  }
  return nodes;
}

double localization(const EigenSolution& s, Eigen::Index state, double begin, double end) {
  const Eigen::VectorXd rho = cell_density(s, state);
  double sum = 0.0;
  for (Eigen::Index k = 0; k < rho.size(); ++k) {
    const double centre = 0.5 * (s.nodes(k) + s.nodes(k + 1));
    if (centre >= begin && centre < end) sum += rho(k) * (s.nodes(k + 1) - s.nodes(k));
  }
  return sum;
}

Eigen::VectorXd hartree_potential(const BandProblem& p, const Eigen::VectorXd& net_charge) {
  // d/dz (eps dV/dz) = (e^2 / eps0) rho on the cell centres, V = 0 at the
  // first and last cell.
  const Eigen::Index n = p.z.size();
  const double h = p.step();
  const Eigen::Index m = n - 2;
  Eigen::VectorXd sub(m - 1), diag(m), super(m - 1), rhs(m);
  auto face = [&](Eigen::Index i) { return 2.0 / (1.0 / p.static_eps(i) + 1.0 / p.static_eps(i + 1)); };
  for (Eigen::Index r = 0; r < m; ++r) {
    const Eigen::Index i = r + 1;
    const double left = face(i - 1), right = face(i);
    diag(r) = -(left + right) / (h * h);
    if (r > 0) sub(r - 1) = left / (h * h);
    if (r + 1 < m) super(r) = right / (h * h);
    rhs(r) = constants::e2_over_eps0 * net_charge(i);
  }
  Eigen::VectorXd v = Eigen::VectorXd::Zero(n);
  v.segment(1, m) = tridiagonal::solve(sub, diag, super, rhs);
  return v;
}

SelfConsistentResult poisson_selfconsistent(const BandProblem& p, const SelfConsistentOptions& options) {
  validate(p);
  if (!(options.mixing > 0.0 && options.mixing <= 1.0)) throw std::invalid_argument("mixing must be in (0, 1]");
  if (!(options.tolerance > 0.0)) throw std::invalid_argument("tolerance must be positive");

  const double h = p.step();
  const Eigen::VectorXd donors = p.doping * kCm3ToNm3;
  const double sheet = donors.sum() * h;  // nm^-2
  const double well_mass = p.mass.minCoeff();
  const double kt = constants::boltzmann_mev * p.temperature;
  const double dos = well_mass / (2.0 * M_PI * constants::hbar2_over_2m0);  // meV^-1 nm^-2, spin included

  SelfConsistentResult out;
  out.problem = p;
  out.hartree = Eigen::VectorXd::Zero(p.z.size());
  double best = std::numeric_limits<double>::infinity();
  int since_best = 0;

  for (int it = 1; it <= options.max_iterations; ++it) {
    out.problem.potential = p.potential + out.hartree;
    out.states = solve_schrodinger(out.problem, options.n_states, options.schrodinger);
    if (sheet > 0.0 && out.states.no_bound_states)
      throw ConvergenceError("no bound state to hold the donor electrons", out.residual_history);

    Eigen::VectorXd electrons = Eigen::VectorXd::Zero(p.z.size());
    out.occupations.assign(static_cast<std::size_t>(out.states.size()), 0.0);
    if (sheet > 0.0) {
      if (options.filling == Filling::GroundSubband || out.states.size() == 1) {
        out.occupations[0] = sheet;
      } else {
        const Eigen::VectorXd& e = out.states.energies;
        auto total = [&](double mu) {
          double n = 0.0;
          for (Eigen::Index k = 0; k < e.size(); ++k) {
            const double x = (mu - e(k)) / kt;
            n += dos * kt * (x > 40.0 ? x : std::log1p(std::exp(x)));
          }
          return n;
        };
        double lo = e(0) - 60.0 * kt, hi = e(0) + sheet / dos + 60.0 * kt;
        for (int b = 0; b < 200 && hi - lo > 1e-13 * std::max(1.0, std::abs(hi)); ++b) {
          const double mid = 0.5 * (lo + hi);
          (total(mid) < sheet ? lo : hi) = mid;
        }
        const double mu = 0.5 * (lo + hi);
        double sum = 0.0;
        for (Eigen::Index k = 0; k < e.size(); ++k) {
          const double x = (mu - e(k)) / kt;
          out.occupations[static_cast<std::size_t>(k)] = dos * kt * (x > 40.0 ? x : std::log1p(std::exp(x)));
          sum += out.occupations[static_cast<std::size_t>(k)];
        }
        // Remove the bisection remainder so neutrality is exact.
        for (auto& o : out.occupations) o *= sheet / sum;
      }
      for (Eigen::Index k = 0; k < out.states.size(); ++k)
        electrons += out.occupations[static_cast<std::size_t>(k)] * cell_density(out.states, k);
    }

    const Eigen::VectorXd net = donors - electrons;
    if (sheet > 0.0) out.charge_imbalance = std::max(out.charge_imbalance, std::abs(net.sum() * h) / sheet);

    const Eigen::VectorXd target = hartree_potential(p, net);
    const double residual = (target - out.hartree).cwiseAbs().maxCoeff();
    out.residual_history.push_back(residual);
    out.iterations = it;
    out.residual = residual;
    if (residual < options.tolerance) {
      out.hartree = target;
      out.problem.potential = p.potential + out.hartree;
      out.states = solve_schrodinger(out.problem, options.n_states, options.schrodinger);
      return out;
    }
    if (residual < best) {
      best = residual;
      since_best = 0;
    } else if (++since_best >= 10) {
      throw ConvergenceError("Schrodinger-Poisson loop diverged: no residual improvement in 10 iterations",
                             out.residual_history);
    }
    out.hartree += options.mixing * (target - out.hartree);
  }
  throw ConvergenceError("Schrodinger-Poisson loop did not converge in " + std::to_string(options.max_iterations) +
                             " iterations",
                         out.residual_history);
}

TransitionResult transition_e21(const PeriodSequence& seq, const BandParams& params, const E21Options& options) {
  validate(seq);
  TransitionResult r;
  r.problem = options.isolated_main_well ? isolated_well_problem(seq.layers[widest_well(seq)].thickness, params)
                                         : main_well_problem(seq, params);
  SchrodingerOptions so{options.nonparabolic};
  const int n_states = 12;
  if (options.selfconsistent) {
    SelfConsistentOptions po = options.poisson;
    po.schrodinger = so;
    po.n_states = std::max(po.n_states, n_states);
    r.selfconsistent = poisson_selfconsistent(r.problem, po);
    r.states = r.selfconsistent->states;
  } else {
    r.states = solve_schrodinger(r.problem, n_states, so);
  }
  if (r.states.size() < 2) throw std::domain_error("fewer than two bound states");

  const auto [begin, end] = *r.problem.main_well;
  std::vector<double> loc(static_cast<std::size_t>(r.states.size()));
  for (Eigen::Index k = 0; k < r.states.size(); ++k)
    loc[static_cast<std::size_t>(k)] = localization(r.states, k, begin, end);

  std::size_t first = loc.size();
  for (std::size_t k = 0; k < loc.size(); ++k)
    if (loc[k] >= 0.5) {
      first = k;
      break;
    }
  if (first == loc.size()) throw std::domain_error("no bound state is localised in the main well");
  std::size_t second = loc.size();
  for (std::size_t k = first + 1; k < loc.size(); ++k)
    if (loc[k] >= 0.5) {
      second = k;
      break;
    }
  if (second == loc.size()) {
    // Hybridised upper level: take the state above with the largest weight.
    double w = 0.25;
    for (std::size_t k = first + 1; k < loc.size(); ++k)
      if (loc[k] > w) {
        w = loc[k];
        second = k;
      }
  }
  if (second == loc.size()) throw std::domain_error("fewer than two bound states localised in the main well");

  r.e1 = r.states.energies(static_cast<Eigen::Index>(first));
  r.e2 = r.states.energies(static_cast<Eigen::Index>(second));
  r.e21 = r.e2 - r.e1;
  r.localization1 = loc[first];
  r.localization2 = loc[second];
  return r;
}

}  // namespace isbpol
