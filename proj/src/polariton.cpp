#include "isbpol/polariton.hpp"

#include <algorithm>
#include <limits>
#include <stdexcept>

#include "isbpol/nlls.hpp"

namespace isbpol {

namespace {

void require_axis(const std::vector<double>& axis, const char* name) {
  if (axis.empty()) throw std::invalid_argument(std::string(name) + " axis is empty");
  for (std::size_t i = 1; i < axis.size(); ++i)
    if (!(axis[i] > axis[i - 1]))
      throw std::invalid_argument(std::string(name) + " axis must be strictly increasing");
}

// Vertex of the parabola through three points; nullopt when it opens the
// wrong way or is degenerate.
struct Vertex {
  double x, y;
};

std::optional<Vertex> parabola_vertex(double x0, double y0, double x1, double y1, double x2, double y2,
                                      bool maximum) {
  const double d01 = (y1 - y0) / (x1 - x0);
  const double d12 = (y2 - y1) / (x2 - x1);
  const double a = (d12 - d01) / (x2 - x0);
  if (a == 0.0 || (maximum ? a > 0.0 : a < 0.0)) return std::nullopt;
  const double b = d01 - a * (x0 + x1);
  const double xv = std::clamp(-b / (2.0 * a), x0, x2);
  // Newton form: y0 + d01 (x - x0) + a (x - x0)(x - x1)
  return Vertex{xv, y0 + d01 * (xv - x0) + a * (xv - x0) * (xv - x1)};
}

double crossing(double xa, double ya, double xb, double yb, double level) {
  if (ya == yb) return xa;
  return xa + (xb - xa) * (level - ya) / (yb - ya);
}

}  // namespace

std::string to_string(BranchFlag f) {
  switch (f) {
    case BranchFlag::Ok: return "ok";
    case BranchFlag::SinglePeak: return "single";
    case BranchFlag::NoPeak: return "none";
    case BranchFlag::Tie: return "tie";
  }
  return "unknown";
}

DispersionScan dispersion_scan(const Stack& stack, const std::vector<double>& angles,
                               const std::vector<double>& energies, Polarization pol) {
  require_axis(angles, "angle");
  require_axis(energies, "energy");
  DispersionScan scan{angles, energies,
                      Eigen::MatrixXd(static_cast<Eigen::Index>(angles.size()),
                                      static_cast<Eigen::Index>(energies.size()))};
  for (std::size_t i = 0; i < angles.size(); ++i)
    scan.absorptance.row(static_cast<Eigen::Index>(i)) =
        absorptance_spectrum(stack, angles[i], energies, pol).transpose();
  return scan;
}

Stack without_coupling(const Stack& stack) {
  Stack out = stack;
  for (auto& [name, model] : out.materials)
    if (auto* isb = std::get_if<IsbLorentzMedium>(&model)) isb->plasma_energy = 0.0;
  return out;
}

std::vector<Peak> find_peaks(const std::vector<double>& energies, const Eigen::VectorXd& row,
                             double min_prominence) {
  const auto n = static_cast<Eigen::Index>(energies.size());
  if (row.size() != n) throw std::invalid_argument("row length does not match the energy axis");
  std::vector<Peak> peaks;
  if (n < 3) return peaks;
  const double top = row.maxCoeff();
  if (!(top > 0.0)) return peaks;

  for (Eigen::Index j = 1; j + 1 < n; ++j) {
    if (!(row(j) > row(j - 1) && row(j) >= row(j + 1))) continue;
    double left_min = row(j), right_min = row(j);
    for (Eigen::Index k = j - 1; k >= 0 && row(k) <= row(j); --k) left_min = std::min(left_min, row(k));
    for (Eigen::Index k = j + 1; k < n && row(k) <= row(j); ++k) right_min = std::min(right_min, row(k));
    const double prominence = row(j) - std::max(left_min, right_min);
    if (prominence < min_prominence * top) continue;

    const auto ju = static_cast<std::size_t>(j);
    Peak p{energies[ju], row(j), 0.0};
    if (auto v = parabola_vertex(energies[ju - 1], row(j - 1), energies[ju], row(j), energies[ju + 1],
                                 row(j + 1), true)) {
      p.energy = v->x;
      p.height = v->y;
    }
    const double half = 0.5 * p.height;
    Eigen::Index lo = j, hi = j;
    while (lo > 0 && row(lo) > half) --lo;
    while (hi < n - 1 && row(hi) > half) ++hi;
    const auto lu = static_cast<std::size_t>(lo), hu = static_cast<std::size_t>(hi);
    const double e_lo = row(lo) > half ? energies[lu] : crossing(energies[lu], row(lo), energies[lu + 1], row(lo + 1), half);
    const double e_hi = row(hi) > half ? energies[hu] : crossing(energies[hu - 1], row(hi - 1), energies[hu], row(hi), half);
    p.width = e_hi - e_lo;
    peaks.push_back(p);
  }
  std::stable_sort(peaks.begin(), peaks.end(), [](const Peak& a, const Peak& b) { return a.height > b.height; });
  return peaks;
}

Branches extract_branches(const DispersionScan& scan, const ExtractOptions& options) {
  Branches out;
  double step = std::numeric_limits<double>::infinity();
  for (std::size_t j = 1; j < scan.energies.size(); ++j) step = std::min(step, scan.energies[j] - scan.energies[j - 1]);

  for (std::size_t i = 0; i < scan.angles.size(); ++i) {
    BranchPoint bp;
    bp.angle = scan.angles[i];
    const auto peaks =
        find_peaks(scan.energies, scan.absorptance.row(static_cast<Eigen::Index>(i)).transpose(), options.min_prominence);
    if (peaks.empty()) {
      bp.flag = BranchFlag::NoPeak;
    } else if (peaks.size() == 1) {
      bp.flag = BranchFlag::SinglePeak;
      if (options.reference_energy && peaks[0].energy > *options.reference_energy)
        bp.up = peaks[0];
      else
        bp.lp = peaks[0];
    } else {
      const Peak& strong = peaks[0];
      const Peak& weak = peaks[1];
      if (std::abs(strong.energy - weak.energy) < step) {
        bp.flag = BranchFlag::Tie;
        bp.up = strong;
        bp.lp = weak;
      } else {
        bp.flag = BranchFlag::Ok;
        bp.lp = strong.energy < weak.energy ? strong : weak;
        bp.up = strong.energy < weak.energy ? weak : strong;
      }
    }
    out.push_back(bp);
  }
  return out;
}

std::vector<std::optional<double>> cavity_dispersion(const DispersionScan& bare_scan, double min_prominence) {
  std::vector<std::optional<double>> out;
  for (std::size_t i = 0; i < bare_scan.angles.size(); ++i) {
    const auto peaks =
        find_peaks(bare_scan.energies, bare_scan.absorptance.row(static_cast<Eigen::Index>(i)).transpose(), min_prominence);
    out.push_back(peaks.empty() ? std::nullopt : std::optional<double>(peaks[0].energy));
  }
  return out;
}

AnticrossingFit fit_anticrossing(const Branches& branches, double transition,
                                 const std::vector<std::optional<double>>& cavity,
                                 const AnticrossingOptions& options) {
  if (cavity.size() != branches.size())
    throw std::invalid_argument("cavity dispersion and branches differ in length");

  struct Obs {
    double cavity, energy;
    bool upper;
  };
  std::vector<Obs> obs;
  std::size_t complete = 0;
  for (std::size_t i = 0; i < branches.size(); ++i) {
    if (!cavity[i]) continue;
    const auto& b = branches[i];
    if (b.lp) obs.push_back({*cavity[i], b.lp->energy, false});
    if (b.up) obs.push_back({*cavity[i], b.up->energy, true});
    if (b.both()) ++complete;
  }
  if (complete < 3)
    throw std::invalid_argument("underdetermined anticrossing fit: free parameters (coupling" +
                                std::string(options.fit_transition ? ", transition" : "") +
                                ") need at least 3 angles with both branches and a known cavity energy, got " +
                                std::to_string(complete));

  const bool free_e12 = options.fit_transition;
  NllsProblem problem;
  problem.residual = [&](const Eigen::VectorXd& p) {
    const double omega = p(0);
    const double e12 = free_e12 ? p(1) : transition;
    Eigen::VectorXd r(static_cast<Eigen::Index>(obs.size()));
    for (std::size_t k = 0; k < obs.size(); ++k) {
      const auto [lo, hi] = coupled_energies(obs[k].cavity, e12, omega);
      r(static_cast<Eigen::Index>(k)) = (obs[k].upper ? hi : lo) - obs[k].energy;
    }
    return r;
  };
  Eigen::VectorXd start(free_e12 ? 2 : 1);
  start(0) = options.initial_coupling;
  if (free_e12) start(1) = transition;

  const NllsResult nl = levenberg_marquardt(problem, start);
  AnticrossingFit fit;
  fit.coupling = std::abs(nl.parameters(0));
  fit.transition = free_e12 ? nl.parameters(1) : transition;
  fit.residuals.assign(nl.residual.data(), nl.residual.data() + nl.residual.size());
  fit.points = obs.size();
  fit.residual_rms = std::sqrt(nl.residual.squaredNorm() / static_cast<double>(obs.size()));
  return fit;
}

RabiSplitting rabi_splitting(const Branches& branches) {
  std::vector<std::pair<double, double>> valid;
  for (const auto& b : branches)
    if (b.both()) valid.emplace_back(b.angle, b.up->energy - b.lp->energy);
  if (valid.size() < 3)
    throw std::invalid_argument("rabi splitting needs at least 3 angles with both branches, got " +
                                std::to_string(valid.size()));
  std::sort(valid.begin(), valid.end());
  std::size_t best = 0;
  for (std::size_t k = 1; k < valid.size(); ++k)
    if (valid[k].second < valid[best].second) best = k;

  RabiSplitting out{valid[best].second, valid[best].first, false};
  if (best == 0 || best + 1 == valid.size()) {
    out.on_boundary = true;
    return out;
  }
  const auto& [a0, d0] = valid[best - 1];
  const auto& [a1, d1] = valid[best];
  const auto& [a2, d2] = valid[best + 1];
  if (auto v = parabola_vertex(a0, d0, a1, d1, a2, d2, false)) {
    out.resonance_angle = v->x;
    out.splitting = v->y;
  }
  return out;
}

PolaritonAnalysis analyze_dispersion(const Stack& stack, const std::vector<double>& angles,
                                     const std::vector<double>& energies, double transition) {
  PolaritonAnalysis a;
  a.scan = dispersion_scan(stack, angles, energies);
  a.bare_scan = dispersion_scan(without_coupling(stack), angles, energies);
  a.branches = extract_branches(a.scan, {.reference_energy = transition});
  a.cavity = cavity_dispersion(a.bare_scan);
  try {
    a.fit = fit_anticrossing(a.branches, transition, a.cavity);
  } catch (const std::invalid_argument&) {
  }
  try {
    a.splitting = rabi_splitting(a.branches);
  } catch (const std::invalid_argument&) {
  }
  return a;
}

}  // namespace isbpol
