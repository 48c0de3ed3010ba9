#include "isbpol/specfit.hpp"

#include <algorithm>
#include <array>
#include <cstdio>
#include <fstream>
#include <limits>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include "isbpol/units.hpp"

namespace isbpol {

namespace {

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};

// Number of flattened parameters and which of them live in log space.
std::vector<bool> log_mask(const FitModel& m) {
  std::vector<bool> mask;
  for (const auto& c : m.components)
    std::visit(overloaded{
                   [&](const LorentzianPeak&) { mask.insert(mask.end(), {false, false, true}); },
                   [&](const GaussianPeak&) { mask.insert(mask.end(), {false, false, true}); },
                   [&](const ScaledReference&) { mask.push_back(true); },
               },
               c);
  return mask;
}

}  // namespace

void validate(const Spectrum& s) {
  if (s.x.size() != s.y.size()) throw std::invalid_argument("spectrum axis and values differ in length");
  if (s.x.size() < 2) throw std::invalid_argument("spectrum needs at least two points");
  if (!(s.resolution > 0.0)) throw std::invalid_argument("spectral resolution must be positive");
  for (Eigen::Index i = 1; i < s.x.size(); ++i)
    if (!(s.x(i) > s.x(i - 1))) throw std::invalid_argument("spectrum axis must be strictly increasing");
  if (!s.x.allFinite() || !s.y.allFinite()) throw std::invalid_argument("spectrum contains non-finite values");
}

Spectrum read_spectrum(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::optional<bool> wavenumbers;
  double resolution = 8.0;
  std::vector<double> xs, ys;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    if (line[0] == '#') {
      std::istringstream hs(line.substr(1));
      std::string key, value;
      hs >> key >> value;
      if (key == "unit:") {
        if (value == "meV") wavenumbers = false;
        else if (value == "cm-1") wavenumbers = true;
        else throw std::invalid_argument(path + ":" + std::to_string(lineno) + ": unknown unit '" + value + "'");
      } else if (key == "resolution:") {
        resolution = std::stod(value);
      }
      continue;
    }
    if (!wavenumbers) throw std::invalid_argument(path + ": missing '# unit:' header before data");
    std::istringstream ls(line);
    double x = 0.0, y = 0.0;
    if (!(ls >> x >> y)) throw std::invalid_argument(path + ":" + std::to_string(lineno) + ": expected 'x y'");
    xs.push_back(*wavenumbers ? wavenumber_to_meV(x) : x);
    ys.push_back(y);
  }
  if (!wavenumbers) throw std::invalid_argument(path + ": missing '# unit:' header");
  Spectrum s;
  s.x = Eigen::Map<Eigen::VectorXd>(xs.data(), static_cast<Eigen::Index>(xs.size()));
  s.y = Eigen::Map<Eigen::VectorXd>(ys.data(), static_cast<Eigen::Index>(ys.size()));
  s.resolution = resolution;
  validate(s);
  return s;
}

std::string render_spectrum(const Spectrum& s) {
  std::string out = "# unit: meV\n";
  char buf[64];
  std::snprintf(buf, sizeof buf, "# resolution: %.17g\n", s.resolution);
  out += buf;
  for (Eigen::Index i = 0; i < s.x.size(); ++i) {
    std::snprintf(buf, sizeof buf, "%.17g %.17g\n", s.x(i), s.y(i));
    out += buf;
  }
  return out;
}

Eigen::VectorXd resample(const Spectrum& s, const Eigen::VectorXd& x) {
  Eigen::VectorXd out(x.size());
  const auto* begin = s.x.data();
  const auto* end = begin + s.x.size();
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    const double xi = x(i);
    if (xi <= s.x(0)) {
      out(i) = s.y(0);
    } else if (xi >= s.x(s.x.size() - 1)) {
      out(i) = s.y(s.y.size() - 1);
    } else {
      const auto hi = static_cast<Eigen::Index>(std::upper_bound(begin, end, xi) - begin);
      const double t = (xi - s.x(hi - 1)) / (s.x(hi) - s.x(hi - 1));
      out(i) = (1.0 - t) * s.y(hi - 1) + t * s.y(hi);
    }
  }
  return out;
}

double trapezoid(const Eigen::VectorXd& x, const Eigen::VectorXd& y) {
  double acc = 0.0;
  for (Eigen::Index i = 1; i < x.size(); ++i) acc += 0.5 * (x(i) - x(i - 1)) * (y(i) + y(i - 1));
  return acc;
}

Eigen::Index FitModel::parameter_count() const { return static_cast<Eigen::Index>(log_mask(*this).size()); }

Eigen::VectorXd FitModel::parameters() const {
  std::vector<double> p;
  for (const auto& c : components)
    std::visit(overloaded{
                   [&](const LorentzianPeak& l) { p.insert(p.end(), {l.amplitude, l.center, l.hwhm}); },
                   [&](const GaussianPeak& g) { p.insert(p.end(), {g.amplitude, g.center, g.sigma}); },
                   [&](const ScaledReference& r) { p.push_back(r.scale); },
               },
               c);
  return Eigen::Map<Eigen::VectorXd>(p.data(), static_cast<Eigen::Index>(p.size()));
}

void FitModel::set_parameters(const Eigen::VectorXd& p) {
  if (p.size() != parameter_count()) throw std::invalid_argument("parameter vector has the wrong length");
  Eigen::Index k = 0;
  for (auto& c : components)
    std::visit(overloaded{
                   [&](LorentzianPeak& l) {
                     l = {p(k), p(k + 1), p(k + 2)};
                     k += 3;
                   },
                   [&](GaussianPeak& g) {
                     g = {p(k), p(k + 1), p(k + 2)};
                     k += 3;
                   },
                   [&](ScaledReference& r) { r.scale = p(k++); },
               },
               c);
}

Eigen::ArrayXd FitModel::evaluate_component(std::size_t i, const Eigen::VectorXd& x) const {
  return std::visit(overloaded{
                        [&](const LorentzianPeak& l) -> Eigen::ArrayXd {
                          return lorentzian(x.array(), l.amplitude, l.center, l.hwhm);
                        },
                        [&](const GaussianPeak& g) -> Eigen::ArrayXd {
                          return gaussian(x.array(), g.amplitude, g.center, g.sigma);
                        },
                        [&](const ScaledReference& r) -> Eigen::ArrayXd {
                          if (r.reference.size() != x.size())
                            throw std::invalid_argument("reference length does not match the axis");
                          return r.scale * r.reference.array();
                        },
                    },
                    components.at(i));
}

Eigen::ArrayXd FitModel::evaluate(const Eigen::VectorXd& x) const {
  Eigen::ArrayXd y = Eigen::ArrayXd::Zero(x.size());
  for (std::size_t i = 0; i < components.size(); ++i) y += evaluate_component(i, x);
  return y;
}

double FitModel::area(std::size_t i, const Eigen::VectorXd& x) const {
  return std::visit(overloaded{
                        [](const LorentzianPeak& l) { return analytic_area(l); },
                        [](const GaussianPeak& g) { return analytic_area(g); },
                        [&](const ScaledReference& r) { return r.scale * trapezoid(x, r.reference); },
                    },
                    components.at(i));
}

FitResult nlls_fit(const FitModel& model, const Spectrum& data, const NllsOptions& options) {
  validate(data);
  const std::vector<bool> logs = log_mask(model);
  const Eigen::Index n = static_cast<Eigen::Index>(logs.size());
  std::vector<bool> fixed = model.fixed;
  if (fixed.empty()) fixed.assign(logs.size(), false);
  if (fixed.size() != logs.size()) throw std::invalid_argument("fixed mask has the wrong length");

  const Eigen::VectorXd p0 = model.parameters();
  std::vector<Eigen::Index> free;
  for (Eigen::Index j = 0; j < n; ++j) {
    if (!std::isfinite(p0(j))) throw std::invalid_argument("non-finite initial parameter");
    if (logs[j] && !(p0(j) > 0.0))
      throw std::invalid_argument("initial widths and scales must be strictly positive");
    if (!fixed[j]) free.push_back(j);
  }
  const auto nfree = static_cast<Eigen::Index>(free.size());
  if (nfree == 0) throw std::invalid_argument("no free parameters");
  if (data.size() < nfree + 1) throw std::invalid_argument("need at least (free parameters + 1) data points");

  const auto to_external = [&](const Eigen::VectorXd& theta) {
    Eigen::VectorXd p = p0;
    for (Eigen::Index k = 0; k < nfree; ++k) {
      const Eigen::Index j = free[k];
      p(j) = logs[j] ? std::exp(theta(k)) : theta(k);
    }
    return p;
  };
  Eigen::VectorXd theta(nfree);
  for (Eigen::Index k = 0; k < nfree; ++k) {
    const Eigen::Index j = free[k];
    theta(k) = logs[j] ? std::log(p0(j)) : p0(j);
  }

  FitModel work = model;
  const Eigen::ArrayXd x = data.x.array();
  NllsProblem problem;
  problem.residual = [&](const Eigen::VectorXd& th) -> Eigen::VectorXd {
    work.set_parameters(to_external(th));
    return (work.evaluate(data.x) - data.y.array()).matrix();
  };
  problem.jacobian = [&](const Eigen::VectorXd& th) -> Eigen::MatrixXd {
    const Eigen::VectorXd p = to_external(th);
    Eigen::MatrixXd full(data.size(), n);
    Eigen::Index k = 0;
    for (const auto& c : model.components) {
      if (std::holds_alternative<ScaledReference>(c)) {
        const auto& ref = std::get<ScaledReference>(c).reference;
        full.col(k) = p(k) * ref;
        k += 1;
        continue;
      }
      const double amp = p(k), center = p(k + 1), width = p(k + 2);
      const Eigen::ArrayXd u = (x - center) / width;
      if (std::holds_alternative<LorentzianPeak>(c)) {
        const Eigen::ArrayXd d = 1.0 / (1.0 + u.square());
        full.col(k) = d.matrix();
        full.col(k + 1) = (amp * 2.0 * u * d.square() / width).matrix();
        full.col(k + 2) = (amp * 2.0 * u.square() * d.square()).matrix();
      } else {
        const Eigen::ArrayXd e = (-0.5 * u.square()).exp();
        full.col(k) = e.matrix();
        full.col(k + 1) = (amp * e * u / width).matrix();
        full.col(k + 2) = (amp * e * u.square()).matrix();
      }
      k += 3;
    }
    Eigen::MatrixXd jac(data.size(), nfree);
    for (Eigen::Index q = 0; q < nfree; ++q) jac.col(q) = full.col(free[q]);
    return jac;
  };

  const NllsResult nl = levenberg_marquardt(problem, theta, options);

  FitResult out;
  out.parameters = to_external(nl.parameters);
  out.model = model;
  out.model.set_parameters(out.parameters);
  out.termination = nl.termination;
  out.iterations = nl.iterations;
  out.cost_history = nl.cost_history;
  out.residual_rms = std::sqrt(nl.residual.squaredNorm() / static_cast<double>(data.size()));

  out.covariance = Eigen::MatrixXd::Zero(n, n);
  for (Eigen::Index a = 0; a < nfree; ++a)
    for (Eigen::Index b = 0; b < nfree; ++b) {
      const Eigen::Index ja = free[a], jb = free[b];
      const double da = logs[ja] ? out.parameters(ja) : 1.0;
      const double db = logs[jb] ? out.parameters(jb) : 1.0;
      out.covariance(ja, jb) = da * nl.covariance(a, b) * db;
    }

  double total = 0.0;
  for (std::size_t i = 0; i < out.model.components.size(); ++i) {
    out.areas.push_back(out.model.area(i, data.x));
    total += out.areas.back();
  }
  for (double a : out.areas)
    out.normalized_areas.push_back(total != 0.0 ? a / total : std::numeric_limits<double>::quiet_NaN());
  return out;
}

namespace {

FitComponent make_peak(PeakShape shape, double amplitude, double center, double hwhm) {
  if (shape == PeakShape::Lorentzian) return LorentzianPeak{amplitude, center, hwhm};
  return GaussianPeak{amplitude, center, hwhm / std::sqrt(2.0 * std::log(2.0))};
}

double half_width(const Eigen::VectorXd& x, const Eigen::VectorXd& y, Eigen::Index peak) {
  const double half = 0.5 * y(peak);
  Eigen::Index lo = peak, hi = peak;
  while (lo > 0 && y(lo) > half) --lo;
  while (hi < y.size() - 1 && y(hi) > half) ++hi;
  return 0.5 * (x(hi) - x(lo));
}

}  // namespace

namespace {

FitModel guess_with_scale(const Spectrum& tm, const Eigen::VectorXd& te_on_tm, double scale, PeakShape lp_shape,
                          PeakShape up_shape) {
  const Eigen::VectorXd rest = tm.y - scale * te_on_tm;
  Eigen::Index jte = 0;
  te_on_tm.maxCoeff(&jte);

  std::vector<Eigen::Index> maxima;
  for (Eigen::Index i = 1; i + 1 < rest.size(); ++i)
    if (rest(i) > rest(i - 1) && rest(i) >= rest(i + 1) && rest(i) > 0.0) maxima.push_back(i);
  std::sort(maxima.begin(), maxima.end(), [&](auto a, auto b) { return rest(a) > rest(b); });

  const double span = tm.x(tm.size() - 1) - tm.x(0);
  const double step = span / static_cast<double>(tm.size() - 1);
  std::array<Eigen::Index, 2> pick{};
  if (maxima.size() >= 2) {
    pick = {std::min(maxima[0], maxima[1]), std::max(maxima[0], maxima[1])};
  } else {
    const auto offset = static_cast<Eigen::Index>(std::max<double>(1.0, tm.size() / 8.0));
    pick = {std::max<Eigen::Index>(jte - offset, 0), std::min<Eigen::Index>(jte + offset, tm.size() - 1)};
  }

  FitModel m;
  const PeakShape shapes[2] = {lp_shape, up_shape};
  for (int k = 0; k < 2; ++k) {
    const Eigen::Index j = pick[static_cast<std::size_t>(k)];
    const double amp = rest(j) > 0.0 ? rest(j) : tm.y(j);
    const double hwhm = std::clamp(half_width(tm.x, rest, j), 2.0 * step, span / 4.0);
    m.components.push_back(make_peak(shapes[k], amp, tm.x(j), hwhm));
  }
  m.components.push_back(ScaledReference{scale > 0.0 ? scale : 1.0, te_on_tm});
  return m;
}

// TM over TE at the TE maximum; an upper bound on the reference scale when a
// polariton overlaps the TE peak.
double seed_scale(const Spectrum& tm, const Eigen::VectorXd& te_on_tm) {
  Eigen::Index jte = 0;
  te_on_tm.maxCoeff(&jte);
  if (!(te_on_tm(jte) > 0.0)) throw std::invalid_argument("degenerate TE reference (no positive signal)");
  return tm.y(jte) / te_on_tm(jte);
}

// Fractions of the seed scale tried by the automatic initialisation.
constexpr double kScaleStarts[] = {1.0, 0.6, 0.3, 0.1};

}  // namespace

FitModel three_curve_initial_guess(const Spectrum& tm, const Eigen::VectorXd& te_on_tm, PeakShape lp_shape,
                                   PeakShape up_shape) {
  return guess_with_scale(tm, te_on_tm, seed_scale(tm, te_on_tm), lp_shape, up_shape);
}

ThreeCurveResult fit_three_curve(const Spectrum& tm, const Spectrum& te, const ThreeCurveOptions& options) {
  validate(tm);
  validate(te);
  const Eigen::VectorXd te_on_tm =
      (te.x.size() == tm.x.size() && (te.x - tm.x).cwiseAbs().maxCoeff() <= 1e-9) ? te.y : resample(te, tm.x);
  if (te_on_tm.cwiseAbs().maxCoeff() == 0.0) throw std::invalid_argument("degenerate TE reference (all zeros)");

  ThreeCurveResult out;
  if (options.init) {
    FitModel init = *options.init;
    if (init.components.size() != 3 || !std::holds_alternative<ScaledReference>(init.components[2]))
      throw std::invalid_argument("three-curve model must be (peak, peak, reference)");
    std::get<ScaledReference>(init.components[2]).reference = te_on_tm;
    out.fit = nlls_fit(init, tm, options.nlls);
  } else {
    // Multi-start over the reference scale; the lowest residual wins.
    const double seed = seed_scale(tm, te_on_tm);
    std::optional<FitResult> best;
    std::optional<NllsError> last_error;
    for (double fraction : kScaleStarts) {
      try {
        FitResult r = nlls_fit(guess_with_scale(tm, te_on_tm, fraction * seed, options.lp_shape, options.up_shape),
                               tm, options.nlls);
        if (!best || r.residual_rms < best->residual_rms) best = std::move(r);
      } catch (const NllsError& e) {
        last_error = e;
      }
    }
    if (!best) throw *last_error;
    out.fit = std::move(*best);
  }
  auto center_of = [](const FitComponent& c) {
    if (auto* l = std::get_if<LorentzianPeak>(&c)) return l->center;
    return std::get<GaussianPeak>(c).center;
  };
  out.lp_center = center_of(out.fit.model.components[0]);
  out.up_center = center_of(out.fit.model.components[1]);
  out.lp_area = out.fit.areas[0];
  out.up_area = out.fit.areas[1];
  out.reference_area = out.fit.areas[2];
  out.reference_scale = std::get<ScaledReference>(out.fit.model.components[2]).scale;
  out.reference_fraction = out.fit.normalized_areas[2];
  return out;
}

Spectrum subtract_reference(const Spectrum& tm, const Spectrum& te, double scale) {
  validate(tm);
  validate(te);
  Eigen::VectorXd ref;
  if (te.x.size() == tm.x.size() && (te.x - tm.x).cwiseAbs().maxCoeff() <= 1e-9) {
    ref = te.y;
  } else {
    if (tm.x(0) < te.x(0) - 1e-9 || tm.x(tm.size() - 1) > te.x(te.size() - 1) + 1e-9)
      throw std::invalid_argument("reference grid does not cover the spectrum");
    ref = resample(te, tm.x);
  }
  Spectrum out = tm;
  out.y = tm.y - scale * ref;
  return out;
}

PeakAreas peak_areas(double angle, const ThreeCurveResult& r) { return {angle, r.lp_area, r.up_area}; }

AreaTrend area_trend(const std::vector<PeakAreas>& results) {
  if (results.size() < 2) throw std::invalid_argument("area trend needs at least two angles");
  std::vector<PeakAreas> sorted = results;
  std::sort(sorted.begin(), sorted.end(), [](const auto& a, const auto& b) { return a.angle < b.angle; });

  AreaTrend trend;
  constexpr double nan = std::numeric_limits<double>::quiet_NaN();
  for (const auto& r : sorted) {
    AreaTrendRow row{r.angle, nan, nan, true};
    if (r.lp_area && r.up_area) {
      const double total = *r.lp_area + *r.up_area;
      if (total > 0.0 && std::isfinite(total)) {
        row.lp_fraction = *r.lp_area / total;
        row.up_fraction = 1.0 - row.lp_fraction;
        row.flagged = false;
      }
    }
    trend.rows.push_back(row);
  }

  const AreaTrendRow* prev = nullptr;
  for (const auto& row : trend.rows) {
    if (row.flagged) continue;
    const double d = row.lp_fraction - row.up_fraction;
    if (d == 0.0) {
      trend.crossings.push_back(row.angle);
    } else if (prev) {
      const double dp = prev->lp_fraction - prev->up_fraction;
      if (dp * d < 0.0) trend.crossings.push_back(prev->angle + (row.angle - prev->angle) * dp / (dp - d));
    }
    prev = &row;
  }
  return trend;
}

}  // namespace isbpol
