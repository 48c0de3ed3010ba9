// Spectral line-shape models and the polariton peak-fitting recipes:
// Lorentzian + Gaussian + scaled reference fits, reference subtraction and
// normalised peak-area trends.
#ifndef ISBPOL_SPECFIT_HPP
#define ISBPOL_SPECFIT_HPP

#include <cmath>
#include <numbers>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include <Eigen/Core>

#include "isbpol/nlls.hpp"

namespace isbpol {

/// x in meV, strictly increasing.
struct Spectrum {
  Eigen::VectorXd x;
  Eigen::VectorXd y;
  double resolution = 8.0;  ///< cm^-1

  Eigen::Index size() const { return x.size(); }
};

/// Throws std::invalid_argument when the axis is not strictly increasing,
/// lengths differ or the resolution is not positive.
void validate(const Spectrum& s);

/// Reads `x y` rows; a `# unit: meV` or `# unit: cm-1` header is required
/// and wavenumbers are converted to meV.
Spectrum read_spectrum(const std::string& path);
std::string render_spectrum(const Spectrum& s);

/// Linear interpolation onto a new axis, holding the end values outside
/// the source range.
Eigen::VectorXd resample(const Spectrum& s, const Eigen::VectorXd& x);

template <typename Derived>
auto lorentzian(const Eigen::ArrayBase<Derived>& x, typename Derived::Scalar amplitude,
                typename Derived::Scalar center, typename Derived::Scalar hwhm) {
  using S = typename Derived::Scalar;
  return amplitude / (S(1) + ((x - center) / hwhm).square());
}

template <typename Derived>
auto gaussian(const Eigen::ArrayBase<Derived>& x, typename Derived::Scalar amplitude,
              typename Derived::Scalar center, typename Derived::Scalar sigma) {
  using S = typename Derived::Scalar;
  return amplitude * (S(-0.5) * ((x - center) / sigma).square()).exp();
}

struct LorentzianPeak {
  double amplitude = 0.0;
  double center = 0.0;
  double hwhm = 1.0;
};

struct GaussianPeak {
  double amplitude = 0.0;
  double center = 0.0;
  double sigma = 1.0;
};

/// scale * reference, the reference sampled on the data axis.
struct ScaledReference {
  double scale = 0.0;
  Eigen::VectorXd reference;
};

using FitComponent = std::variant<LorentzianPeak, GaussianPeak, ScaledReference>;

inline double analytic_area(const LorentzianPeak& p) { return std::numbers::pi * p.amplitude * p.hwhm; }
inline double analytic_area(const GaussianPeak& p) {
  return p.amplitude * p.sigma * std::sqrt(2.0 * std::numbers::pi);
}

/// Composite model. Parameters flatten component by component:
/// Lorentzian (amplitude, center, hwhm), Gaussian (amplitude, center,
/// sigma), reference (scale). Widths and scales are optimised in log space
/// so they stay positive.
struct FitModel {
  std::vector<FitComponent> components;
  /// Per flattened parameter; true keeps the value fixed.
  std::vector<bool> fixed;

  Eigen::Index parameter_count() const;
  Eigen::VectorXd parameters() const;
  void set_parameters(const Eigen::VectorXd& p);
  Eigen::ArrayXd evaluate(const Eigen::VectorXd& x) const;
  Eigen::ArrayXd evaluate_component(std::size_t i, const Eigen::VectorXd& x) const;
  /// Analytic for peaks; trapezoidal over x for the reference.
  double area(std::size_t i, const Eigen::VectorXd& x) const;
};

struct FitResult {
  FitModel model;
  Eigen::VectorXd parameters;
  Eigen::MatrixXd covariance;
  double residual_rms = 0.0;
  std::vector<double> areas;
  std::vector<double> normalized_areas;
  Termination termination = Termination::MaxIterations;
  int iterations = 0;
  std::vector<double> cost_history;
};

/// The model's current parameters are the initial guess. Throws
/// std::invalid_argument for out-of-bounds initial values or too few data
/// points, NllsError for numerical failure.
FitResult nlls_fit(const FitModel& model, const Spectrum& data, const NllsOptions& options = {});

enum class PeakShape { Lorentzian, Gaussian };

struct ThreeCurveOptions {
  PeakShape lp_shape = PeakShape::Lorentzian;
  PeakShape up_shape = PeakShape::Gaussian;
  /// Overrides the automatic initial guess (lp, up, reference order).
  std::optional<FitModel> init;
  NllsOptions nlls;
};

struct ThreeCurveResult {
  FitResult fit;
  double lp_center = 0.0;
  double up_center = 0.0;
  double lp_area = 0.0;
  double up_area = 0.0;
  double reference_area = 0.0;
  double reference_scale = 0.0;
  /// Reference (TE-ISB) area over the total area.
  double reference_fraction = 0.0;
};

/// Lower polariton + upper polariton + scaled TE reference. The TE spectrum
/// is resampled onto the TM axis when the grids differ.
ThreeCurveResult fit_three_curve(const Spectrum& tm, const Spectrum& te, const ThreeCurveOptions& options = {});

/// The first automatic initial guess of fit_three_curve: reference scale from
/// TM over TE at the TE maximum. fit_three_curve also restarts from smaller
/// fractions of that scale and keeps the lowest residual.
FitModel three_curve_initial_guess(const Spectrum& tm, const Eigen::VectorXd& te_on_tm,
                                   PeakShape lp_shape, PeakShape up_shape);

/// tm - scale * te, no flooring.
Spectrum subtract_reference(const Spectrum& tm, const Spectrum& te, double scale);

struct PeakAreas {
  double angle = 0.0;
  std::optional<double> lp_area;
  std::optional<double> up_area;
};

struct AreaTrendRow {
  double angle = 0.0;
  double lp_fraction = 0.0;
  double up_fraction = 0.0;
  bool flagged = false;  ///< a component is missing at this angle
};

struct AreaTrend {
  std::vector<AreaTrendRow> rows;
  /// Angles where the LP and UP fractions cross, linearly interpolated.
  std::vector<double> crossings;
};

/// LP and UP areas normalised to their sum. Throws std::invalid_argument for
/// fewer than two angles.
AreaTrend area_trend(const std::vector<PeakAreas>& results);

PeakAreas peak_areas(double angle, const ThreeCurveResult& r);

double trapezoid(const Eigen::VectorXd& x, const Eigen::VectorXd& y);

}  // namespace isbpol

#endif  // ISBPOL_SPECFIT_HPP
