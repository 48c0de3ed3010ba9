#include "cli.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>

#include "isbpol/bandstructure.hpp"
#include "isbpol/csv.hpp"
#include "isbpol/nlls.hpp"
#include "isbpol/polariton.hpp"
#include "isbpol/specfit.hpp"
#include "isbpol/stack.hpp"
#include "isbpol/tmm.hpp"

namespace isbpol::cli {

namespace fs = std::filesystem;
using nlohmann::ordered_json;

namespace {

double number(const std::string& text, const std::string& what) {
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(text, &used);
  } catch (const std::exception&) {
    throw ConfigError("invalid number '" + text + "' in " + what);
  }
  if (used != text.size() || !std::isfinite(v)) throw ConfigError("invalid number '" + text + "' in " + what);
  return v;
}

std::string label(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%g", v);
  return buf;
}

struct Common {
  std::string preset;
  std::string stack_path;
  std::string out_dir = ".";
  std::uint64_t seed = 0;
  std::vector<std::string> overrides;
};

// Everything but the output directory, so reruns elsewhere stay identical.
std::string provenance(const std::vector<std::string>& args) {
  std::string s = "isbpol";
  for (std::size_t i = 0; i < args.size(); ++i) {
    if (args[i] == "--out") {
      ++i;
      continue;
    }
    if (args[i].rfind("--out=", 0) == 0) continue;
    s += " " + args[i];
  }
  return s;
}

fs::path output_dir(const std::string& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (!fs::is_directory(dir)) throw ConfigError("cannot create output directory " + dir);
  return dir;
}

std::ofstream open_output(const fs::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot write " + path.string());
  return out;
}

void write_json(const fs::path& path, const ordered_json& j) { open_output(path) << j.dump(2) << '\n'; }

ordered_json optional_number(const std::optional<double>& v) {
  return v && std::isfinite(*v) ? ordered_json(*v) : ordered_json(nullptr);
}

void apply_override(Stack& stack, const std::string& text) {
  const auto eq = text.find('=');
  const auto dot = text.find('.');
  if (eq == std::string::npos || dot == std::string::npos || dot > eq)
    throw ConfigError("override must look like material.param=value: " + text);
  const std::string name = text.substr(0, dot);
  const std::string param = text.substr(dot + 1, eq - dot - 1);
  const double value = number(text.substr(eq + 1), "override " + text);
  auto it = stack.materials.find(name);
  if (it == stack.materials.end()) throw ConfigError("override names unknown material '" + name + "'");

  auto unknown = [&] { return ConfigError("material '" + name + "' has no parameter '" + param + "'"); };
  std::visit(
      [&](auto& m) {
        using T = std::decay_t<decltype(m)>;
        if constexpr (std::is_same_v<T, ConstantMedium>) {
          if (param != "eps") throw unknown();
          m.eps_bg = value;
        } else if constexpr (std::is_same_v<T, DrudeMedium>) {
          if (param == "eps_inf") m.eps_inf = value;
          else if (param == "ep") m.plasma_energy = value;
          else if (param == "gamma") m.damping = value;
          else throw unknown();
        } else {
          if (param == "eps_bg") m.eps_bg = value;
          else if (param == "eps_bg_z") m.eps_bg_z = value;
          else if (param == "e12") m.transition_energy = value;
          else if (param == "wp") m.plasma_energy = value;
          else if (param == "gamma") m.linewidth = value;
          else throw unknown();
        }
      },
      it->second);
}

Stack load_device(const Common& c) {
  if (c.preset.empty() == c.stack_path.empty()) throw ConfigError("give exactly one of --preset paper or --stack FILE");
  Stack stack;
  if (!c.preset.empty()) {
    if (c.preset != "paper") throw ConfigError("unknown preset '" + c.preset + "'");
    stack = paper_device();
  } else {
    if (!fs::is_regular_file(c.stack_path)) throw ConfigError("stack file not found: " + c.stack_path);
    stack = load_stack(c.stack_path);
  }
  for (const auto& o : c.overrides) apply_override(stack, o);
  validate(stack);
  return stack;
}

void add_common(CLI::App& app, Common& c, bool device = true) {
  if (device) {
    app.add_option("--preset", c.preset, "built-in device (paper)");
    app.add_option("--stack", c.stack_path, "device file");
    app.add_option("--override", c.overrides, "material.param=value, repeatable");
  }
  app.add_option("--out", c.out_dir, "output directory")->capture_default_str();
  app.add_option("--seed", c.seed, "recorded for provenance; runs are deterministic")->capture_default_str();
}

struct DispersionArgs {
  std::string angles = "60:85:0.5";
  std::string energies = "120:220:0.25";
  std::string pol = "tm";
  double transition = 163.0;
};

Polarization polarization(const std::string& s) {
  if (s == "tm" || s == "TM") return Polarization::TM;
  if (s == "te" || s == "TE") return Polarization::TE;
  throw ConfigError("polarization must be tm or te");
}

void cmd_dispersion(const Common& c, const DispersionArgs& a, const std::string& prov) {
  const Stack stack = load_device(c);
  const auto angles = parse_range(a.angles);
  const auto energies = parse_range(a.energies);
  if (energies.front() <= 0.0) throw ConfigError("energies must be positive");
  if (angles.front() < 0.0 || angles.back() >= 90.0) throw ConfigError("angles must lie in [0, 90)");
  const fs::path dir = output_dir(c.out_dir);

  const auto analysis = analyze_dispersion(stack, angles, energies, a.transition);

  {
    auto f = open_output(dir / "scan.csv");
    csv::Writer w(f, {"angle_deg", "energy_meV", "absorptance"}, prov);
    for (std::size_t i = 0; i < angles.size(); ++i)
      for (std::size_t j = 0; j < energies.size(); ++j)
        w.cell(angles[i])
            .cell(energies[j])
            .cell(analysis.scan.absorptance(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)))
            .end_row();
  }
  {
    auto f = open_output(dir / "branches.csv");
    csv::Writer w(f, {"angle_deg", "lp_meV", "up_meV", "lp_height", "up_height", "flag"}, prov);
    const double nan = std::nan("");
    for (const auto& b : analysis.branches)
      w.cell(b.angle)
          .cell(b.lp ? b.lp->energy : nan)
          .cell(b.up ? b.up->energy : nan)
          .cell(b.lp ? b.lp->height : nan)
          .cell(b.up ? b.up->height : nan)
          .cell(to_string(b.flag))
          .end_row();
  }
  ordered_json j;
  j["generated_by"] = prov;
  j["transition_meV"] = a.transition;
  j["omega_meV"] = optional_number(analysis.fit ? std::optional(analysis.fit->coupling) : std::nullopt);
  j["splitting_meV"] = optional_number(analysis.splitting ? std::optional(analysis.splitting->splitting) : std::nullopt);
  j["resonance_angle_deg"] =
      optional_number(analysis.splitting ? std::optional(analysis.splitting->resonance_angle) : std::nullopt);
  j["residual_rms_meV"] = optional_number(analysis.fit ? std::optional(analysis.fit->residual_rms) : std::nullopt);
  j["splitting_on_boundary"] = analysis.splitting ? ordered_json(analysis.splitting->on_boundary) : ordered_json(nullptr);
  std::size_t both = 0;
  for (const auto& b : analysis.branches) both += b.both();
  j["angles_with_both_branches"] = both;
  write_json(dir / "summary.json", j);
}

struct SpectrumArgs {
  std::string angles = "67.7,76.3,81.2";
  std::string energies = "100:260:0.25";
  std::string pol = "tm";
  std::optional<double> profile_energy;
  double profile_step = 2.0;
};

void cmd_spectrum(const Common& c, const SpectrumArgs& a, const std::string& prov) {
  const Stack stack = load_device(c);
  const auto angles = parse_list(a.angles);
  const auto energies = parse_range(a.energies);
  if (energies.front() <= 0.0) throw ConfigError("energies must be positive");
  for (double t : angles)
    if (t < 0.0 || t >= 90.0) throw ConfigError("angles must lie in [0, 90)");
  if (a.profile_energy && !(*a.profile_energy > 0.0)) throw ConfigError("profile energy must be positive");
  const Polarization pol = polarization(a.pol);
  const fs::path dir = output_dir(c.out_dir);

  for (double angle : angles) {
    const Eigen::VectorXd absorptance = absorptance_spectrum(stack, angle, energies, pol);
    auto f = open_output(dir / ("spectrum_" + label(angle) + ".csv"));
    csv::Writer w(f, {"energy_meV", "absorptance"}, prov);
    for (std::size_t j = 0; j < energies.size(); ++j)
      w.cell(energies[j]).cell(absorptance(static_cast<Eigen::Index>(j))).end_row();

    if (a.profile_energy) {
      const auto profile = field_profile(stack, {PhotonEnergy{*a.profile_energy}, angle, pol}, a.profile_step);
      auto pf = open_output(dir / ("profile_" + label(angle) + ".csv"));
      csv::Writer pw(pf, {"z_nm", "intensity"}, prov);
      for (std::size_t k = 0; k < profile.z.size(); ++k) pw.cell(profile.z[k]).cell(profile.intensity[k]).end_row();
    }
  }
}

struct BandsArgs {
  std::string sequence_path;
  BandParams params;
  bool isolated = false;
  bool parabolic = false;
  bool selfconsistent = false;
  std::string filling = "ground";
  double mixing = 0.3;
  int max_iterations = 200;
};

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot read " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void cmd_bands(const Common& c, const BandsArgs& a, const std::string& prov) {
  if (c.preset.empty() == a.sequence_path.empty())
    throw ConfigError("give exactly one of --preset paper or --sequence FILE");
  PeriodSequence seq;
  if (!c.preset.empty()) {
    if (c.preset != "paper") throw ConfigError("unknown preset '" + c.preset + "'");
    seq = paper_period();
  } else {
    seq = parse_sequence(slurp(a.sequence_path));
  }
  if (!(a.params.step > 0.0 && a.params.step <= 0.1)) throw ConfigError("grid step must lie in (0, 0.1] nm");
  if (!(a.params.padding >= 20.0)) throw ConfigError("padding must be at least 20 nm");
  if (!(a.params.barrier_offset > 0.0)) throw ConfigError("barrier offset must be positive");
  if (a.filling != "ground" && a.filling != "fermi") throw ConfigError("filling must be ground or fermi");
  if (!(a.mixing > 0.0 && a.mixing <= 1.0)) throw ConfigError("mixing must lie in (0, 1]");

  E21Options opts;
  opts.nonparabolic = !a.parabolic;
  opts.selfconsistent = a.selfconsistent;
  opts.isolated_main_well = a.isolated;
  opts.poisson.mixing = a.mixing;
  opts.poisson.max_iterations = a.max_iterations;
  opts.poisson.filling = a.filling == "fermi" ? Filling::FermiDirac : Filling::GroundSubband;
  const fs::path dir = output_dir(c.out_dir);
  const TransitionResult r = transition_e21(seq, a.params, opts);

  {
    auto f = open_output(dir / "bands.csv");
    std::vector<std::string> cols{"z_nm", "V_meV"};
    for (Eigen::Index k = 0; k < r.states.size(); ++k) cols.push_back("psi" + std::to_string(k + 1));
    csv::Writer w(f, cols, prov);
    std::vector<Eigen::VectorXd> psi;
    for (Eigen::Index k = 0; k < r.states.size(); ++k) psi.push_back(on_cells(r.states, k));
    const BandProblem& p = r.selfconsistent ? r.selfconsistent->problem : r.problem;
    for (Eigen::Index i = 0; i < p.z.size(); ++i) {
      w.cell(p.z(i)).cell(p.potential(i));
      for (const auto& v : psi) w.cell(v(i));
      w.end_row();
    }
  }
  ordered_json j;
  j["generated_by"] = prov;
  j["levels_meV"] = std::vector<double>(r.states.energies.data(), r.states.energies.data() + r.states.size());
  j["e1_meV"] = r.e1;
  j["e2_meV"] = r.e2;
  j["e21_meV"] = r.e21;
  j["localization"] = {r.localization1, r.localization2};
  j["main_well_nm"] = {r.problem.main_well->first, r.problem.main_well->second};
  j["nonparabolic"] = opts.nonparabolic;
  j["iterations"] = r.selfconsistent ? r.selfconsistent->iterations : 0;
  j["residual_meV"] = r.selfconsistent ? ordered_json(r.selfconsistent->residual) : ordered_json(nullptr);
  j["charge_imbalance"] = r.selfconsistent ? ordered_json(r.selfconsistent->charge_imbalance) : ordered_json(nullptr);
  if (a.isolated) {
    const double width = r.problem.main_well->second - r.problem.main_well->first;
    const double e1 = constants::hbar2_over_2m0 * M_PI * M_PI / (a.params.well_mass * width * width);
    j["infinite_well_e21_meV"] = 3.0 * e1;
  }
  write_json(dir / "levels.json", j);
}

struct FitArgs {
  std::string dir;
  std::string lp_shape = "lorentzian";
  std::string up_shape = "gaussian";
};

PeakShape shape(const std::string& s) {
  if (s == "lorentzian") return PeakShape::Lorentzian;
  if (s == "gaussian") return PeakShape::Gaussian;
  throw ConfigError("peak shape must be lorentzian or gaussian");
}

ordered_json component_json(const FitComponent& comp, double area) {
  ordered_json j;
  std::visit(
      [&](const auto& m) {
        using T = std::decay_t<decltype(m)>;
        if constexpr (std::is_same_v<T, LorentzianPeak>) {
          j = {{"type", "lorentzian"}, {"amplitude", m.amplitude}, {"center_meV", m.center}, {"hwhm_meV", m.hwhm}};
        } else if constexpr (std::is_same_v<T, GaussianPeak>) {
          j = {{"type", "gaussian"}, {"amplitude", m.amplitude}, {"center_meV", m.center}, {"sigma_meV", m.sigma}};
        } else {
          j = {{"type", "te_reference"}, {"scale", m.scale}};
        }
      },
      comp);
  j["area"] = area;
  return j;
}

void cmd_fit(const Common& c, const FitArgs& a, const std::string& prov) {
  if (a.dir.empty() || !fs::is_directory(a.dir)) throw ConfigError("fit directory not found: " + a.dir);
  // tm_<angle>.dat paired with te_<angle>.dat
  std::map<double, std::pair<fs::path, fs::path>> pairs;
  std::vector<fs::path> entries;
  for (const auto& e : fs::directory_iterator(a.dir)) entries.push_back(e.path());
  std::sort(entries.begin(), entries.end());
  for (const auto& path : entries) {
    const std::string name = path.filename().string();
    if (name.size() < 8 || name.rfind("tm_", 0) != 0 || path.extension() != ".dat") continue;
    const std::string tag = name.substr(3, name.size() - 7);
    const fs::path te = path.parent_path() / ("te_" + tag + ".dat");
    if (!fs::is_regular_file(te)) throw ConfigError("no TE partner for " + name);
    pairs[number(tag, name)] = {path, te};
  }
  if (pairs.size() < 2) throw ConfigError("fit needs at least two tm_<angle>.dat/te_<angle>.dat pairs in " + a.dir);

  ThreeCurveOptions opts;
  opts.lp_shape = shape(a.lp_shape);
  opts.up_shape = shape(a.up_shape);
  const fs::path dir = output_dir(c.out_dir);

  std::vector<PeakAreas> areas;
  for (const auto& [angle, files] : pairs) {
    Spectrum tm, te;
    try {
      tm = read_spectrum(files.first.string());
      te = read_spectrum(files.second.string());
    } catch (const std::exception& e) {
      throw ConfigError(e.what());
    }
    ordered_json j;
    j["generated_by"] = prov;
    j["angle_deg"] = angle;
    j["tm_file"] = files.first.filename().string();
    j["te_file"] = files.second.filename().string();
    try {
      const ThreeCurveResult r = fit_three_curve(tm, te, opts);
      const FitResult& f = r.fit;
      ordered_json comps = ordered_json::array();
      for (std::size_t k = 0; k < f.model.components.size(); ++k)
        comps.push_back(component_json(f.model.components[k], f.areas[k]));
      j["components"] = comps;
      j["parameters"] = std::vector<double>(f.parameters.data(), f.parameters.data() + f.parameters.size());
      std::vector<double> diag;
      for (Eigen::Index k = 0; k < f.covariance.rows(); ++k) diag.push_back(f.covariance(k, k));
      j["covariance_diagonal"] = diag;
      j["lp_center_meV"] = r.lp_center;
      j["up_center_meV"] = r.up_center;
      j["lp_area"] = r.lp_area;
      j["up_area"] = r.up_area;
      j["reference_area"] = r.reference_area;
      j["reference_fraction"] = r.reference_fraction;
      j["normalized_areas"] = f.normalized_areas;
      j["residual_rms"] = f.residual_rms;
      j["termination"] = to_string(f.termination);
      j["iterations"] = f.iterations;
      areas.push_back(peak_areas(angle, r));
    } catch (const NllsError& e) {
      j["error"] = e.what();
      areas.push_back({angle, std::nullopt, std::nullopt});
    }
    write_json(dir / ("fit_" + label(angle) + ".json"), j);
  }

  const AreaTrend trend = area_trend(areas);
  {
    auto f = open_output(dir / "area_trend.csv");
    csv::Writer w(f, {"angle_deg", "lp_fraction", "up_fraction", "flag"}, prov);
    for (const auto& row : trend.rows)
      w.cell(row.angle).cell(row.lp_fraction).cell(row.up_fraction).cell(row.flagged ? "missing" : "ok").end_row();
  }
  ordered_json j;
  j["generated_by"] = prov;
  j["crossings_deg"] = trend.crossings;
  write_json(dir / "trend.json", j);
}

}  // namespace

std::vector<double> parse_range(const std::string& text) {
  std::vector<std::string> parts;
  std::size_t start = 0;
  while (true) {
    const auto colon = text.find(':', start);
    parts.push_back(text.substr(start, colon - start));
    if (colon == std::string::npos) break;
    start = colon + 1;
  }
  if (parts.size() == 1) return {number(parts[0], "range")};
  if (parts.size() != 3) throw ConfigError("range must be start:stop:step, got '" + text + "'");
  const double lo = number(parts[0], "range"), hi = number(parts[1], "range"), step = number(parts[2], "range");
  if (!(step > 0.0)) throw ConfigError("range step must be positive: " + text);
  if (hi < lo) throw ConfigError("range stop is below start: " + text);
  const auto n = static_cast<long>(std::floor((hi - lo) / step + 1e-9));
  if (n > 10'000'000) throw ConfigError("range has too many points: " + text);
  std::vector<double> out;
  out.reserve(static_cast<std::size_t>(n + 1));
  for (long i = 0; i <= n; ++i) out.push_back(std::min(lo + static_cast<double>(i) * step, hi));
  return out;
}

std::vector<double> parse_list(const std::string& text) {
  if (text.find(':') != std::string::npos) return parse_range(text);
  std::vector<double> out;
  std::size_t start = 0;
  while (true) {
    const auto comma = text.find(',', start);
    out.push_back(number(text.substr(start, comma - start), "list"));
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  return out;
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Intersubband polariton simulation and analysis"};
  app.require_subcommand(1);

  Common common;
  DispersionArgs disp;
  SpectrumArgs spec;
  BandsArgs bands;
  FitArgs fit;

  auto* d = app.add_subcommand("dispersion", "angle-resolved absorptance scan, branches and splitting");
  add_common(*d, common);
  d->add_option("--angles", disp.angles, "start:stop:step, degrees (internal)")->capture_default_str();
  d->add_option("--energies", disp.energies, "start:stop:step, meV")->capture_default_str();
  d->add_option("--transition", disp.transition, "bare ISB energy, meV")->capture_default_str();

  auto* s = app.add_subcommand("spectrum", "absorptance spectra at given angles");
  add_common(*s, common);
  s->add_option("--angles", spec.angles, "comma list or range, degrees")->capture_default_str();
  s->add_option("--energies", spec.energies, "start:stop:step, meV")->capture_default_str();
  s->add_option("--pol", spec.pol, "tm or te")->capture_default_str();
  s->add_option("--profile", spec.profile_energy, "also write |field|^2 along z at this energy, meV");
  s->add_option("--profile-step", spec.profile_step, "profile sampling step, nm")->capture_default_str();

  auto* b = app.add_subcommand("bands", "conduction band profile, levels and E21");
  add_common(*b, common, false);
  b->add_option("--preset", common.preset, "built-in sequence (paper)");
  b->add_option("--sequence", bands.sequence_path, "period sequence file");
  b->add_option("--offset", bands.params.barrier_offset, "barrier band offset, meV")->capture_default_str();
  b->add_option("--step", bands.params.step, "grid step, nm")->capture_default_str();
  b->add_option("--padding", bands.params.padding, "barrier padding at each wall, nm")->capture_default_str();
  b->add_option("--bias", bands.params.bias, "potential drop per period, meV")->capture_default_str();
  b->add_option("--well-mass", bands.params.well_mass)->capture_default_str();
  b->add_option("--barrier-mass", bands.params.barrier_mass)->capture_default_str();
  b->add_flag("--isolated-main-well", bands.isolated, "solve the widest well alone");
  b->add_flag("--parabolic", bands.parabolic, "constant effective masses");
  b->add_flag("--selfconsistent", bands.selfconsistent, "Schrodinger-Poisson loop");
  b->add_option("--filling", bands.filling, "ground or fermi")->capture_default_str();
  b->add_option("--mixing", bands.mixing, "linear potential mixing")->capture_default_str();
  b->add_option("--max-iterations", bands.max_iterations)->capture_default_str();

  auto* f = app.add_subcommand("fit", "three-curve fits and peak-area trend");
  add_common(*f, common, false);
  f->add_option("--dir", fit.dir, "directory of tm_<angle>.dat / te_<angle>.dat")->required();
  f->add_option("--lp-shape", fit.lp_shape, "lorentzian or gaussian")->capture_default_str();
  f->add_option("--up-shape", fit.up_shape, "lorentzian or gaussian")->capture_default_str();

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    return app.exit(e, out, err) == 0 ? kOk : kConfigError;
  }

  const std::string prov = provenance(args);
  try {
    if (d->parsed()) cmd_dispersion(common, disp, prov);
    else if (s->parsed()) cmd_spectrum(common, spec, prov);
    else if (b->parsed()) cmd_bands(common, bands, prov);
    else cmd_fit(common, fit, prov);
  } catch (const ConfigError& e) {
    err << "error: " << e.what() << '\n';
    return kConfigError;
  } catch (const StackError& e) {
    err << "error: " << e.what() << '\n';
    return kConfigError;
  } catch (const std::exception& e) {
    err << "numerical failure: " << e.what() << '\n';
    return kNumericalError;
  }
  return kOk;
}

int run(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return run(args, std::cout, std::cerr);
}

}  // namespace isbpol::cli
