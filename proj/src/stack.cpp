#include "isbpol/stack.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <sstream>

namespace isbpol {

namespace {

std::vector<std::string_view> split_ws(std::string_view s) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < s.size()) {
    while (i < s.size() && (s[i] == ' ' || s[i] == '\t' || s[i] == '\r')) ++i;
    std::size_t j = i;
    while (j < s.size() && s[j] != ' ' && s[j] != '\t' && s[j] != '\r') ++j;
    if (j > i) out.push_back(s.substr(i, j - i));
    i = j;
  }
  return out;
}

std::string_view trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

template <class F>
void for_each_line(std::string_view text, F&& f) {
  int lineno = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    auto nl = text.find('\n', pos);
    if (nl == std::string_view::npos) nl = text.size();
    ++lineno;
    std::string_view line = text.substr(pos, nl - pos);
    std::string_view comment;
    if (auto hash = line.find('#'); hash != std::string_view::npos) {
      comment = trim(line.substr(hash + 1));
      line = line.substr(0, hash);
    }
    f(lineno, split_ws(line), comment);
    if (nl == text.size()) break;
    pos = nl + 1;
  }
}

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

class LineParser {
 public:
  explicit LineParser(int line) : line_(line) {}

  double number(std::string_view tok) const {
    double v = 0.0;
    auto [p, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
    if (ec != std::errc{} || p != tok.data() + tok.size())
      throw StackError(StackError::Kind::Syntax, line_, "expected a number, got '" + std::string(tok) + "'");
    return v;
  }

  void arity(const std::vector<std::string_view>& toks, std::size_t n) const {
    if (toks.size() != n)
      throw StackError(StackError::Kind::Syntax, line_,
                       "'" + std::string(toks[0]) + "' expects " + std::to_string(n - 1) + " fields");
  }

 private:
  int line_;
};

}  // namespace

StackError::StackError(Kind kind, int line, const std::string& message)
    : std::runtime_error(line > 0 ? "line " + std::to_string(line) + ": " + message : message),
      kind_(kind),
      line_(line) {}

const MaterialModel& Stack::material(const std::string& name) const {
  auto it = materials.find(name);
  if (it == materials.end())
    throw StackError(StackError::Kind::Reference, 0, "unknown material '" + name + "'");
  return it->second;
}

double Stack::total_thickness() const {
  return std::accumulate(layers.begin(), layers.end(), 0.0,
                         [](double acc, const Layer& l) { return acc + l.thickness; });
}

bool is_lossless(const MaterialModel& model) {
  if (std::holds_alternative<ConstantMedium>(model)) return true;
  if (auto* d = std::get_if<DrudeMedium>(&model)) return d->plasma_energy == 0.0;
  return std::get<IsbLorentzMedium>(model).plasma_energy == 0.0;
}

void validate(const Stack& stack) {
  using K = StackError::Kind;
  if (stack.incident.empty()) throw StackError(K::Structure, 0, "missing incident medium");
  if (stack.exit.empty()) throw StackError(K::Structure, 0, "missing exit medium");
  if (stack.layers.empty()) throw StackError(K::Structure, 0, "stack has no layers");
  for (const auto& [name, model] : stack.materials) {
    try {
      validate(model);
    } catch (const std::domain_error& e) {
      throw StackError(K::Validation, 0, "material '" + name + "': " + e.what());
    }
  }
  stack.material(stack.incident);
  stack.material(stack.exit);
  for (const auto& layer : stack.layers) {
    stack.material(layer.material);
    if (!(layer.thickness > 0.0) || !std::isfinite(layer.thickness))
      throw StackError(K::Validation, 0, "layer thickness must be positive and finite");
  }
  if (!is_lossless(stack.material(stack.incident)))
    throw StackError(K::Validation, 0, "incident medium must be lossless");
}

Stack parse_stack(std::string_view text) {
  using K = StackError::Kind;
  Stack stack;
  std::map<std::string, int> referenced;  // name -> first line
  int incident_line = 0, exit_line = 0;

  for_each_line(text, [&](int lineno, const std::vector<std::string_view>& toks, std::string_view comment) {
    if (toks.empty()) return;
    const LineParser p(lineno);
    const std::string_view kw = toks[0];
    if (kw == "material") {
      if (toks.size() < 3) throw StackError(K::Syntax, lineno, "incomplete material definition");
      const std::string name(toks[1]);
      const std::string_view kind = toks[2];
      MaterialModel model;
      if (kind == "const") {
        p.arity(toks, 4);
        model = ConstantMedium{p.number(toks[3])};
      } else if (kind == "drude") {
        p.arity(toks, 6);
        model = DrudeMedium{p.number(toks[3]), p.number(toks[4]), p.number(toks[5])};
      } else if (kind == "isb") {
        if (toks.size() != 8 && toks.size() != 9)
          throw StackError(K::Syntax, lineno, "'material' isb expects 6 or 7 fields");
        const std::string_view mode = toks[7];
        if (mode != "iso" && mode != "aniso")
          throw StackError(K::Syntax, lineno, "isb mode must be 'iso' or 'aniso'");
        IsbLorentzMedium m{p.number(toks[3]), p.number(toks[4]), p.number(toks[5]), p.number(toks[6]),
                           mode == "aniso", std::nullopt};
        if (toks.size() == 9) m.eps_bg_z = p.number(toks[8]);
        model = m;
      } else {
        throw StackError(K::Syntax, lineno, "unknown material kind '" + std::string(kind) + "'");
      }
      try {
        validate(model);
      } catch (const std::domain_error& e) {
        throw StackError(K::Validation, lineno, e.what());
      }
      if (!stack.materials.emplace(name, model).second)
        throw StackError(K::Syntax, lineno, "material '" + name + "' defined twice");
    } else if (kw == "incident" || kw == "exit") {
      p.arity(toks, 2);
      auto& slot = kw == "incident" ? stack.incident : stack.exit;
      auto& where = kw == "incident" ? incident_line : exit_line;
      if (!slot.empty()) throw StackError(K::Structure, lineno, "duplicate '" + std::string(kw) + "'");
      slot = std::string(toks[1]);
      where = lineno;
      referenced.emplace(slot, lineno);
    } else if (kw == "layer") {
      p.arity(toks, 3);
      const double t = p.number(toks[2]);
      if (!(t > 0.0) || !std::isfinite(t))
        throw StackError(K::Validation, lineno, "layer thickness must be positive, got " + std::string(toks[2]));
      stack.layers.push_back({std::string(toks[1]), t, std::string(comment)});
      referenced.emplace(stack.layers.back().material, lineno);
    } else {
      throw StackError(K::Syntax, lineno, "unknown directive '" + std::string(kw) + "'");
    }
  });

  if (stack.incident.empty()) throw StackError(K::Structure, 0, "missing 'incident' line");
  if (stack.exit.empty()) throw StackError(K::Structure, 0, "missing 'exit' line");
  if (stack.layers.empty()) throw StackError(K::Structure, 0, "stack has no layers");
  for (const auto& [name, line] : referenced)
    if (!stack.materials.contains(name))
      throw StackError(K::Reference, line, "unknown material '" + name + "'");
  if (!is_lossless(stack.materials.at(stack.incident)))
    throw StackError(K::Validation, incident_line, "incident medium must be lossless");
  return stack;
}

Stack load_stack(const std::string& path) { return parse_stack(slurp(path)); }

std::string render_stack(const Stack& stack) {
  std::string out;
  for (const auto& [name, model] : stack.materials) {
    out += "material " + name + " ";
    if (auto* c = std::get_if<ConstantMedium>(&model)) {
      out += "const " + fmt(c->eps_bg);
    } else if (auto* d = std::get_if<DrudeMedium>(&model)) {
      out += "drude " + fmt(d->eps_inf) + " " + fmt(d->plasma_energy) + " " + fmt(d->damping);
    } else {
      const auto& m = std::get<IsbLorentzMedium>(model);
      out += "isb " + fmt(m.eps_bg) + " " + fmt(m.transition_energy) + " " + fmt(m.plasma_energy) + " " +
             fmt(m.linewidth) + (m.anisotropic ? " aniso" : " iso");
      if (m.eps_bg_z) out += " " + fmt(*m.eps_bg_z);
    }
    out += '\n';
  }
  out += "incident " + stack.incident + '\n';
  for (const auto& layer : stack.layers) {
    out += "layer " + layer.material + " " + fmt(layer.thickness);
    if (!layer.label.empty()) out += " # " + layer.label;
    out += '\n';
  }
  out += "exit " + stack.exit + '\n';
  return out;
}

double period_thickness(const PeriodSequence& seq) {
  if (seq.layers.empty()) throw std::domain_error("empty period sequence");
  return std::accumulate(seq.layers.begin(), seq.layers.end(), 0.0,
                         [](double acc, const PeriodLayer& l) { return acc + l.thickness; });
}

void validate(const PeriodSequence& seq) {
  if (seq.layers.empty()) throw std::domain_error("empty period sequence");
  if (seq.repetitions < 1) throw std::domain_error("repetitions must be >= 1");
  if (seq.doping < 0.0) throw std::domain_error("doping must be >= 0");
  for (const auto& l : seq.layers)
    if (!(l.thickness > 0.0) || !std::isfinite(l.thickness))
      throw std::domain_error("period layer thickness must be positive");
}

PeriodSequence parse_sequence(std::string_view text) {
  using K = StackError::Kind;
  PeriodSequence seq;
  for_each_line(text, [&](int lineno, const std::vector<std::string_view>& toks, std::string_view) {
    if (toks.empty()) return;
    const LineParser p(lineno);
    if (toks[0] == "well" || toks[0] == "barrier") {
      if (toks.size() < 2 || toks.size() > 3)
        throw StackError(K::Syntax, lineno, "expected '<well|barrier> <nm> [doped]'");
      if (toks.size() == 3 && toks[2] != "doped")
        throw StackError(K::Syntax, lineno, "unknown flag '" + std::string(toks[2]) + "'");
      const double t = p.number(toks[1]);
      if (!(t > 0.0)) throw StackError(K::Validation, lineno, "thickness must be positive");
      seq.layers.push_back({t, toks[0] == "barrier", toks.size() == 3});
    } else if (toks[0] == "repetitions") {
      p.arity(toks, 2);
      const double n = p.number(toks[1]);
      if (n < 1 || n != std::floor(n)) throw StackError(K::Validation, lineno, "repetitions must be a positive integer");
      seq.repetitions = static_cast<int>(n);
    } else if (toks[0] == "doping") {
      p.arity(toks, 2);
      seq.doping = p.number(toks[1]);
    } else {
      throw StackError(K::Syntax, lineno, "unknown directive '" + std::string(toks[0]) + "'");
    }
  });
  if (seq.layers.empty()) throw StackError(K::Structure, 0, "sequence has no layers");
  validate(seq);
  return seq;
}

PeriodSequence paper_period() {
  PeriodSequence seq;
  // Wells and barriers alternate starting with the main well; layers 5-10
  // carry the Si doping.
  const double t[] = {6.4, 3.6, 3.3, 1.6, 3.2, 1.8, 2.3, 2.0, 1.9, 2.0, 1.8, 2.0, 2.2, 3.9};
  for (int i = 0; i < 14; ++i) seq.layers.push_back({t[i], i % 2 == 1, i >= 4 && i <= 9});
  seq.repetitions = 30;
  seq.doping = 3e17;
  return seq;
}

double paper_isb_plasma_energy(const DeviceParams& params) {
  return sheet_to_plasma({params.sheet_density, params.isb_mass, period_thickness(paper_period()),
                          params.isb_screening});
}

IsbLorentzMedium homogenize(const IsbLorentzMedium& well, double eps_barrier, double well_fraction) {
  if (!well.anisotropic) throw std::invalid_argument("homogenize needs a z-polarised oscillator");
  if (!(well_fraction > 0.0 && well_fraction <= 1.0))
    throw std::invalid_argument("well fraction must lie in (0, 1]");
  const double fw = well_fraction, fb = 1.0 - fw;
  const double ew = well.background_z(), eb = eps_barrier;
  const double a = well.plasma_energy * well.plasma_energy;
  const double s = fw * eb + fb * ew;
  IsbLorentzMedium out = well;
  out.eps_bg = fw * well.eps_bg + fb * eb;
  out.eps_bg_z = eb * ew / s;
  out.transition_energy = std::sqrt(well.transition_energy * well.transition_energy + fb * a / s);
  out.plasma_energy = std::sqrt(eb * eb * fw * a) / s;
  return out;
}

Stack paper_device(const DeviceParams& params) {
  Stack s;
  s.incident = "gaas";
  s.exit = "au";
  s.materials["gaas"] = ConstantMedium{params.eps_gaas};
  s.materials["al95"] = ConstantMedium{params.eps_al95};
  s.materials["n_plus"] =
      DrudeMedium{params.eps_gaas, volume_plasma_energy(3e18, params.doped_mass), params.doped_damping};
  s.materials["n_low"] =
      DrudeMedium{params.eps_gaas, volume_plasma_energy(1e17, params.doped_mass), params.doped_damping};
  s.materials["au"] = DrudeMedium{1.0, params.au_plasma, params.au_damping};

  const PeriodSequence period = paper_period();
  const double period_nm = period_thickness(period);
  const double plasma = paper_isb_plasma_energy(params);

  s.layers.push_back({"al95", 520.0, "Al0.95Ga0.05As undoped"});
  s.layers.push_back({"n_plus", 560.0, "GaAs 3e18"});
  double well = 0.0;
  for (const auto& l : period.layers)
    if (!l.barrier) well += l.thickness;
  // The sheet charge sits in the wells only.
  const IsbLorentzMedium in_wells{params.eps_gaas, params.transition_energy, plasma * std::sqrt(period_nm / well),
                                  params.isb_linewidth, params.anisotropic, std::nullopt};
  if (!params.explicit_periods) {
    const double fw = well / period_nm;
    s.materials["isb"] =
        params.anisotropic
            ? homogenize(in_wells, params.eps_al45, fw)
            : IsbLorentzMedium{fw * params.eps_gaas + (1.0 - fw) * params.eps_al45, params.transition_energy,
                               plasma, params.isb_linewidth, false, std::nullopt};
    s.layers.push_back({"isb", period_nm * period.repetitions, "active region, effective medium"});
  } else {
    s.materials["isb"] = in_wells;
    s.materials["al45"] = ConstantMedium{params.eps_al45};
    for (int r = 0; r < period.repetitions; ++r)
      for (const auto& l : period.layers) s.layers.push_back({l.barrier ? "al45" : "isb", l.thickness, ""});
  }
  s.layers.push_back({"n_low", 86.0, "GaAs 1e17"});
  s.layers.push_back({"n_plus", 17.0, "GaAs 3e18"});
  return s;
}

}  // namespace isbpol
