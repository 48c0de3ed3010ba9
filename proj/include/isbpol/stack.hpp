// Multilayer device description, text format and the built-in preset.
#ifndef ISBPOL_STACK_HPP
#define ISBPOL_STACK_HPP

#include <map>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "isbpol/materials.hpp"

namespace isbpol {

struct Layer {
  std::string material;
  double thickness = 0.0;  // nm
  std::string label;
  friend bool operator==(const Layer&, const Layer&) = default;
};

/// Layers are ordered from the incident side. Both bounding media are
/// semi-infinite.
struct Stack {
  std::string incident;
  std::vector<Layer> layers;
  std::string exit;
  std::map<std::string, MaterialModel> materials;

  const MaterialModel& material(const std::string& name) const;
  double total_thickness() const;
  friend bool operator==(const Stack&, const Stack&) = default;
};

class StackError : public std::runtime_error {
 public:
  enum class Kind { Syntax, Reference, Structure, Validation };
  StackError(Kind kind, int line, const std::string& message);
  Kind kind() const { return kind_; }
  /// 1-based line number, 0 when the error is not tied to a line.
  int line() const { return line_; }

 private:
  Kind kind_;
  int line_;
};

/// Throws StackError when any invariant is violated.
void validate(const Stack& stack);

/// Parses the line-oriented device format:
///   material <name> const <eps>
///   material <name> drude <eps_inf> <Ep_meV> <gamma_meV>
///   material <name> isb <eps_bg> <E12_meV> <wp_meV> <gamma12_meV> <iso|aniso> [eps_bg_z]
///   incident <name>
///   layer <name> <thickness_nm>     (repeatable, from the incident side)
///   exit <name>
/// '#' starts a comment; a comment trailing a layer line becomes its label.
Stack parse_stack(std::string_view text);
Stack load_stack(const std::string& path);
std::string render_stack(const Stack& stack);

bool is_lossless(const MaterialModel& model);

struct PeriodLayer {
  double thickness = 0.0;  // nm
  bool barrier = false;
  bool doped = false;
  friend bool operator==(const PeriodLayer&, const PeriodLayer&) = default;
};

struct PeriodSequence {
  std::vector<PeriodLayer> layers;
  int repetitions = 1;
  double doping = 0.0;  // cm^-3, applied to layers flagged doped
};

/// Throws std::domain_error for an empty sequence.
double period_thickness(const PeriodSequence& seq);
void validate(const PeriodSequence& seq);

/// Line format: `well <nm> [doped]`, `barrier <nm> [doped]`,
/// `repetitions <n>`, `doping <cm^-3>`; '#' comments.
PeriodSequence parse_sequence(std::string_view text);

/// One period of the quantum cascade active region, main well first,
/// repeated 30 times, Si doping 3e17 cm^-3 in the flagged layers.
PeriodSequence paper_period();

/// Tunable, unquoted parameters of the preset device.
struct DeviceParams {
  double eps_gaas = 10.89;
  double eps_al95 = 9.18;
  double eps_al45 = 9.9;
  double au_plasma = 8900.0;   // meV
  double au_damping = 65.0;    // meV
  double doped_mass = 0.067;
  double doped_damping = 10.0;  // meV
  double sheet_density = 1.8e11;  // cm^-2 per period
  double isb_mass = 0.067;
  double isb_screening = 1.0;
  double transition_energy = 163.0;  // meV
  double isb_linewidth = 10.0;       // meV
  bool anisotropic = true;
  /// Expand the active region into its individual wells and barriers.
  bool explicit_periods = false;
};

/// The measured device, from the GaAs substrate (incident) to the top metal
/// (exit, gold): Al0.95Ga0.05As 520 nm, n+ GaAs 560 nm, active region
/// 30 x 38 nm, n GaAs 86 nm, n+ GaAs 17 nm.
Stack paper_device(const DeviceParams& params = {});

/// Long-wavelength effective medium of a periodic stack of wells carrying an
/// anisotropic Lorentz term and plain barriers. In plane the permittivities
/// average by thickness; along z their inverses do, which raises the pole
/// (depolarisation shift) and rescales its strength. Throws
/// std::invalid_argument for an isotropic oscillator or a fraction outside
/// (0, 1].
IsbLorentzMedium homogenize(const IsbLorentzMedium& well, double eps_barrier, double well_fraction);

/// Thickness-averaged plasma energy of the active region, from the sheet
/// density spread over one period.
double paper_isb_plasma_energy(const DeviceParams& params = {});

}  // namespace isbpol

#endif  // ISBPOL_STACK_HPP
