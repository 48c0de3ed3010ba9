// Deterministic CSV output.
#ifndef ISBPOL_CSV_HPP
#define ISBPOL_CSV_HPP

#include <ostream>
#include <string>
#include <vector>

namespace isbpol::csv {

/// %.10g, with "nan" and "inf"/"-inf" spelled out.
std::string format(double value);

class Writer {
 public:
  /// `provenance` is written first as `# generated by: <provenance>` when
  /// non-empty.
  Writer(std::ostream& out, const std::vector<std::string>& columns, const std::string& provenance = {});

  Writer& cell(double value);
  Writer& cell(const std::string& value);
  /// Ends the current row; throws std::logic_error on a column-count mismatch.
  void end_row();

 private:
  std::ostream& out_;
  std::size_t columns_;
  std::vector<std::string> row_;
};

}  // namespace isbpol::csv

#endif  // ISBPOL_CSV_HPP
