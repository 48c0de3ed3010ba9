#include "isbpol/csv.hpp"

#include <cmath>
#include <cstdio>
#include <stdexcept>

namespace isbpol::csv {

std::string format(double value) {
  if (std::isnan(value)) return "nan";
  if (std::isinf(value)) return value > 0 ? "inf" : "-inf";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.10g", value == 0.0 ? 0.0 : value);
  return buf;
}

Writer::Writer(std::ostream& out, const std::vector<std::string>& columns, const std::string& provenance)
    : out_(out), columns_(columns.size()) {
  if (!provenance.empty()) out_ << "# generated by: " << provenance << '\n';
  for (std::size_t i = 0; i < columns.size(); ++i) out_ << (i ? "," : "") << columns[i];
  out_ << '\n';
}

Writer& Writer::cell(double value) {
  row_.push_back(format(value));
  return *this;
}

Writer& Writer::cell(const std::string& value) {
  row_.push_back(value);
  return *this;
}

void Writer::end_row() {
  if (row_.size() != columns_)
    throw std::logic_error("csv row has " + std::to_string(row_.size()) + " cells, expected " +
                           std::to_string(columns_));
  for (std::size_t i = 0; i < row_.size(); ++i) out_ << (i ? "," : "") << row_[i];
  out_ << '\n';
  row_.clear();
}

}  // namespace isbpol::csv
