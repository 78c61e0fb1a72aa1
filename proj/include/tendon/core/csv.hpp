#pragma once

#include <cmath>
#include <cstdio>
#include <initializer_list>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

namespace tendon {

/// Shortest fixed-width-free rendering with 9 significant digits.
inline std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.9g", v);
  return buf;
}

/// Comma-separated, '.' decimal, LF line endings. Fields are written
/// verbatim; callers never pass values containing commas or quotes.
class CsvWriter {
public:
  explicit CsvWriter(std::ostream& out) : out_(out) {}

  void header(std::initializer_list<std::string_view> names) {
    bool first = true;
    for (auto n : names) {
      if (!first) out_ << ',';
      out_ << n;
      first = false;
    }
    out_ << '\n';
  }

  void header(const std::vector<std::string>& names) {
    for (std::size_t i = 0; i < names.size(); ++i) out_ << (i ? "," : "") << names[i];
    out_ << '\n';
  }

  CsvWriter& field(std::string_view s) {
    sep();
    out_ << s;
    return *this;
  }
  CsvWriter& field(double v) {
    sep();
    out_ << format_double(v);
    return *this;
  }
  CsvWriter& field(long long v) {
    sep();
    out_ << v;
    return *this;
  }
  CsvWriter& field(unsigned long long v) {
    sep();
    out_ << v;
    return *this;
  }
  CsvWriter& field(int v) { return field(static_cast<long long>(v)); }
  CsvWriter& field(bool v) { return field(std::string_view(v ? "true" : "false")); }

  void end_row() {
    out_ << '\n';
    first_ = true;
  }

private:
  void sep() {
    if (!first_) out_ << ',';
    first_ = false;
  }

  std::ostream& out_;
  bool first_ = true;
};

/// Splits one CSV line (no quoting).
inline std::vector<std::string> split_csv_line(std::string_view line) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t comma = line.find(',', start);
    out.emplace_back(line.substr(start, comma == std::string_view::npos ? line.npos : comma - start));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return out;
}

}  // namespace tendon
