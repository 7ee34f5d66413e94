#pragma once

#include <cstdint>
#include <string>
#include <string_view>

namespace perpetuity {

// Deterministic CSV assembly: doubles print as their shortest round-trip
// decimal form, so identical runs produce identical bytes.
class CsvBuilder {
 public:
  CsvBuilder& field(std::string_view s);
  CsvBuilder& field(const char* s) { return field(std::string_view(s)); }
  CsvBuilder& field(double v);
  CsvBuilder& field(bool v) { return field(std::string_view(v ? "true" : "false")); }
  CsvBuilder& field(std::uint64_t v);
  CsvBuilder& field(int v) { return field(static_cast<std::uint64_t>(v)); }
  CsvBuilder& end_row();

  const std::string& str() const { return buf_; }

 private:
  std::string buf_;
  bool row_open_ = false;
};

std::string format_double(double v);

void write_text_file(const std::string& path, const std::string& content);

}  // namespace perpetuity
