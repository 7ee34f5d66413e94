#include "perpetuity/csv.hpp"

#include <charconv>
#include <fstream>
#include <stdexcept>

namespace perpetuity {

std::string format_double(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

CsvBuilder& CsvBuilder::field(std::string_view s) {
  if (row_open_) buf_.push_back(',');
  buf_.append(s);
  row_open_ = true;
  return *this;
}

CsvBuilder& CsvBuilder::field(double v) { return field(std::string_view(format_double(v))); }

CsvBuilder& CsvBuilder::field(std::uint64_t v) {
  char buf[24];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return field(std::string_view(buf, static_cast<std::size_t>(res.ptr - buf)));
}

CsvBuilder& CsvBuilder::end_row() {
  buf_.push_back('\n');
  row_open_ = false;
  return *this;
}

void write_text_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write '" + path + "'");
  out << content;
  if (!out) throw std::runtime_error("write failed for '" + path + "'");
}

}  // namespace perpetuity
