#include "tempolearn/csv.hpp"

#include <charconv>
#include <stdexcept>
#include <system_error>

namespace tempolearn::csv {

std::string format(double value) {
  char buf[64];
  const auto result = std::to_chars(buf, buf + sizeof(buf), value);
  return std::string(buf, result.ptr);
}

Writer::Writer(const std::filesystem::path& path, const std::vector<std::string>& header)
    : out_(path, std::ios::out | std::ios::trunc | std::ios::binary) {
  if (!out_) throw std::runtime_error("cannot open " + path.string() + " for writing");
  for (const auto& name : header) field(name);
  end_row();
}

Writer& Writer::field(std::string_view text) {
  if (!first_in_row_) out_ << ',';
  out_ << text;
  first_in_row_ = false;
  return *this;
}

Writer& Writer::field(double value) { return field(std::string_view(format(value))); }

Writer& Writer::field(std::size_t value) { return field(std::string_view(std::to_string(value))); }

Writer& Writer::field(int value) { return field(std::string_view(std::to_string(value))); }

Writer& Writer::field(bool value) { return field(std::string_view(value ? "1" : "0")); }

void Writer::end_row() {
  out_ << '\n';
  first_in_row_ = true;
  if (!out_) throw std::runtime_error("csv write failed");
}

std::vector<std::string> split_line(std::string_view line) {
  if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
  std::vector<std::string> fields;
  std::size_t start = 0;
  for (;;) {
    const auto comma = line.find(',', start);
    fields.emplace_back(line.substr(start, comma - start));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return fields;
}

double parse_double(std::string_view text) {
  double value = 0.0;
  const auto result = std::from_chars(text.data(), text.data() + text.size(), value);
  if (result.ec != std::errc{} || result.ptr != text.data() + text.size()) {
    throw std::invalid_argument("not a number: '" + std::string(text) + "'");
  }
  return value;
}

}  // namespace tempolearn::csv
