#pragma once

#include <filesystem>
#include <fstream>
#include <string>
#include <string_view>
#include <vector>

namespace tempolearn::csv {

/// Shortest decimal text that round-trips to the same double.
std::string format(double value);

/// Row-at-a-time CSV writer. Fields are written verbatim (no quoting); callers
/// only emit identifiers and numbers.
class Writer {
 public:
  Writer(const std::filesystem::path& path, const std::vector<std::string>& header);

  Writer& field(std::string_view text);
  Writer& field(double value);
  Writer& field(std::size_t value);
  Writer& field(int value);
  Writer& field(bool value);
  void end_row();

 private:
  std::ofstream out_;
  bool first_in_row_ = true;
};

std::vector<std::string> split_line(std::string_view line);
double parse_double(std::string_view text);

}  // namespace tempolearn::csv
