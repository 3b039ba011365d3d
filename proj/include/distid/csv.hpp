#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace distid {

// 17 significant digits; parses back to the identical double.
std::string format_real(double value);

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<double>> rows;

  std::optional<std::size_t> column(std::string_view name) const;
};

// Numeric CSV with one header row. Throws IoError / ParameterError.
CsvTable read_csv(const std::filesystem::path& path);

}  // namespace distid
