#include "distid/csv.hpp"

#include <array>
#include <charconv>
#include <fstream>
#include <sstream>

#include "distid/errors.hpp"

namespace distid {

std::string format_real(double value) {
  std::array<char, 64> buf{};
  auto res = std::to_chars(buf.data(), buf.data() + buf.size(), value, std::chars_format::general,
                           17);
  return std::string(buf.data(), res.ptr);
}

std::optional<std::size_t> CsvTable::column(std::string_view name) const {
  for (std::size_t i = 0; i < header.size(); ++i) {
    if (header[i] == name) {
      return i;
    }
  }
  return std::nullopt;
}

namespace {

std::vector<std::string> split_line(const std::string& line) {
  std::vector<std::string> cells;
  std::string cell;
  std::istringstream in(line);
  while (std::getline(in, cell, ',')) {
    if (!cell.empty() && cell.back() == '\r') {
      cell.pop_back();
    }
    cells.push_back(cell);
  }
  return cells;
}

}  // namespace

CsvTable read_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) {
    throw IoError(path.string(), "cannot open for reading");
  }
  CsvTable table;
  std::string line;
  if (!std::getline(in, line)) {
    throw ParameterError(path.string() + ": missing CSV header");
  }
  table.header = split_line(line);
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) {
      continue;
    }
    const auto cells = split_line(line);
    if (cells.size() != table.header.size()) {
      throw ParameterError(path.string() + ":" + std::to_string(line_no) + ": expected " +
                           std::to_string(table.header.size()) + " fields");
    }
    std::vector<double> row;
    row.reserve(cells.size());
    for (const auto& c : cells) {
      double v = 0.0;
      auto [ptr, ec] = std::from_chars(c.data(), c.data() + c.size(), v);
      if (ec != std::errc() || ptr != c.data() + c.size()) {
        throw ParameterError(path.string() + ":" + std::to_string(line_no) + ": bad number '" +
                             c + "'");
      }
      row.push_back(v);
    }
    table.rows.push_back(std::move(row));
  }
  return table;
}

}  // namespace distid
