#ifndef REPLICOAL_APP_OUTPUT_HPP
#define REPLICOAL_APP_OUTPUT_HPP

#include <cstdint>
#include <filesystem>
#include <ostream>
#include <string>
#include <variant>
#include <vector>

namespace replicoal::app {

/// Lossless decimal form of a double (17 significant digits).
std::string format_number(double v);

using Cell = std::variant<double, std::int64_t, std::string>;

struct Table {
  std::vector<std::string> header;
  std::vector<std::vector<Cell>> rows;

  void add(std::vector<Cell> row);
};

void write_csv(std::ostream& out, const Table& table);
void write_jsonl(std::ostream& out, const Table& table);

/// Writes `stem`.csv and/or `stem`.jsonl into `dir`; returns the paths written.
std::vector<std::filesystem::path> write_table(const std::filesystem::path& dir, const std::string& stem,
                                               const Table& table, bool csv, bool jsonl);

void write_text(const std::filesystem::path& path, const std::string& text);

}  // namespace replicoal::app

#endif  // REPLICOAL_APP_OUTPUT_HPP
