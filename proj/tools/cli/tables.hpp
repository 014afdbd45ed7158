#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace signdense::cli {

// Header-keyed CSV: first line names the columns, cells are raw strings.
struct CsvTable {
  std::vector<std::string> columns;
  std::vector<std::vector<std::string>> rows;

  std::optional<std::size_t> column(std::string_view name) const;
};

CsvTable parse_csv(std::string_view text, std::string_view where);
CsvTable load_csv(const std::filesystem::path& path);

// Empty, "null", "nan" and "NA" cells read as missing.
std::optional<double> parse_cell(std::string_view cell, std::string_view where);

// Token sequences keyed by id. A line holds "tokens", "glosses", or the
// "spans" array written by `align` (gloss name last in each span).
std::map<std::string, std::vector<std::string>> load_token_jsonl(const std::filesystem::path& path);

std::string read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, std::string_view text);

}  // namespace signdense::cli
