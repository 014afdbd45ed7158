#include "tables.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <iterator>
#include <sstream>

#include "json.hpp"
#include "signdense/error.hpp"

namespace signdense::cli {

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

std::vector<std::string> split_commas(std::string_view line) {
  std::vector<std::string> out;
  std::size_t pos = 0;
  while (true) {
    const auto comma = line.find(',', pos);
    out.emplace_back(trim(line.substr(pos, comma - pos)));
    if (comma == std::string_view::npos) break;
    pos = comma + 1;
  }
  return out;
}

}  // namespace

std::optional<std::size_t> CsvTable::column(std::string_view name) const {
  for (std::size_t i = 0; i < columns.size(); ++i)
    if (columns[i] == name) return i;
  return std::nullopt;
}

CsvTable parse_csv(std::string_view text, std::string_view where) {
  CsvTable t;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const auto nl = text.find('\n', pos);
    const auto line = trim(text.substr(pos, nl == std::string_view::npos ? std::string_view::npos : nl - pos));
    pos = nl == std::string_view::npos ? text.size() + 1 : nl + 1;
    ++line_no;
    if (line.empty()) continue;
    auto cells = split_commas(line);
    if (t.columns.empty()) {
      t.columns = std::move(cells);
      continue;
    }
    if (cells.size() != t.columns.size()) {
      throw Error(ErrorCode::MalformedRecord, std::string(where) + ": line " + std::to_string(line_no) + " has " +
                                                  std::to_string(cells.size()) + " cells, header has " +
                                                  std::to_string(t.columns.size()));
    }
    t.rows.push_back(std::move(cells));
  }
  if (t.columns.empty()) throw Error(ErrorCode::MalformedRecord, std::string(where) + ": missing header line");
  return t;
}

CsvTable load_csv(const std::filesystem::path& path) { return parse_csv(read_file(path), path.string()); }

std::optional<double> parse_cell(std::string_view cell, std::string_view where) {
  cell = trim(cell);
  if (cell.empty() || cell == "null" || cell == "nan" || cell == "NaN" || cell == "NA") return std::nullopt;
  double v = 0;
  const auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), v);
  if (ec != std::errc() || ptr != cell.data() + cell.size()) {
    throw Error(ErrorCode::MalformedRecord, std::string(where) + ": '" + std::string(cell) + "' is not a number");
  }
  if (!std::isfinite(v)) throw Error(ErrorCode::NonFiniteValue, std::string(where) + ": non-finite cell");
  return v;
}

std::map<std::string, std::vector<std::string>> load_token_jsonl(const std::filesystem::path& path) {
  std::map<std::string, std::vector<std::string>> out;
  std::istringstream in(read_file(path));
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string where = path.string() + ":" + std::to_string(line_no);
    if (trim(line).empty()) continue;
    const auto j = nlohmann::json::parse(line, nullptr, false);
    if (j.is_discarded() || !j.is_object()) throw Error(ErrorCode::MalformedRecord, where + ": not a JSON object");
    if (!j.contains("id") || !j["id"].is_string()) {
      throw Error(ErrorCode::MalformedRecord, where + ": missing string key 'id'");
    }
    std::vector<std::string> tokens;
    if (j.contains("spans") && j["spans"].is_array()) {
      for (const auto& s : j["spans"]) {
        if (!s.is_array() || s.empty() || !s.back().is_string()) {
          throw Error(ErrorCode::MalformedRecord, where + ": span entries must end with a gloss name");
        }
        tokens.push_back(s.back().get<std::string>());
      }
    } else {
      const char* key = j.contains("tokens") ? "tokens" : "glosses";
      if (!j.contains(key) || !j[key].is_array()) {
        throw Error(ErrorCode::MalformedRecord, where + ": expected 'tokens', 'glosses' or 'spans'");
      }
      for (const auto& t : j[key]) {
        if (!t.is_string()) throw Error(ErrorCode::MalformedRecord, where + ": tokens must be strings");
        tokens.push_back(t.get<std::string>());
      }
    }
    const auto id = j["id"].get<std::string>();
    if (!out.emplace(id, std::move(tokens)).second) {
      throw Error(ErrorCode::DuplicateClipId, where + ": id '" + id + "' repeated");
    }
  }
  return out;
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::IoError, "cannot open '" + path.string() + "'");
  return std::string((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
}

void write_file(const std::filesystem::path& path, std::string_view text) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::IoError, "cannot write '" + path.string() + "'");
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  if (!out) throw Error(ErrorCode::IoError, "write failed for '" + path.string() + "'");
}

}  // namespace signdense::cli
