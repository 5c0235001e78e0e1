#include <charconv>
#include <fstream>
#include <sstream>

#include "ibw/errors.hpp"
#include "ibw/exp.hpp"

namespace ibw::exp {

std::string format_double(double v) {
  char buf[64];
  const auto [p, ec] = std::to_chars(buf, buf + sizeof buf, v);
  if (ec != std::errc()) return "nan";
  return std::string(buf, p);
}

namespace {

bool needs_quotes(const std::string& s) { return s.find_first_of(",\"\n\r") != std::string::npos; }

std::string field(const std::string& s) {
  if (!needs_quotes(s)) return s;
  std::string q = "\"";
  for (char c : s) {
    if (c == '"') q += '"';
    q += c;
  }
  return q + "\"";
}

void append_row(std::string& out, const std::vector<std::string>& row) {
  for (std::size_t i = 0; i < row.size(); ++i) {
    if (i) out += ',';
    out += field(row[i]);
  }
  out += '\n';
}

}  // namespace

std::string to_csv(const CsvTable& t) {
  std::string out;
  append_row(out, t.header);
  for (const auto& r : t.rows) append_row(out, r);
  return out;
}

CsvTable parse_csv(const std::string& text, const std::string& origin) {
  std::vector<std::vector<std::string>> records;
  std::vector<std::size_t> starts;
  std::vector<std::string> row;
  std::string cur;
  bool quoted = false, after_quote = false;
  std::size_t line = 1, record_line = 1;
  auto fail = [&](const std::string& msg, std::size_t at) -> void {
    throw FormatError(origin + ":" + std::to_string(line) + ": " + msg, at);
  };
  for (std::size_t i = 0; i < text.size(); ++i) {
    const char c = text[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < text.size() && text[i + 1] == '"') {
          cur += '"';
          ++i;
        } else {
          quoted = false;
          after_quote = true;
        }
      } else {
        if (c == '\n') ++line;
        cur += c;
      }
      continue;
    }
    if (c == '"') {
      if (!cur.empty() || after_quote) fail("stray quote", i);
      quoted = true;
    } else if (c == ',') {
      row.push_back(std::move(cur));
      cur.clear();
      after_quote = false;
    } else if (c == '\n' || c == '\r') {
      if (c == '\r' && i + 1 < text.size() && text[i + 1] == '\n') ++i;
      row.push_back(std::move(cur));
      cur.clear();
      after_quote = false;
      records.push_back(std::move(row));
      starts.push_back(record_line);
      row.clear();
      ++line;
      record_line = line;
    } else {
      if (after_quote) fail("text after closing quote", i);
      cur += c;
    }
  }
  if (quoted) fail("unterminated quoted field", text.size());
  if (!cur.empty() || !row.empty()) {
    row.push_back(std::move(cur));
    records.push_back(std::move(row));
    starts.push_back(record_line);
  }

  CsvTable t;
  if (records.empty()) throw FormatError(origin + ":1: missing header row", 0);
  t.header = std::move(records[0]);
  for (std::size_t r = 1; r < records.size(); ++r) {
    if (records[r].size() == 1 && records[r][0].empty()) continue;  // blank line
    if (records[r].size() != t.header.size())
      throw FormatError(origin + ":" + std::to_string(starts[r]) + ": expected " + std::to_string(t.header.size()) +
                            " fields, found " + std::to_string(records[r].size()),
                        0);
    t.rows.push_back(std::move(records[r]));
  }
  return t;
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw InputError("cannot write " + path.string());
  out << text;
  if (!out) throw InputError("short write to " + path.string());
}

std::string read_text(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace ibw::exp
