#include "accent_eval/csv.hpp"

#include <charconv>
#include <iomanip>
#include <limits>

#include "accent_eval/error.hpp"

namespace accent_eval::csv {

namespace {

std::string strip(const std::string& s) {
  auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

double to_double(const std::string& field, std::size_t line) {
  std::string f = strip(field);
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(f.data(), f.data() + f.size(), v);
  if (f.empty() || ec != std::errc() || ptr != f.data() + f.size()) {
    throw ParseError("malformed number '" + f + "'", line);
  }
  return v;
}

}  // namespace

std::vector<std::string> split(const std::string& line, char sep) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : line) {
    if (c == sep) {
      out.push_back(cur);
      cur.clear();
    } else {
      cur.push_back(c);
    }
  }
  out.push_back(cur);
  return out;
}

Table read_hop_table(std::istream& in) {
  Table t;
  std::string line;
  std::size_t line_no = 0;
  bool have_hop = false;
  bool have_header = false;
  while (std::getline(in, line)) {
    ++line_no;
    std::string s = strip(line);
    if (s.empty()) continue;
    if (s.front() == '#') {
      auto eq = s.find('=');
      if (eq == std::string::npos) continue;
      std::string key = strip(s.substr(1, eq - 1));
      std::string value = strip(s.substr(eq + 1));
      if (key == "hop") {
        t.hop = to_double(value, line_no);
        have_hop = true;
      } else {
        t.meta[key] = value;
      }
      continue;
    }
    if (!have_header) {
      for (auto& f : split(s, ',')) t.header.push_back(strip(f));
      have_header = true;
      continue;
    }
    auto fields = split(s, ',');
    if (fields.size() != t.header.size()) {
      throw ParseError("row has " + std::to_string(fields.size()) + " fields, header has " +
                           std::to_string(t.header.size()),
                       line_no);
    }
    std::vector<double> row;
    row.reserve(fields.size());
    for (const auto& f : fields) row.push_back(to_double(f, line_no));
    t.rows.push_back(std::move(row));
  }
  if (!have_hop) throw ParseError("missing '#hop=<seconds>' line");
  if (!have_header) throw ParseError("missing header line");
  return t;
}

void write_hop_table(std::ostream& out, double hop, const std::vector<std::string>& header,
                     const std::vector<std::vector<double>>& rows, const std::map<std::string, std::string>& meta) {
  out << std::setprecision(std::numeric_limits<double>::max_digits10);
  out << "#hop=" << hop << '\n';
  for (const auto& [k, v] : meta) out << '#' << k << '=' << v << '\n';
  for (std::size_t k = 0; k < header.size(); ++k) out << (k ? "," : "") << header[k];
  out << '\n';
  for (const auto& row : rows) {
    for (std::size_t k = 0; k < row.size(); ++k) out << (k ? "," : "") << row[k];
    out << '\n';
  }
}

}  // namespace accent_eval::csv
