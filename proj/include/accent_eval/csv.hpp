#pragma once

#include <istream>
#include <map>
#include <ostream>
#include <string>
#include <vector>

namespace accent_eval::csv {

/// Frame-table layout shared by posteriorgram, cepstrum and F0 caches:
///
///   #hop=0.01
///   label_1,label_2,...
///   v11,v12,...
struct Table {
  double hop = 0.0;
  std::map<std::string, std::string> meta;  // other "#key=value" lines
  std::vector<std::string> header;
  std::vector<std::vector<double>> rows;
};

/// Throws ParseError (with line number) on a missing hop line, malformed
/// numbers, or rows whose width differs from the header.
Table read_hop_table(std::istream& in);

/// Values are printed with 17 significant digits so reading back is exact.
void write_hop_table(std::ostream& out, double hop, const std::vector<std::string>& header,
                     const std::vector<std::vector<double>>& rows,
                     const std::map<std::string, std::string>& meta = {});

std::vector<std::string> split(const std::string& line, char sep);

}  // namespace accent_eval::csv
