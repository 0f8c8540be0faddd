#include "accent_eval/ppg.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <sstream>

#include "accent_eval/csv.hpp"
#include "accent_eval/error.hpp"

namespace accent_eval::ppg {

Posteriorgram make_posteriorgram(std::vector<std::vector<double>> rows, std::vector<std::string> labels, double hop) {
  if (labels.size() < 2) throw Error(Errc::validation, "posteriorgram needs at least two classes");
  if (rows.empty()) throw Error(Errc::validation, "posteriorgram has no frames");
  for (std::size_t r = 0; r < rows.size(); ++r) {
    auto& row = rows[r];
    if (row.size() != labels.size()) {
      throw ParseError("posteriorgram frame " + std::to_string(r) + " has " + std::to_string(row.size()) +
                       " values, expected " + std::to_string(labels.size()));
    }
    double sum = 0.0;
    for (double v : row) {
      if (!std::isfinite(v)) throw Error(Errc::validation, "posteriorgram frame " + std::to_string(r) + " is not finite");
      if (v < 0.0) throw Error(Errc::validation, "posteriorgram frame " + std::to_string(r) + " has a negative entry");
      sum += v;
    }
    if (std::abs(sum - 1.0) > kRowSumTolerance) {
      throw Error(Errc::validation, "posteriorgram frame " + std::to_string(r) + " sums to " + std::to_string(sum));
    }
    for (double& v : row) v /= sum;
  }
  return {std::move(rows), std::move(labels), hop};
}

Posteriorgram load_ppg(std::istream& in) {
  csv::Table t = csv::read_hop_table(in);
  return make_posteriorgram(std::move(t.rows), std::move(t.header), t.hop);
}

Posteriorgram load_ppg_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(Errc::not_found, "cannot open PPG file " + path);
  return load_ppg(in);
}

void write_ppg(std::ostream& out, const Posteriorgram& p) {
  csv::write_hop_table(out, p.hop, p.class_labels, p.rows);
}

double cosine_cost(std::span<const double> p, std::span<const double> q) {
  if (p.size() != q.size()) throw Error(Errc::incompatible_inputs, "cosine_cost: dimension mismatch");
  double dot = 0.0;
  double np = 0.0;
  double nq = 0.0;
  for (std::size_t k = 0; k < p.size(); ++k) {
    dot += p[k] * q[k];
    np += p[k] * p[k];
    nq += q[k] * q[k];
  }
  if (!(np > 0.0) || !(nq > 0.0)) throw Error(Errc::degenerate_input, "cosine_cost: zero-norm row");
  const double c = 1.0 - dot / std::sqrt(np * nq);
  return std::clamp(c, 0.0, 1.0);
}

double js_cost(std::span<const double> p, std::span<const double> q) {
  if (p.size() != q.size()) throw Error(Errc::incompatible_inputs, "js_cost: dimension mismatch");
  double div = 0.0;
  for (std::size_t k = 0; k < p.size(); ++k) {
    const double m = 0.5 * (p[k] + q[k]);
    if (p[k] > 0.0) div += 0.5 * p[k] * std::log2(p[k] / m);
    if (q[k] > 0.0) div += 0.5 * q[k] * std::log2(q[k] / m);
  }
  return std::clamp(std::sqrt(std::max(div, 0.0)), 0.0, 1.0);
}

dtw::DtwResult dtw_ppg(const Posteriorgram& a, const Posteriorgram& b, Cost cost, dtw::Averaging averaging) {
  if (a.class_labels != b.class_labels) {
    throw Error(Errc::incompatible_inputs, "dtw_ppg: posteriorgrams use different class labels");
  }
  auto step = [&](std::size_t i, std::size_t j) {
    return cost == Cost::cosine ? cosine_cost(a.rows[i], b.rows[j]) : js_cost(a.rows[i], b.rows[j]);
  };
  return dtw::align(a.num_frames(), b.num_frames(), step, averaging);
}

PpgSimilarity ppg_similarity(const Posteriorgram& a, const Posteriorgram& b) {
  return {1.0 - dtw_ppg(a, b, Cost::cosine).mean_cost, dtw_ppg(a, b, Cost::js).mean_cost};
}

}  // namespace accent_eval::ppg
