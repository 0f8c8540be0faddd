#pragma once

#include <cstddef>
#include <istream>
#include <span>
#include <string>
#include <vector>

#include "accent_eval/dtw.hpp"

namespace accent_eval::ppg {

/// Phonetic posteriorgram: one probability row per frame.
struct Posteriorgram {
  std::vector<std::vector<double>> rows;
  std::vector<std::string> class_labels;
  double hop = 0.0;

  std::size_t num_frames() const { return rows.size(); }
  std::size_t num_classes() const { return class_labels.size(); }
};

/// Row-sum deviation beyond which a row is rejected instead of renormalized.
inline constexpr double kRowSumTolerance = 0.05;

/// Reads the CSV layout: `#hop=<seconds>`, a header of class labels, then
/// one comma-separated row per frame. Rows are renormalized to sum to one.
Posteriorgram load_ppg(std::istream& in);
Posteriorgram load_ppg_file(const std::string& path);

/// Validates and renormalizes an in-memory posteriorgram (same rules as
/// load_ppg).
Posteriorgram make_posteriorgram(std::vector<std::vector<double>> rows, std::vector<std::string> labels,
                                 double hop);

void write_ppg(std::ostream& out, const Posteriorgram& p);

/// 1 - cos(p, q). Throws Errc::degenerate_input on a zero row.
double cosine_cost(std::span<const double> p, std::span<const double> q);

/// Jensen-Shannon distance with base-2 logarithms, in [0, 1].
double js_cost(std::span<const double> p, std::span<const double> q);

enum class Cost { cosine, js };

/// DTW over frames with the chosen step cost. Throws
/// Errc::incompatible_inputs when the class labels differ.
dtw::DtwResult dtw_ppg(const Posteriorgram& a, const Posteriorgram& b, Cost cost,
                       dtw::Averaging averaging = dtw::Averaging::path_length);

struct PpgSimilarity {
  double cossim = 0.0;  // 1 - mean cosine cost, higher is closer
  double js = 0.0;      // mean JS distance, lower is closer
};

PpgSimilarity ppg_similarity(const Posteriorgram& a, const Posteriorgram& b);

}  // namespace accent_eval::ppg
