#pragma once

#include <cstddef>
#include <functional>
#include <utility>
#include <vector>

namespace accent_eval::dtw {

/// How the cumulative cost of the optimal path is turned into a distance.
enum class Averaging {
  path_length,      // mean over alignment steps (default)
  longer_sequence,  // sum / max(len_a, len_b)
  total,            // plain sum
};

struct DtwResult {
  std::vector<std::pair<std::size_t, std::size_t>> path;
  std::vector<double> step_costs;
  double total_cost = 0.0;
  double mean_cost = 0.0;
};

/// Full-boundary DTW with unweighted steps (1,0), (0,1), (1,1) and no
/// window. The path minimizes the summed step cost; among equal sums the
/// shorter path wins. `cost(i, j)` is evaluated once per cell.
DtwResult align(std::size_t len_a, std::size_t len_b,
                const std::function<double(std::size_t, std::size_t)>& cost,
                Averaging averaging = Averaging::path_length);

}  // namespace accent_eval::dtw
