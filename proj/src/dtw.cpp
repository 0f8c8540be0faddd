#include "accent_eval/dtw.hpp"

#include <algorithm>
#include <limits>

#include "accent_eval/error.hpp"

namespace accent_eval::dtw {

namespace {

struct Cell {
  double sum = std::numeric_limits<double>::infinity();
  std::size_t steps = 0;
};

// Lexicographic (sum, steps) order.
bool better(const Cell& x, const Cell& y) {
  return x.sum < y.sum || (x.sum == y.sum && x.steps < y.steps);
}

}  // namespace

DtwResult align(std::size_t len_a, std::size_t len_b, const std::function<double(std::size_t, std::size_t)>& cost,
                Averaging averaging) {
  if (len_a == 0 || len_b == 0) throw Error(Errc::empty_input, "dtw: empty sequence");

  std::vector<double> local(len_a * len_b);
  std::vector<Cell> acc(len_a * len_b);
  auto at = [len_b](std::size_t i, std::size_t j) { return i * len_b + j; };

  for (std::size_t i = 0; i < len_a; ++i) {
    for (std::size_t j = 0; j < len_b; ++j) {
      const double c = cost(i, j);
      local[at(i, j)] = c;
      if (i == 0 && j == 0) {
        acc[0] = {c, 1};
        continue;
      }
      Cell best;
      if (i > 0 && j > 0 && better(acc[at(i - 1, j - 1)], best)) best = acc[at(i - 1, j - 1)];
      if (i > 0 && better(acc[at(i - 1, j)], best)) best = acc[at(i - 1, j)];
      if (j > 0 && better(acc[at(i, j - 1)], best)) best = acc[at(i, j - 1)];
      acc[at(i, j)] = {best.sum + c, best.steps + 1};
    }
  }

  DtwResult r;
  std::size_t i = len_a - 1;
  std::size_t j = len_b - 1;
  r.path.emplace_back(i, j);
  while (i > 0 || j > 0) {
    // Re-derive the predecessor with the same preference order as the
    // forward pass: diagonal, then (i-1, j), then (i, j-1).
    std::size_t bi = i;
    std::size_t bj = j;
    Cell best;
    if (i > 0 && j > 0 && better(acc[at(i - 1, j - 1)], best)) {
      best = acc[at(i - 1, j - 1)];
      bi = i - 1;
      bj = j - 1;
    }
    if (i > 0 && better(acc[at(i - 1, j)], best)) {
      best = acc[at(i - 1, j)];
      bi = i - 1;
      bj = j;
    }
    if (j > 0 && better(acc[at(i, j - 1)], best)) {
      best = acc[at(i, j - 1)];
      bi = i;
      bj = j - 1;
    }
    i = bi;
    j = bj;
    r.path.emplace_back(i, j);
  }
  std::reverse(r.path.begin(), r.path.end());

  r.step_costs.reserve(r.path.size());
  for (const auto& [pi, pj] : r.path) r.step_costs.push_back(local[at(pi, pj)]);
  r.total_cost = acc[at(len_a - 1, len_b - 1)].sum;
  switch (averaging) {
    case Averaging::path_length:
      r.mean_cost = r.total_cost / static_cast<double>(r.path.size());
      break;
    case Averaging::longer_sequence:
      r.mean_cost = r.total_cost / static_cast<double>(std::max(len_a, len_b));
      break;
    case Averaging::total:
      r.mean_cost = r.total_cost;
      break;
  }
  return r;
}

}  // namespace accent_eval::dtw
