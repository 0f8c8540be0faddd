#pragma once

#include <cstddef>
#include <cstdint>
#include <istream>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

namespace accent_eval::stats {

enum class Direction { higher_better, lower_better };

/// How equal values share ranks. `average` gives each member of a tie
/// group the mean of the ranks it spans; `ordinal` breaks ties by input
/// order (earlier entries rank better).
enum class TiePolicy { average, ordinal };

/// Rank 1 is the best value under `direction`. Throws Errc::precondition
/// for fewer than two values or a NaN.
std::vector<double> rank_with_ties(const std::vector<double>& values, Direction direction,
                                   TiePolicy ties = TiePolicy::average);

enum class PValueMethod {
  t_approximation,  // two-sided, t = rho * sqrt((n - 2) / (1 - rho^2)), df = n - 2
  exact,            // two-sided permutation p over all n! orderings, n <= 8
};

struct Correlation {
  double rho = 0.0;
  double p = 1.0;
};

/// Pearson correlation of the average ranks of x and y. Throws
/// Errc::precondition on a length mismatch or n < 3, and
/// Errc::undefined_metric when either side is constant.
Correlation spearman(const std::vector<double>& x, const std::vector<double>& y,
                     PValueMethod method = PValueMethod::t_approximation);

/// Student-t CDF via the regularized incomplete beta function.
double student_t_cdf(double t, double df);

/// Two-sided critical value t with P(|T| <= t) = level.
double student_t_critical(double level, double df);

struct MetricColumn {
  std::string name;
  Direction direction = Direction::lower_better;
  std::vector<double> values;  // one per system
};

struct MetricTable {
  std::vector<std::string> systems;
  std::vector<int> hypothesized_rank;
  std::vector<MetricColumn> metrics;
};

/// Throws Errc::validation when a column has the wrong length or the
/// hypothesized ranks are not a permutation of 1..N.
void validate(const MetricTable& t);

/// TSV with header `system<TAB>hyp_rank<TAB>name:up|name:down...`. Lines
/// starting with '#' and blank lines are ignored.
MetricTable read_metric_table(std::istream& in);
MetricTable read_metric_table_file(const std::string& path);
void write_metric_table(std::ostream& out, const MetricTable& t);

struct SrccResult {
  std::string metric;
  std::optional<double> rho;  // empty when undefined (all values tied)
  std::optional<double> p;
  bool significant = false;
  std::string note;
};

struct SrccOptions {
  TiePolicy ties = TiePolicy::average;
  PValueMethod p_method = PValueMethod::t_approximation;
  double alpha = 0.05;
};

/// Spearman correlation of each metric's direction-aware ranking against the
/// hypothesized ranking. Positive rho means the metric agrees.
std::vector<SrccResult> srcc_vs_hypothesis(const MetricTable& t, const SrccOptions& opts = {});

struct PreferenceSet {
  std::vector<double> proportions;  // one per listener, in [0, 1]
};

struct PreferenceResult {
  std::size_t n = 0;
  double mean_pct = 0.0;
  std::optional<double> ci95_halfwidth_pct;  // empty when n < 2
  std::optional<double> p_one_sided;         // empty when n < 2
};

/// One-sided t-test of H0: mean proportion <= 0.5, with the 95% interval
/// taken across listeners. Zero spread gives p = 0, 0.5 or 1 depending on
/// which side of 0.5 the mean falls. Throws Errc::validation for an empty
/// set or a proportion outside [0, 1].
PreferenceResult preference_test(const PreferenceSet& s);

struct CurvePoint {
  std::size_t k = 0;
  double mean_p = 0.0;
  double ci95 = 0.0;  // NaN when repeats == 1
};

struct SubsetCurveOptions {
  std::size_t repeats = 1000;
  std::uint64_t seed = 0;
  std::size_t threads = 1;
};

/// For k = 2..n, draws `repeats` subsets of size k without replacement and
/// reports the mean and 95% interval of their one-sided p-values. Each draw
/// is seeded from (seed, k, repeat) so the curve does not depend on the
/// thread count. Throws Errc::precondition for n < 3 or repeats == 0.
std::vector<CurvePoint> pvalue_vs_subset_size(const PreferenceSet& s, const SubsetCurveOptions& opts = {});

void write_curve_csv(std::ostream& out, const std::vector<CurvePoint>& curve);

}  // namespace accent_eval::stats
