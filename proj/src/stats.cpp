#include "accent_eval/stats.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <numeric>
#include <random>
#include <set>
#include <sstream>
#include <thread>

#include <boost/math/distributions/students_t.hpp>
#include <boost/math/special_functions/beta.hpp>

#include "accent_eval/csv.hpp"
#include "accent_eval/error.hpp"

namespace accent_eval::stats {

namespace {

double pearson(const std::vector<double>& x, const std::vector<double>& y) {
  const auto n = static_cast<double>(x.size());
  const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
  const double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
  double sxy = 0.0;
  double sxx = 0.0;
  double syy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
    syy += (y[i] - my) * (y[i] - my);
  }
  if (!(sxx > 0.0) || !(syy > 0.0)) {
    throw Error(Errc::undefined_metric, "spearman: a constant input has no rank correlation");
  }
  return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

double t_approximation_p(double rho, std::size_t n) {
  const double denom = 1.0 - rho * rho;
  if (denom <= 0.0) return 0.0;
  const double df = static_cast<double>(n - 2);
  const double t = std::abs(rho) * std::sqrt(df / denom);
  return std::clamp(2.0 * (1.0 - student_t_cdf(t, df)), 0.0, 1.0);
}

double permutation_p(const std::vector<double>& rx, const std::vector<double>& ry, double rho) {
  if (rx.size() > 8) throw Error(Errc::precondition, "spearman: exact p-value is limited to n <= 8");
  std::vector<double> perm = ry;
  std::sort(perm.begin(), perm.end());
  std::size_t hits = 0;
  std::size_t total = 0;
  const double target = std::abs(rho) - 1e-12;
  do {
    ++total;
    if (std::abs(pearson(rx, perm)) >= target) ++hits;
  } while (std::next_permutation(perm.begin(), perm.end()));
  // Each distinct arrangement of tied ranks stands for the same number of
  // raw permutations, so the ratio over distinct arrangements is exact.
  return std::clamp(static_cast<double>(hits) / static_cast<double>(total), 0.0, 1.0);
}

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t k, std::uint64_t repeat) {
  return splitmix64(splitmix64(splitmix64(seed) ^ k) ^ repeat);
}

// Unbiased integer in [0, bound): reject draws from the short final bucket.
std::uint64_t bounded(std::mt19937_64& rng, std::uint64_t bound) {
  const std::uint64_t threshold = (0 - bound) % bound;
  for (;;) {
    const std::uint64_t r = rng();
    if (r >= threshold) return r % bound;
  }
}

// Mean and 95% t half-width. Deviations are taken from the first value so a
// constant sample yields exactly that value and a zero half-width.
std::pair<double, double> mean_ci(const std::vector<double>& v) {
  const double ref = v.front();
  double sum = 0.0;
  for (double x : v) sum += x - ref;
  const double mean_dev = sum / static_cast<double>(v.size());
  if (v.size() < 2) return {ref + mean_dev, std::numeric_limits<double>::quiet_NaN()};
  double ss = 0.0;
  for (double x : v) ss += (x - ref - mean_dev) * (x - ref - mean_dev);
  const double df = static_cast<double>(v.size() - 1);
  const double sd = std::sqrt(ss / df);
  return {ref + mean_dev, student_t_critical(0.95, df) * sd / std::sqrt(static_cast<double>(v.size()))};
}

}  // namespace

std::vector<double> rank_with_ties(const std::vector<double>& values, Direction direction, TiePolicy ties) {
  if (values.size() < 2) throw Error(Errc::precondition, "rank_with_ties: need at least two values");
  for (double v : values) {
    if (std::isnan(v)) throw Error(Errc::precondition, "rank_with_ties: NaN value");
  }
  std::vector<std::size_t> order(values.size());
  std::iota(order.begin(), order.end(), 0);
  auto better = [&](std::size_t a, std::size_t b) {
    return direction == Direction::higher_better ? values[a] > values[b] : values[a] < values[b];
  };
  std::stable_sort(order.begin(), order.end(), better);

  std::vector<double> ranks(values.size());
  std::size_t i = 0;
  while (i < order.size()) {
    std::size_t j = i + 1;
    while (j < order.size() && values[order[j]] == values[order[i]]) ++j;
    for (std::size_t k = i; k < j; ++k) {
      ranks[order[k]] = ties == TiePolicy::average ? 0.5 * static_cast<double>(i + 1 + j) : static_cast<double>(k + 1);
    }
    i = j;
  }
  return ranks;
}

Correlation spearman(const std::vector<double>& x, const std::vector<double>& y, PValueMethod method) {
  if (x.size() != y.size()) throw Error(Errc::precondition, "spearman: inputs differ in length");
  if (x.size() < 3) throw Error(Errc::precondition, "spearman: need at least three pairs");
  const auto rx = rank_with_ties(x, Direction::lower_better);
  const auto ry = rank_with_ties(y, Direction::lower_better);
  Correlation c;
  c.rho = pearson(rx, ry);
  c.p = method == PValueMethod::exact ? permutation_p(rx, ry, c.rho) : t_approximation_p(c.rho, x.size());
  return c;
}

double student_t_cdf(double t, double df) {
  if (!(df > 0.0)) throw Error(Errc::precondition, "student_t_cdf: df must be positive");
  if (std::isinf(t)) return t > 0 ? 1.0 : 0.0;
  if (t == 0.0) return 0.5;
  const double x = df / (df + t * t);
  const double tail = 0.5 * boost::math::ibeta(0.5 * df, 0.5, x);
  return t > 0.0 ? 1.0 - tail : tail;
}

double student_t_critical(double level, double df) {
  if (!(df > 0.0)) throw Error(Errc::precondition, "student_t_critical: df must be positive");
  boost::math::students_t dist(df);
  return boost::math::quantile(dist, 0.5 + 0.5 * level);
}

void validate(const MetricTable& t) {
  const std::size_t n = t.systems.size();
  if (n == 0) throw Error(Errc::validation, "metric table has no systems");
  if (t.hypothesized_rank.size() != n) throw Error(Errc::validation, "hypothesized ranks do not cover every system");
  std::vector<int> sorted = t.hypothesized_rank;
  std::sort(sorted.begin(), sorted.end());
  for (std::size_t i = 0; i < n; ++i) {
    if (sorted[i] != static_cast<int>(i + 1)) {
      throw Error(Errc::validation, "hypothesized ranks must be a permutation of 1.." + std::to_string(n));
    }
  }
  for (const auto& m : t.metrics) {
    if (m.values.size() != n) {
      throw Error(Errc::validation, "metric '" + m.name + "' has " + std::to_string(m.values.size()) +
                                        " values for " + std::to_string(n) + " systems");
    }
  }
}

MetricTable read_metric_table(std::istream& in) {
  MetricTable t;
  std::string line;
  std::size_t line_no = 0;
  bool have_header = false;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    const auto cells = csv::split(line, '\t');
    if (!have_header) {
      if (cells.size() < 2 || cells[0] != "system" || cells[1] != "hyp_rank") {
        throw ParseError("metric table header must start with 'system<TAB>hyp_rank'", line_no);
      }
      for (std::size_t c = 2; c < cells.size(); ++c) {
        const auto colon = cells[c].rfind(':');
        if (colon == std::string::npos) throw ParseError("column '" + cells[c] + "' lacks ':up' or ':down'", line_no);
        const std::string dir = cells[c].substr(colon + 1);
        MetricColumn col;
        col.name = cells[c].substr(0, colon);
        if (dir == "up") {
          col.direction = Direction::higher_better;
        } else if (dir == "down") {
          col.direction = Direction::lower_better;
        } else {
          throw ParseError("column '" + cells[c] + "' has unknown direction '" + dir + "'", line_no);
        }
        t.metrics.push_back(std::move(col));
      }
      have_header = true;
      continue;
    }
    if (cells.size() != t.metrics.size() + 2) {
      throw ParseError("expected " + std::to_string(t.metrics.size() + 2) + " cells, found " +
                           std::to_string(cells.size()),
                       line_no);
    }
    t.systems.push_back(cells[0]);
    try {
      std::size_t used = 0;
      t.hypothesized_rank.push_back(std::stoi(cells[1], &used));
      if (used != cells[1].size()) throw std::invalid_argument(cells[1]);
      for (std::size_t c = 2; c < cells.size(); ++c) {
        const double v = std::stod(cells[c], &used);
        if (used != cells[c].size()) throw std::invalid_argument(cells[c]);
        t.metrics[c - 2].values.push_back(v);
      }
    } catch (const std::logic_error&) {
      throw ParseError("malformed number in row for system '" + cells[0] + "'", line_no);
    }
  }
  if (!have_header) throw ParseError("metric table is empty");
  validate(t);
  return t;
}

MetricTable read_metric_table_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(Errc::not_found, "cannot open metric table " + path);
  return read_metric_table(in);
}

void write_metric_table(std::ostream& out, const MetricTable& t) {
  out << "system\thyp_rank";
  for (const auto& m : t.metrics) out << '\t' << m.name << (m.direction == Direction::higher_better ? ":up" : ":down");
  out << '\n';
  out << std::setprecision(std::numeric_limits<double>::max_digits10);
  for (std::size_t s = 0; s < t.systems.size(); ++s) {
    out << t.systems[s] << '\t' << t.hypothesized_rank[s];
    for (const auto& m : t.metrics) out << '\t' << m.values[s];
    out << '\n';
  }
}

std::vector<SrccResult> srcc_vs_hypothesis(const MetricTable& t, const SrccOptions& opts) {
  validate(t);
  std::vector<double> hyp(t.hypothesized_rank.begin(), t.hypothesized_rank.end());
  std::vector<SrccResult> out;
  for (const auto& m : t.metrics) {
    SrccResult r;
    r.metric = m.name;
    const auto ranks = rank_with_ties(m.values, m.direction, opts.ties);
    if (std::all_of(m.values.begin(), m.values.end(), [&](double v) { return v == m.values.front(); })) {
      r.note = "undefined: all systems tied";
      out.push_back(std::move(r));
      continue;
    }
    const Correlation c = spearman(ranks, hyp, opts.p_method);
    r.rho = c.rho;
    r.p = c.p;
    r.significant = c.p < opts.alpha;
    std::set<double> distinct(m.values.begin(), m.values.end());
    if (distinct.size() < m.values.size()) r.note = "ties present";
    out.push_back(std::move(r));
  }
  return out;
}

PreferenceResult preference_test(const PreferenceSet& s) {
  const auto& v = s.proportions;
  if (v.empty()) throw Error(Errc::validation, "preference_test: no listeners");
  for (double p : v) {
    if (!(p >= 0.0 && p <= 1.0)) throw Error(Errc::validation, "preference_test: proportion outside [0, 1]");
  }
  PreferenceResult r;
  r.n = v.size();
  const double n = static_cast<double>(v.size());
  const double mean = std::accumulate(v.begin(), v.end(), 0.0) / n;
  r.mean_pct = 100.0 * mean;
  if (v.size() < 2) return r;

  if (std::all_of(v.begin(), v.end(), [&](double p) { return p == v.front(); })) {
    const double m = v.front();
    r.ci95_halfwidth_pct = 0.0;
    r.p_one_sided = m > 0.5 ? 0.0 : (m < 0.5 ? 1.0 : 0.5);
    return r;
  }
  double ss = 0.0;
  for (double p : v) ss += (p - mean) * (p - mean);
  const double se = std::sqrt(ss / (n - 1.0)) / std::sqrt(n);
  r.ci95_halfwidth_pct = 100.0 * student_t_critical(0.95, n - 1.0) * se;
  r.p_one_sided = std::clamp(1.0 - student_t_cdf((mean - 0.5) / se, n - 1.0), 0.0, 1.0);
  return r;
}

std::vector<CurvePoint> pvalue_vs_subset_size(const PreferenceSet& s, const SubsetCurveOptions& opts) {
  const std::size_t n = s.proportions.size();
  if (n < 3) throw Error(Errc::precondition, "pvalue_vs_subset_size: need at least three listeners");
  if (opts.repeats == 0) throw Error(Errc::precondition, "pvalue_vs_subset_size: repeats must be positive");
  preference_test(s);

  std::vector<CurvePoint> curve(n - 1);
  auto compute = [&](std::size_t k) {
    std::vector<double> pvals(opts.repeats);
    std::vector<std::size_t> idx(n);
    PreferenceSet sub;
    sub.proportions.resize(k);
    for (std::size_t r = 0; r < opts.repeats; ++r) {
      std::mt19937_64 rng(derive_seed(opts.seed, k, r));
      std::iota(idx.begin(), idx.end(), 0);
      for (std::size_t i = 0; i < k; ++i) {
        const std::size_t j = i + static_cast<std::size_t>(bounded(rng, n - i));
        std::swap(idx[i], idx[j]);
      }
      std::sort(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(k));
      for (std::size_t i = 0; i < k; ++i) sub.proportions[i] = s.proportions[idx[i]];
      pvals[r] = *preference_test(sub).p_one_sided;
    }
    const auto [mean, ci] = mean_ci(pvals);
    curve[k - 2] = {k, mean, ci};
  };

  const std::size_t threads = std::max<std::size_t>(1, std::min(opts.threads, n - 1));
  if (threads == 1) {
    for (std::size_t k = 2; k <= n; ++k) compute(k);
    return curve;
  }
  std::vector<std::thread> pool;
  for (std::size_t t = 0; t < threads; ++t) {
    pool.emplace_back([&, t] {
      for (std::size_t k = 2 + t; k <= n; k += threads) compute(k);
    });
  }
  for (auto& th : pool) th.join();
  return curve;
}

void write_curve_csv(std::ostream& out, const std::vector<CurvePoint>& curve) {
  out << "k,mean_p,ci95\n";
  out << std::setprecision(std::numeric_limits<double>::max_digits10);
  for (const auto& c : curve) out << c.k << ',' << c.mean_p << ',' << c.ci95 << '\n';
}

}  // namespace accent_eval::stats
