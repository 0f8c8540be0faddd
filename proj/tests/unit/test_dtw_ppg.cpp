#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <random>
#include <sstream>

#include "accent_eval/dtw.hpp"
#include "accent_eval/error.hpp"
#include "accent_eval/ppg.hpp"
#include "oracles.hpp"

using namespace accent_eval;
using Catch::Matchers::WithinAbs;

TEST_CASE("DTW matches exhaustive path enumeration") {
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int rep = 0; rep < 60; ++rep) {
    const std::size_t n = 1 + rep % 5;
    const std::size_t m = 1 + (rep / 5) % 5;
    std::vector<std::vector<double>> c(n, std::vector<double>(m));
    for (auto& row : c) {
      for (auto& v : row) v = u(rng);
    }
    const auto expected = oracle::dtw_enumerate(c);
    const auto got = dtw::align(n, m, [&](std::size_t i, std::size_t j) { return c[i][j]; });
    CHECK_THAT(got.total_cost, WithinAbs(expected.best_sum, 1e-12));
    CHECK(got.path.size() == expected.best_steps);
    CHECK_THAT(got.mean_cost, WithinAbs(expected.mean, 1e-12));
  }
}

TEST_CASE("DTW paths are monotone and span both sequences") {
  const auto r = dtw::align(4, 7, [](std::size_t i, std::size_t j) { return std::abs(2.0 * i - j); });
  REQUIRE(r.path.front() == std::pair<std::size_t, std::size_t>{0, 0});
  REQUIRE(r.path.back() == std::pair<std::size_t, std::size_t>{3, 6});
  for (std::size_t k = 1; k < r.path.size(); ++k) {
    const auto di = r.path[k].first - r.path[k - 1].first;
    const auto dj = r.path[k].second - r.path[k - 1].second;
    CHECK(di <= 1);
    CHECK(dj <= 1);
    CHECK(di + dj >= 1);
  }
  REQUIRE(r.step_costs.size() == r.path.size());
}

TEST_CASE("among equal sums the shorter path wins") {
  // All-zero costs: the diagonal (3 steps) beats every detour.
  const auto r = dtw::align(3, 3, [](std::size_t, std::size_t) { return 0.0; });
  CHECK(r.path.size() == 3);
}

TEST_CASE("averaging modes") {
  auto cost = [](std::size_t i, std::size_t j) { return 1.0 + static_cast<double>(i + j); };
  const auto p = dtw::align(2, 4, cost, dtw::Averaging::path_length);
  const auto l = dtw::align(2, 4, cost, dtw::Averaging::longer_sequence);
  const auto t = dtw::align(2, 4, cost, dtw::Averaging::total);
  CHECK(p.total_cost == t.total_cost);
  CHECK(t.mean_cost == t.total_cost);
  CHECK(l.mean_cost == t.total_cost / 4.0);
  CHECK(p.mean_cost == t.total_cost / static_cast<double>(p.path.size()));
}

TEST_CASE("DTW on an empty sequence throws") {
  CHECK_THROWS_AS(dtw::align(0, 3, [](std::size_t, std::size_t) { return 0.0; }), Error);
}

TEST_CASE("JS distance matches the hand-computed value") {
  const std::vector<double> p{1.0, 0.0};
  const std::vector<double> q{0.5, 0.5};
  // 0.5*log2(4/3) + 0.25*log2(2/3) + 0.25*log2(2) with m = (0.75, 0.25)
  const double jsd = 0.5 * (std::log2(1.0 / 0.75)) + 0.5 * (0.5 * std::log2(0.5 / 0.75) + 0.5 * std::log2(0.5 / 0.25));
  CHECK_THAT(jsd, WithinAbs(0.311278, 1e-6));
  CHECK_THAT(ppg::js_cost(p, q), WithinAbs(std::sqrt(jsd), 1e-12));
  CHECK_THAT(ppg::js_cost(p, q), WithinAbs(0.557923, 1e-6));
  CHECK(ppg::js_cost(p, p) == 0.0);
  CHECK_THAT(ppg::js_cost(std::vector<double>{1, 0}, std::vector<double>{0, 1}), WithinAbs(1.0, 1e-15));
}

TEST_CASE("cosine cost") {
  CHECK_THAT(ppg::cosine_cost(std::vector<double>{1, 0}, std::vector<double>{0, 1}), WithinAbs(1.0, 1e-15));
  CHECK_THAT(ppg::cosine_cost(std::vector<double>{0.2, 0.8}, std::vector<double>{0.2, 0.8}), WithinAbs(0.0, 1e-15));
  CHECK_THAT(ppg::cosine_cost(std::vector<double>{1, 1}, std::vector<double>{1, 0}),
             WithinAbs(1.0 - 1.0 / std::sqrt(2.0), 1e-15));
  CHECK_THROWS_AS(ppg::cosine_cost(std::vector<double>{0, 0}, std::vector<double>{1, 0}), Error);
}

TEST_CASE("PPG similarity properties on random inputs") {
  std::mt19937_64 rng(42);
  for (int rep = 0; rep < 100; ++rep) {
    std::vector<std::vector<double>> ra;
    std::vector<std::vector<double>> rb;
    for (int i = 0; i < 1 + rep % 6; ++i) ra.push_back(oracle::random_distribution(rng, 4, 0.25));
    for (int i = 0; i < 1 + rep % 4; ++i) rb.push_back(oracle::random_distribution(rng, 4, 0.25));
    const std::vector<std::string> labels{"a", "b", "c", "d"};
    const auto a = ppg::make_posteriorgram(ra, labels, 0.01);
    const auto b = ppg::make_posteriorgram(rb, labels, 0.01);
    const auto self = ppg::ppg_similarity(a, a);
    CHECK(self.cossim == 1.0);
    CHECK(self.js == 0.0);
    const auto ab = ppg::ppg_similarity(a, b);
    const auto ba = ppg::ppg_similarity(b, a);
    CHECK_THAT(ab.cossim, WithinAbs(ba.cossim, 1e-12));
    CHECK_THAT(ab.js, WithinAbs(ba.js, 1e-12));
    CHECK(ab.cossim >= 0.0);
    CHECK(ab.cossim <= 1.0);
    CHECK(ab.js >= 0.0);
    CHECK(ab.js <= 1.0);
  }
}

TEST_CASE("PPG loader renormalizes and validates") {
  std::istringstream ok("#hop=0.02\nAA,IY,sil\n0.5,0.3,0.2\n0.51,0.5,0.0\n");
  const auto p = ppg::load_ppg(ok);
  CHECK(p.hop == 0.02);
  CHECK(p.num_classes() == 3);
  CHECK(p.num_frames() == 2);
  CHECK_THAT(p.rows[1][0] + p.rows[1][1], WithinAbs(1.0, 1e-15));

  std::ostringstream out;
  ppg::write_ppg(out, p);
  std::istringstream again(out.str());
  const auto q = ppg::load_ppg(again);
  CHECK(q.class_labels == p.class_labels);
  for (std::size_t i = 0; i < p.rows.size(); ++i) {
    for (std::size_t k = 0; k < 3; ++k) CHECK_THAT(q.rows[i][k], WithinAbs(p.rows[i][k], 1e-15));
  }

  auto fails = [](const std::string& text) {
    std::istringstream in(text);
    try {
      ppg::load_ppg(in);
    } catch (const Error&) {
      return true;
    }
    return false;
  };
  CHECK(fails("#hop=0.01\nAA,IY\n0.5,0.2\n"));          // row sum too far from one
  CHECK(fails("#hop=0.01\nAA,IY\n1.2,-0.2\n"));         // negative entry
  CHECK(fails("#hop=0.01\nAA,IY\n0.5,0.5,0.0\n"));      // column count
  CHECK(fails("#hop=0.01\nAA,IY\n"));                   // no frames
  CHECK(fails("#hop=0.01\nAA,IY\n0.5,x\n"));            // not a number
}

TEST_CASE("PPG comparison requires matching class labels") {
  const auto a = ppg::make_posteriorgram({{0.5, 0.5}}, {"AA", "IY"}, 0.01);
  const auto b = ppg::make_posteriorgram({{0.5, 0.5}}, {"AA", "UW"}, 0.01);
  try {
    ppg::ppg_similarity(a, b);
    FAIL("expected incompatible inputs");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::incompatible_inputs);
  }
}
