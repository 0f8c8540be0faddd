#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <numbers>

#include "accent_eval/error.hpp"
#include "accent_eval/formant.hpp"
#include "oracles.hpp"

using namespace accent_eval;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;
using Tokens = std::vector<formant::FormantMeasurement>;

namespace {

formant::FormantMeasurement meas(const std::string& label, double f1, double f2, std::size_t idx = 0) {
  formant::FormantMeasurement m;
  m.token = {label, 0.1 * static_cast<double>(idx), idx};
  m.f1 = f1;
  m.f2 = f2;
  return m;
}

}  // namespace

TEST_CASE("Burg recovers AR(2) coefficients") {
  const auto x = oracle::ar2(1.3, -0.6, 20000, 5);
  const auto a = formant::lpc_burg(x, 2);
  REQUIRE(a.size() == 2);
  CHECK_THAT(a[0], WithinAbs(1.3, 0.02));
  CHECK_THAT(a[1], WithinAbs(-0.6, 0.02));
}

TEST_CASE("Burg rejects silent and short frames") {
  CHECK_THROWS_AS(formant::lpc_burg(std::vector<double>(64, 0.0), 4), Error);
  CHECK_THROWS_AS(formant::lpc_burg(std::vector<double>{1.0, 2.0}, 4), Error);
}

TEST_CASE("known poles map to their frequencies and bandwidths") {
  const double sr = 10000.0;
  // Pole pair at 700 Hz / 90 Hz bandwidth and 1800 Hz / 120 Hz.
  auto pole = [&](double f, double bw) {
    const double r = std::exp(-std::numbers::pi * bw / sr);
    return std::pair{2.0 * r * std::cos(2.0 * std::numbers::pi * f / sr), -r * r};
  };
  const auto [p1, p2] = pole(700.0, 90.0);
  const auto [q1, q2] = pole(1800.0, 120.0);
  // (1 - p1 z^-1 - p2 z^-2)(1 - q1 z^-1 - q2 z^-2) expanded as 1 - sum a_k z^-k.
  const std::vector<double> a{p1 + q1, p2 + q2 - p1 * q1, -(p1 * q2 + p2 * q1), -p2 * q2};
  const auto res = formant::formants_from_lpc(a, sr);
  REQUIRE(res.size() == 2);
  CHECK_THAT(res[0].frequency, WithinAbs(700.0, 1e-6));
  CHECK_THAT(res[0].bandwidth, WithinAbs(90.0, 1e-6));
  CHECK_THAT(res[1].frequency, WithinAbs(1800.0, 1e-6));
  CHECK_THAT(res[1].bandwidth, WithinAbs(120.0, 1e-6));
}

TEST_CASE("synthetic vowels are measured within a few percent") {
  for (auto [f1, f2] : {std::pair{300.0, 2300.0}, {700.0, 1200.0}, {500.0, 1500.0}}) {
    audio::Waveform w{oracle::two_resonator_vowel(f1, f2, 16000, 0.3), 16000};
    const auto est = formant::extract_f1f2(w, 0.15, 5000.0);
    CHECK_THAT(est.f1, WithinRel(f1, 0.05));
    CHECK_THAT(est.f2, WithinRel(f2, 0.05));
  }
}

TEST_CASE("ceiling outside the supported range is a precondition error") {
  audio::Waveform w{oracle::two_resonator_vowel(500, 1500, 16000, 0.3), 16000};
  CHECK_THROWS_AS(formant::extract_f1f2(w, 0.15, 3000.0), Error);
  CHECK_THROWS_AS(formant::extract_f1f2(w, 0.15, 7500.0), Error);
}

TEST_CASE("measure_tokens counts failures instead of aborting") {
  std::vector<double> s = oracle::two_resonator_vowel(500, 1500, 16000, 0.3);
  s.resize(16000, 0.0);  // trailing 0.7 s of silence
  audio::Waveform w{s, 16000};
  std::vector<align::VowelToken> toks{{"AA", 0.15, 0}, {"IY", 0.7, 1}};
  const auto r = formant::measure_tokens(w, toks, 5000.0);
  CHECK(r.measurements.size() == 1);
  CHECK(r.failed == 1);
  CHECK(r.tokens.size() == 2);
}

TEST_CASE("vf_rmse pools F1 and F2 differences") {
  std::vector<formant::MeasurementPair> pairs{{meas("AA", 700, 1200), meas("AA", 710, 1180)},
                                              {meas("IY", 300, 2300), meas("IY", 290, 2300)}};
  const auto r = formant::vf_rmse(pairs);
  CHECK(r.pair_count == 2);
  CHECK_THAT(r.pooled, WithinAbs(std::sqrt((100.0 + 400.0 + 100.0 + 0.0) / 4.0), 1e-12));
  CHECK_THAT(r.f1, WithinAbs(10.0, 1e-12));
  CHECK_THAT(r.f2, WithinAbs(std::sqrt(200.0), 1e-12));
  CHECK_THROWS_AS(formant::vf_rmse({}), Error);
  CHECK_THROWS_AS(formant::vf_rmse({{meas("AA", 1, 1), meas("IY", 1, 1)}}), Error);
}

TEST_CASE("vf_rmse is zero on identical measurements and symmetric") {
  std::vector<formant::MeasurementPair> same{{meas("AA", 700, 1200), meas("AA", 700, 1200)}};
  CHECK(formant::vf_rmse(same).pooled == 0.0);
  std::vector<formant::MeasurementPair> ab{{meas("AA", 700, 1200), meas("AA", 650, 1300)}};
  std::vector<formant::MeasurementPair> ba{{ab[0].second, ab[0].first}};
  CHECK(formant::vf_rmse(ab).pooled == formant::vf_rmse(ba).pooled);
}

TEST_CASE("pair_measurements aligns labels and drops unmeasured tokens") {
  formant::MeasureResult a;
  a.tokens = {{"AA", 0.1, 0}, {"IY", 0.2, 1}, {"UW", 0.3, 2}};
  a.measurements = {meas("AA", 700, 1200, 0), meas("UW", 350, 900, 2)};
  formant::MeasureResult b;
  b.tokens = {{"AA", 0.1, 0}, {"IY", 0.2, 1}, {"UW", 0.3, 2}};
  b.measurements = {meas("AA", 690, 1250, 0), meas("IY", 300, 2300, 1), meas("UW", 340, 950, 2)};
  const auto pairs = formant::pair_measurements(a, b);
  REQUIRE(pairs.size() == 2);
  CHECK(pairs[0].first.token.base_label == "AA");
  CHECK(pairs[1].second.f1 == 340);
}

TEST_CASE("Lobanov normalization uses the sample standard deviation") {
  // Two tokens: z = (x - mean) / sd with the n-1 denominator gives +-1/sqrt(2).
  const auto s = formant::vowel_space_summary(Tokens{meas("AA", 400, 1000, 0), meas("IY", 600, 2000, 1)});
  REQUIRE(s.vowels.size() == 2);
  const double z = 1.0 / std::sqrt(2.0);
  CHECK_THAT(s.vowels.at("AA").mean[0], WithinAbs(-z, 1e-12));
  CHECK_THAT(s.vowels.at("AA").mean[1], WithinAbs(-z, 1e-12));
  CHECK_THAT(s.vowels.at("IY").mean[0], WithinAbs(z, 1e-12));
  CHECK(s.vowels.at("IY").n == 1);
  CHECK(s.vowels.at("IY").cov[0][0] == 0.0);
}

TEST_CASE("vowel-space summary errors and covariance") {
  CHECK_THROWS_AS(formant::vowel_space_summary(Tokens{meas("AA", 400, 1000)}), Error);
  CHECK_THROWS_AS(formant::vowel_space_summary(Tokens{meas("AA", 400, 1000), meas("IY", 400, 1000)}), Error);
  const auto s = formant::vowel_space_summary(
      {meas("AA", 700, 1100, 0), meas("AA", 720, 1150, 1), meas("AA", 680, 1120, 2), meas("IY", 300, 2300, 3)});
  const auto& aa = s.vowels.at("AA");
  CHECK(aa.n == 3);
  CHECK(aa.cov[0][1] == aa.cov[1][0]);
  CHECK(aa.cov[0][0] > 0.0);
}

TEST_CASE("vowel-space JSON round trip") {
  const auto s = formant::vowel_space_summary(
      {meas("AA", 700, 1100, 0), meas("AA", 720, 1150, 1), meas("IY", 300, 2300, 2)});
  const auto back = formant::vowel_space_from_json(formant::to_json(s));
  REQUIRE(back.vowels.size() == s.vowels.size());
  for (const auto& [label, v] : s.vowels) {
    const auto& w = back.vowels.at(label);
    CHECK(w.n == v.n);
    CHECK(w.mean[0] == v.mean[0]);
    CHECK(w.cov[1][1] == v.cov[1][1]);
  }
}
