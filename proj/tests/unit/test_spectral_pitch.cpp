#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>

#include "accent_eval/error.hpp"
#include "accent_eval/pitch.hpp"
#include "accent_eval/spectral.hpp"
#include "oracles.hpp"

using namespace accent_eval;
using Catch::Matchers::WithinAbs;

namespace {

audio::Waveform noisy_vowel(double scale = 1.0) {
  audio::Waveform w{oracle::two_resonator_vowel(600.0, 1400.0, 16000, 0.5), 16000};
  std::mt19937_64 rng(8);
  std::normal_distribution<double> n(0.0, 0.01);
  for (auto& s : w.samples) s = scale * (s + n(rng));
  return w;
}

double median_voiced(const pitch::F0Track& t) {
  std::vector<double> v;
  for (std::size_t i = 0; i < t.size(); ++i) {
    if (t.voiced[i]) v.push_back(t.f0[i]);
  }
  if (v.empty()) return 0.0;
  std::sort(v.begin(), v.end());
  return v[v.size() / 2];
}

}  // namespace

TEST_CASE("MCD scale constant") {
  CHECK_THAT(spectral::mcd_scale(), WithinAbs(10.0 * std::sqrt(2.0) / std::log(10.0), 1e-15));
  CHECK_THAT(spectral::mcd_scale(), WithinAbs(6.1419, 5e-5));
}

TEST_CASE("mel cepstrum has K+1 coefficients on a 10 ms hop") {
  const auto c = spectral::mel_cepstrum(noisy_vowel());
  CHECK(c.hop == 0.01);
  CHECK(c.size() == audio::frame_count(8000, 400, 0.01, 16000));
  CHECK(c.frames.front().size() == 14);
  CHECK_FALSE(c.config_fingerprint.empty());
}

TEST_CASE("MCD identity, c0 exclusion and uniform c1 shift") {
  const auto a = spectral::mel_cepstrum(noisy_vowel());
  CHECK(spectral::mcd(a, a).mcd_db == 0.0);

  auto louder = a;
  for (auto& f : louder.frames) f[0] += 3.0;
  CHECK(spectral::mcd(a, louder).mcd_db == 0.0);

  const auto quiet = spectral::mel_cepstrum(noisy_vowel(0.2));
  CHECK(spectral::mcd(a, quiet).mcd_db < 1e-6);
}

TEST_CASE("MCD of a uniform c1 shift is the scale times the shift") {
  std::mt19937_64 rng(4);
  std::normal_distribution<double> g(0.0, 4.0);
  spectral::CepstrumTrack a;
  a.hop = 0.01;
  a.config_fingerprint = "x";
  for (int i = 0; i < 25; ++i) {
    std::vector<double> f(14);
    for (auto& v : f) v = g(rng);
    a.frames.push_back(f);
  }
  for (double d : {0.1, 0.7, 1.5}) {
    auto b = a;
    for (auto& f : b.frames) f[1] -= d;
    const auto r = spectral::mcd(a, b);
    CHECK_THAT(r.mcd_db, WithinAbs(spectral::mcd_scale() * d, 1e-9));
    CHECK(r.alignment.path.size() == 25);
  }
}

TEST_CASE("MCD rejects mismatched configurations and empty tracks") {
  const auto a = spectral::mel_cepstrum(noisy_vowel());
  spectral::MelCepstrumConfig cfg;
  cfg.n_mels = 30;
  const auto b = spectral::mel_cepstrum(noisy_vowel(), cfg);
  CHECK(a.config_fingerprint != b.config_fingerprint);
  CHECK_THROWS_AS(spectral::mcd(a, b), Error);
  spectral::CepstrumTrack empty = a;
  empty.frames.clear();
  CHECK_THROWS_AS(spectral::mcd(a, empty), Error);
  cfg.order = 30;
  CHECK_THROWS_AS(spectral::mel_cepstrum(noisy_vowel(), cfg), Error);
}

TEST_CASE("cepstrum cache round trip") {
  const auto a = spectral::mel_cepstrum(noisy_vowel());
  std::stringstream ss;
  spectral::write_cepstrum(ss, a);
  const auto b = spectral::read_cepstrum(ss);
  CHECK(b.config_fingerprint == a.config_fingerprint);
  CHECK(b.hop == a.hop);
  REQUIRE(b.frames.size() == a.frames.size());
  CHECK(b.frames == a.frames);
}

TEST_CASE("sawtooth pitch within 1 Hz") {
  for (double f0 : {110.0, 220.0, 330.0}) {
    const auto t = pitch::estimate_f0({oracle::sawtooth(f0, 16000, 0.8), 16000});
    CHECK_THAT(median_voiced(t), WithinAbs(f0, 1.0));
  }
}

TEST_CASE("F0 frames share the cepstral grid") {
  const auto w = noisy_vowel();
  CHECK(pitch::estimate_f0(w).size() == spectral::mel_cepstrum(w).size());
}

TEST_CASE("silence is unvoiced") {
  const auto t = pitch::estimate_f0({std::vector<double>(8000, 0.0), 16000});
  REQUIRE(t.size() > 0);
  for (std::size_t i = 0; i < t.size(); ++i) {
    CHECK_FALSE(t.voiced[i]);
    CHECK(t.f0[i] == 0.0);
  }
}

TEST_CASE("low sample rates are a precondition error") {
  CHECK_THROWS_AS(pitch::estimate_f0({std::vector<double>(4000, 0.0), 4000}), Error);
}

TEST_CASE("identical varying tracks give zero error and unit correlation") {
  std::vector<double> s = oracle::sawtooth(150.0, 16000, 0.3);
  for (double f : {200.0, 250.0}) {
    const auto part = oracle::sawtooth(f, 16000, 0.3);
    s.insert(s.end(), part.begin(), part.end());
  }
  const auto t = pitch::estimate_f0({s, 16000});
  const auto m = pitch::f0_metrics(t, t, pitch::identity_path(t.size()));
  REQUIRE(m.f0_rmse);
  CHECK(*m.f0_rmse == 0.0);
  CHECK(m.per_rmse == 0.0);
  REQUIRE(m.f0_pcc);
  CHECK_THAT(*m.f0_pcc, WithinAbs(1.0, 1e-12));
}

TEST_CASE("F0 correlation is undefined for a flat track") {
  const auto t = pitch::estimate_f0({oracle::sawtooth(200.0, 16000, 0.5), 16000});
  auto flat = t;
  for (std::size_t i = 0; i < flat.size(); ++i) {
    if (flat.voiced[i]) flat.f0[i] = 200.0;
  }
  const auto m = pitch::f0_metrics(flat, flat, pitch::identity_path(flat.size()));
  CHECK(m.f0_rmse);
  CHECK_FALSE(m.f0_pcc);
  CHECK_THROWS_AS(pitch::f0_metrics(t, t, {}), Error);
  CHECK_THROWS_AS(pitch::f0_metrics(t, t, {{t.size(), 0}}), Error);
}

TEST_CASE("F0 cache round trip") {
  const auto t = pitch::estimate_f0({oracle::sawtooth(180.0, 16000, 0.3), 16000});
  std::stringstream ss;
  pitch::write_f0(ss, t);
  const auto back = pitch::read_f0(ss);
  CHECK(back.f0 == t.f0);
  CHECK(back.periodicity == t.periodicity);
  CHECK(back.voiced == t.voiced);
  CHECK(back.hop == t.hop);
}
