#include "accent_eval/formant.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <numbers>

#include <Eigen/Eigenvalues>
#include <spdlog/spdlog.h>

#include "accent_eval/error.hpp"

namespace accent_eval::formant {

namespace {

constexpr double kMinFormantHz = 90.0;
constexpr double kMaxBandwidthHz = 400.0;

double sinc(double x) {
  if (std::abs(x) < 1e-12) return 1.0;
  const double px = std::numbers::pi * x;
  return std::sin(px) / px;
}

// Band-limited evaluation of the signal at arbitrary times (Hann-windowed
// sinc, 20 zero crossings per side). Samples outside the signal are zero.
class SincInterpolator {
 public:
  SincInterpolator(const audio::Waveform& w, double target_rate)
      : w_(w), cutoff_(0.5 * std::min<double>(w.sample_rate, target_rate)) {
    half_width_s_ = 20.0 / (2.0 * cutoff_);
  }

  double at(double t) const {
    const double sr = w_.sample_rate;
    const auto lo = static_cast<long long>(std::ceil((t - half_width_s_) * sr));
    const auto hi = static_cast<long long>(std::floor((t + half_width_s_) * sr));
    const auto n = static_cast<long long>(w_.samples.size());
    double acc = 0.0;
    for (long long k = std::max(0LL, lo); k <= std::min(n - 1, hi); ++k) {
      const double tau = t - static_cast<double>(k) / sr;
      const double win = 0.5 + 0.5 * std::cos(std::numbers::pi * tau / half_width_s_);
      acc += w_.samples[static_cast<std::size_t>(k)] * (2.0 * cutoff_ / sr) * sinc(2.0 * cutoff_ * tau) * win;
    }
    return acc;
  }

 private:
  const audio::Waveform& w_;
  double cutoff_;
  double half_width_s_;
};

}  // namespace

std::vector<double> lpc_burg(std::span<const double> frame, std::size_t order) {
  const std::size_t n = frame.size();
  if (order == 0 || n <= order) throw Error(Errc::precondition, "lpc_burg: frame must be longer than the order");

  std::vector<double> f(frame.begin(), frame.end());
  std::vector<double> b(frame.begin(), frame.end());
  std::vector<double> a(order + 1, 0.0);
  a[0] = 1.0;

  double dk = 0.0;
  for (double x : frame) dk += 2.0 * x * x;
  dk -= f[0] * f[0] + b[n - 1] * b[n - 1];
  if (!(dk > 0.0)) throw Error(Errc::degenerate_input, "lpc_burg: frame has no energy");

  for (std::size_t k = 0; k < order; ++k) {
    double num = 0.0;
    for (std::size_t i = 0; i + k + 1 < n; ++i) num += f[i + k + 1] * b[i];
    const double mu = dk > 0.0 ? -2.0 * num / dk : 0.0;

    for (std::size_t i = 0; i <= (k + 1) / 2; ++i) {
      const double t1 = a[i] + mu * a[k + 1 - i];
      const double t2 = a[k + 1 - i] + mu * a[i];
      a[i] = t1;
      a[k + 1 - i] = t2;
    }
    for (std::size_t i = 0; i + k + 1 < n; ++i) {
      const double t1 = f[i + k + 1] + mu * b[i];
      const double t2 = b[i] + mu * f[i + k + 1];
      f[i + k + 1] = t1;
      b[i] = t2;
    }
    dk = (1.0 - mu * mu) * dk - f[k + 1] * f[k + 1] - b[n - k - 2] * b[n - k - 2];
  }

  std::vector<double> coeffs(order);
  for (std::size_t k = 0; k < order; ++k) coeffs[k] = -a[k + 1];
  return coeffs;
}

std::vector<Resonance> formants_from_lpc(std::span<const double> coeffs, double sample_rate) {
  const auto p = static_cast<Eigen::Index>(coeffs.size());
  std::vector<Resonance> out;
  if (p == 0) return out;

  // Companion matrix of z^p - a1 z^(p-1) - ... - ap.
  Eigen::MatrixXd companion = Eigen::MatrixXd::Zero(p, p);
  for (Eigen::Index k = 0; k < p; ++k) companion(0, k) = coeffs[static_cast<std::size_t>(k)];
  for (Eigen::Index k = 1; k < p; ++k) companion(k, k - 1) = 1.0;
  Eigen::EigenSolver<Eigen::MatrixXd> solver(companion, false);

  for (const std::complex<double>& r : solver.eigenvalues()) {
    if (r.imag() <= 1e-12) continue;
    const double freq = std::arg(r) * sample_rate / (2.0 * std::numbers::pi);
    const double bw = -std::log(std::abs(r)) * sample_rate / std::numbers::pi;
    if (freq < kMinFormantHz || bw > kMaxBandwidthHz) continue;
    out.push_back({freq, bw});
  }
  std::sort(out.begin(), out.end(), [](const Resonance& x, const Resonance& y) { return x.frequency < y.frequency; });
  return out;
}

F1F2 extract_f1f2(const audio::Waveform& w, double midpoint, double ceiling, const AnalysisSettings& settings) {
  if (w.sample_rate <= 0 || w.samples.empty()) throw Error(Errc::precondition, "extract_f1f2: empty waveform");
  if (!(midpoint >= 0.0 && midpoint <= w.duration())) {
    throw Error(Errc::precondition, "extract_f1f2: midpoint " + std::to_string(midpoint) + " s outside audio");
  }
  if (!(ceiling >= 3500.0 && ceiling <= 7000.0)) {
    throw Error(Errc::precondition, "extract_f1f2: ceiling must lie in [3500, 7000] Hz");
  }

  const double rate = 2.0 * ceiling;
  const auto len = static_cast<std::size_t>(std::llround(settings.window_s * rate));
  if (len <= settings.lpc_order + 1) throw Error(Errc::precondition, "extract_f1f2: analysis window too short");

  // One extra leading sample feeds the pre-emphasis filter.
  SincInterpolator interp(w, rate);
  const double first = midpoint - 0.5 * static_cast<double>(len - 1) / rate;
  std::vector<double> raw(len + 1);
  for (std::size_t k = 0; k <= len; ++k) raw[k] = interp.at(first + (static_cast<double>(k) - 1.0) / rate);

  const auto window = audio::make_window(audio::Window::hann, len);
  std::vector<double> frame(len);
  for (std::size_t k = 0; k < len; ++k) frame[k] = (raw[k + 1] - settings.pre_emphasis * raw[k]) * window[k];

  std::vector<Resonance> candidates;
  try {
    candidates = formants_from_lpc(lpc_burg(frame, settings.lpc_order), rate);
  } catch (const Error& e) {
    throw Error(Errc::formant_extraction_failed, std::string("extract_f1f2: ") + e.what());
  }
  if (candidates.size() < 2) {
    throw Error(Errc::formant_extraction_failed,
                "extract_f1f2: fewer than two formant candidates at " + std::to_string(midpoint) + " s");
  }
  return {candidates[0].frequency, candidates[1].frequency, candidates[0].bandwidth, candidates[1].bandwidth};
}

MeasureResult measure_tokens(const audio::Waveform& w, const std::vector<align::VowelToken>& tokens, double ceiling,
                             const AnalysisSettings& settings) {
  MeasureResult result;
  result.tokens = tokens;
  for (const auto& tok : tokens) {
    try {
      F1F2 f = extract_f1f2(w, tok.midpoint, ceiling, settings);
      result.measurements.push_back({tok, f.f1, f.f2, f.b1, f.b2, ceiling});
    } catch (const Error& e) {
      if (e.code() != Errc::formant_extraction_failed && e.code() != Errc::precondition &&
          e.code() != Errc::degenerate_input) {
        throw;
      }
      spdlog::debug("skipping {} token #{}: {}", tok.base_label, tok.source_index, e.what());
      ++result.failed;
    }
  }
  return result;
}

std::vector<MeasurementPair> pair_measurements(const MeasureResult& a, const MeasureResult& b) {
  auto index = [](const MeasureResult& r) {
    std::map<std::size_t, const FormantMeasurement*> by_ordinal;
    for (const auto& m : r.measurements) by_ordinal[m.token.source_index] = &m;
    return by_ordinal;
  };
  const auto ia = index(a);
  const auto ib = index(b);

  std::vector<MeasurementPair> out;
  for (const auto& [x, y] : align::pair_vowel_tokens(a.tokens, b.tokens)) {
    auto mx = ia.find(x.source_index);
    auto my = ib.find(y.source_index);
    if (mx == ia.end() || my == ib.end()) continue;
    out.emplace_back(*mx->second, *my->second);
  }
  return out;
}

VfRmse vf_rmse(const std::vector<MeasurementPair>& pairs) {
  if (pairs.empty()) throw Error(Errc::undefined_metric, "vf_rmse: no vowel pairs");
  double s1 = 0.0;
  double s2 = 0.0;
  for (const auto& [x, y] : pairs) {
    if (x.token.base_label != y.token.base_label) {
      throw Error(Errc::precondition, "vf_rmse: pair labels differ (" + x.token.base_label + " vs " +
                                          y.token.base_label + ")");
    }
    s1 += (x.f1 - y.f1) * (x.f1 - y.f1);
    s2 += (x.f2 - y.f2) * (x.f2 - y.f2);
  }
  const auto n = static_cast<double>(pairs.size());
  return {std::sqrt((s1 + s2) / (2.0 * n)), std::sqrt(s1 / n), std::sqrt(s2 / n), pairs.size()};
}

VowelSpaceSummary vowel_space_summary(const std::vector<FormantMeasurement>& tokens) {
  if (tokens.size() < 2) throw Error(Errc::precondition, "vowel_space_summary: need at least two tokens per speaker");
  const auto n = static_cast<double>(tokens.size());
  double mean[2] = {0.0, 0.0};
  for (const auto& t : tokens) {
    mean[0] += t.f1;
    mean[1] += t.f2;
  }
  mean[0] /= n;
  mean[1] /= n;
  double var[2] = {0.0, 0.0};
  for (const auto& t : tokens) {
    var[0] += (t.f1 - mean[0]) * (t.f1 - mean[0]);
    var[1] += (t.f2 - mean[1]) * (t.f2 - mean[1]);
  }
  const double sd[2] = {std::sqrt(var[0] / (n - 1.0)), std::sqrt(var[1] / (n - 1.0))};
  if (!(sd[0] > 0.0) || !(sd[1] > 0.0)) {
    throw Error(Errc::degenerate_normalization, "vowel_space_summary: zero formant variance for speaker");
  }

  std::map<std::string, std::vector<std::array<double, 2>>> by_vowel;
  for (const auto& t : tokens) {
    by_vowel[t.token.base_label].push_back({(t.f1 - mean[0]) / sd[0], (t.f2 - mean[1]) / sd[1]});
  }

  VowelSpaceSummary out;
  for (const auto& [label, zs] : by_vowel) {
    VowelStats s;
    s.n = zs.size();
    const auto m = static_cast<double>(s.n);
    for (const auto& z : zs) {
      s.mean[0] += z[0];
      s.mean[1] += z[1];
    }
    s.mean[0] /= m;
    s.mean[1] /= m;
    if (s.n > 1) {
      for (const auto& z : zs) {
        for (int r = 0; r < 2; ++r) {
          for (int c = 0; c < 2; ++c) s.cov[r][c] += (z[r] - s.mean[r]) * (z[c] - s.mean[c]);
        }
      }
      for (auto& row : s.cov) {
        for (double& v : row) v /= (m - 1.0);
      }
    }
    out.vowels.emplace(label, s);
  }
  return out;
}

std::map<std::string, VowelSpaceSummary> vowel_space_summary(
    const std::map<std::string, std::vector<FormantMeasurement>>& per_speaker) {
  std::map<std::string, VowelSpaceSummary> out;
  for (const auto& [speaker, tokens] : per_speaker) out.emplace(speaker, vowel_space_summary(tokens));
  return out;
}

nlohmann::json to_json(const VowelSpaceSummary& s) {
  nlohmann::json j = nlohmann::json::object();
  for (const auto& [label, v] : s.vowels) {
    j[label] = {{"mean", {v.mean[0], v.mean[1]}},
                {"cov", {{v.cov[0][0], v.cov[0][1]}, {v.cov[1][0], v.cov[1][1]}}},
                {"n", v.n}};
  }
  return j;
}

VowelSpaceSummary vowel_space_from_json(const nlohmann::json& j) {
  VowelSpaceSummary s;
  try {
    for (const auto& [label, v] : j.items()) {
      VowelStats st;
      st.mean[0] = v.at("mean").at(0).get<double>();
      st.mean[1] = v.at("mean").at(1).get<double>();
      for (int r = 0; r < 2; ++r) {
        for (int c = 0; c < 2; ++c) st.cov[r][c] = v.at("cov").at(r).at(c).get<double>();
      }
      st.n = v.at("n").get<std::size_t>();
      s.vowels.emplace(label, st);
    }
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("vowel space summary: ") + e.what());
  }
  return s;
}

}  // namespace accent_eval::formant
