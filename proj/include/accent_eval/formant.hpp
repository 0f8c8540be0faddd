#pragma once

#include <cstddef>
#include <map>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "accent_eval/audio.hpp"
#include "accent_eval/textgrid.hpp"

namespace accent_eval::formant {

/// Burg-method AR coefficients a[1..order] for the model
/// x[n] = sum_k a[k] x[n-k] + e[n]. The prediction polynomial is minimum
/// phase. Throws Errc::degenerate_input on an all-zero frame and
/// Errc::precondition when the frame is not longer than the order.
std::vector<double> lpc_burg(std::span<const double> frame, std::size_t order);

struct Resonance {
  double frequency = 0.0;  // Hz
  double bandwidth = 0.0;  // Hz
};

/// Roots of 1 - sum a[k] z^-k in the upper half plane mapped to
/// (angle * sr / 2pi, -ln|r| * sr / pi), sorted by frequency. Candidates
/// below 90 Hz or wider than 400 Hz are dropped.
std::vector<Resonance> formants_from_lpc(std::span<const double> coeffs, double sample_rate);

struct AnalysisSettings {
  double window_s = 0.025;
  double pre_emphasis = 0.97;
  std::size_t lpc_order = 10;
};

struct F1F2 {
  double f1 = 0.0;
  double f2 = 0.0;
  double b1 = 0.0;
  double b2 = 0.0;
};

/// Single-window formant estimate at `midpoint`: the signal is resampled
/// to 2 * ceiling around the midpoint, pre-emphasized, Hann-windowed and
/// analysed with lpc_burg. Ceiling must lie in [3500, 7000] Hz.
F1F2 extract_f1f2(const audio::Waveform& w, double midpoint, double ceiling,
                  const AnalysisSettings& settings = {});

struct FormantMeasurement {
  align::VowelToken token;
  double f1 = 0.0;
  double f2 = 0.0;
  double b1 = 0.0;
  double b2 = 0.0;
  double ceiling_used = 0.0;
};

struct MeasureResult {
  std::vector<align::VowelToken> tokens;  // every token, measured or not
  std::vector<FormantMeasurement> measurements;
  std::size_t failed = 0;
};

/// Measures every token; tokens whose extraction fails are skipped and
/// counted.
MeasureResult measure_tokens(const audio::Waveform& w, const std::vector<align::VowelToken>& tokens,
                             double ceiling, const AnalysisSettings& settings = {});

using MeasurementPair = std::pair<FormantMeasurement, FormantMeasurement>;

/// Aligns the full token sequences, then keeps the pairs measured on both
/// sides.
std::vector<MeasurementPair> pair_measurements(const MeasureResult& a, const MeasureResult& b);

struct VfRmse {
  double pooled = 0.0;  // sqrt(mean of the 2N squared F1/F2 differences), Hz
  double f1 = 0.0;
  double f2 = 0.0;
  std::size_t pair_count = 0;
};

/// Throws Errc::undefined_metric on an empty input and Errc::precondition
/// when a pair has different labels.
VfRmse vf_rmse(const std::vector<MeasurementPair>& pairs);

struct VowelStats {
  double mean[2] = {0.0, 0.0};          // (zF1, zF2)
  double cov[2][2] = {{0.0, 0.0}, {0.0, 0.0}};
  std::size_t n = 0;
};

struct VowelSpaceSummary {
  std::map<std::string, VowelStats> vowels;
};

/// Lobanov-normalizes F1 and F2 per speaker (sample standard deviation),
/// then reports per-vowel means and sample covariances (zero for a single
/// token). Throws Errc::precondition for fewer than two tokens and
/// Errc::degenerate_normalization for zero variance.
VowelSpaceSummary vowel_space_summary(const std::vector<FormantMeasurement>& speaker_tokens);

std::map<std::string, VowelSpaceSummary> vowel_space_summary(
    const std::map<std::string, std::vector<FormantMeasurement>>& per_speaker);

nlohmann::json to_json(const VowelSpaceSummary& s);
VowelSpaceSummary vowel_space_from_json(const nlohmann::json& j);

}  // namespace accent_eval::formant
