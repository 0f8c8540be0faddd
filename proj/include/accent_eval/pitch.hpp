#pragma once

#include <cstddef>
#include <istream>
#include <optional>
#include <ostream>
#include <utility>
#include <vector>

#include "accent_eval/audio.hpp"
#include "accent_eval/dtw.hpp"

namespace accent_eval::pitch {

struct F0Config {
  double fmin = 50.0;
  double fmax = 600.0;
  double frame_s = 0.040;
  double hop_s = 0.010;
  double threshold = 0.15;
  /// Frame i is centred where a `reference_frame_s` frame starting at
  /// i * hop would be centred, and the frame count follows the same rule.
  /// With the default this makes F0 tracks index-compatible with the
  /// 25 ms mel-cepstrum framing, so a cepstral DTW path indexes both.
  double reference_frame_s = 0.025;
};

struct F0Track {
  std::vector<double> f0;           // Hz, 0 when unvoiced
  std::vector<double> periodicity;  // 1 - d'(lag), in [0, 1]
  std::vector<bool> voiced;
  double hop = 0.0;

  std::size_t size() const { return f0.size(); }
};

/// YIN: cumulative-mean-normalized difference, first dip below the
/// threshold, refined to its local minimum and parabolically interpolated.
/// Samples outside the signal are zero. Audio shorter than one reference
/// frame yields an empty track. Requires sample_rate >= 8 * fmax.
F0Track estimate_f0(const audio::Waveform& w, const F0Config& cfg = {});

struct F0Metrics {
  std::optional<double> f0_rmse;  // Hz, over co-voiced steps
  std::optional<double> f0_pcc;   // over co-voiced steps
  double per_rmse = 0.0;          // over all steps
  std::size_t co_voiced = 0;
  std::size_t steps = 0;
};

/// Metrics over the frames paired by `path`. f0_rmse and f0_pcc are empty
/// with fewer than two co-voiced steps; f0_pcc is also empty when either
/// side's F0 is constant over those steps.
F0Metrics f0_metrics(const F0Track& a, const F0Track& b,
                     const std::vector<std::pair<std::size_t, std::size_t>>& path);

/// Diagonal path over the first n frames.
std::vector<std::pair<std::size_t, std::size_t>> identity_path(std::size_t n);

void write_f0(std::ostream& out, const F0Track& t);
F0Track read_f0(std::istream& in);

}  // namespace accent_eval::pitch
