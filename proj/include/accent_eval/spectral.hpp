#pragma once

#include <cstddef>
#include <istream>
#include <ostream>
#include <string>
#include <vector>

#include "accent_eval/audio.hpp"
#include "accent_eval/dtw.hpp"

namespace accent_eval::spectral {

struct MelCepstrumConfig {
  double frame_s = 0.025;
  double hop_s = 0.010;
  audio::Window window = audio::Window::hann;
  std::size_t n_mels = 40;
  std::size_t order = 13;  // K; coefficients c0..cK are kept
  double fmin = 0.0;
  double fmax = 0.0;       // 0 means sample_rate / 2
  double log_floor = 1e-10;
};

/// Frames of mel-cepstral coefficients c0..cK. Tracks are comparable only
/// when their fingerprints (sample rate and every front-end setting) match.
struct CepstrumTrack {
  std::vector<std::vector<double>> frames;
  double hop = 0.0;
  std::string config_fingerprint;

  std::size_t size() const { return frames.size(); }
};

/// Magnitude STFT -> HTK-style triangular mel filterbank -> natural log
/// (floored) -> orthonormal DCT-II, truncated to K+1 coefficients.
CepstrumTrack mel_cepstrum(const audio::Waveform& w, const MelCepstrumConfig& cfg = {});

/// (10 / ln 10) * sqrt(2): the dB scale factor applied to the Euclidean
/// cepstral distance.
double mcd_scale();

struct McdResult {
  double mcd_db = 0.0;
  dtw::DtwResult alignment;  // step costs are per-frame distortions in dB
};

/// DTW-aligned mel cepstral distortion over c1..cK (c0 excluded). Throws
/// Errc::incompatible_inputs on a fingerprint mismatch.
McdResult mcd(const CepstrumTrack& a, const CepstrumTrack& b);

void write_cepstrum(std::ostream& out, const CepstrumTrack& t);
CepstrumTrack read_cepstrum(std::istream& in);

}  // namespace accent_eval::spectral
