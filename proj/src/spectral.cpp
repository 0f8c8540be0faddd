#include "accent_eval/spectral.hpp"

#include <cmath>
#include <complex>
#include <numbers>
#include <sstream>

#include <unsupported/Eigen/FFT>

#include "accent_eval/csv.hpp"
#include "accent_eval/error.hpp"

namespace accent_eval::spectral {

namespace {

double hz_to_mel(double hz) { return 2595.0 * std::log10(1.0 + hz / 700.0); }

std::size_t next_pow2(std::size_t n) {
  std::size_t p = 1;
  while (p < n) p <<= 1;
  return p;
}

const char* window_name(audio::Window w) {
  switch (w) {
    case audio::Window::rectangular: return "rectangular";
    case audio::Window::hann: return "hann";
    case audio::Window::hamming: return "hamming";
  }
  return "?";
}

// Rows: mel bands; columns: FFT bins 0..nfft/2. Triangles are linear in mel.
std::vector<std::vector<double>> mel_filterbank(std::size_t n_mels, std::size_t nfft, double sr, double fmin,
                                                double fmax) {
  const double mlo = hz_to_mel(fmin);
  const double mhi = hz_to_mel(fmax);
  std::vector<double> edges(n_mels + 2);
  for (std::size_t m = 0; m < edges.size(); ++m) {
    edges[m] = mlo + (mhi - mlo) * static_cast<double>(m) / static_cast<double>(n_mels + 1);
  }
  const std::size_t bins = nfft / 2 + 1;
  std::vector<std::vector<double>> fb(n_mels, std::vector<double>(bins, 0.0));
  for (std::size_t k = 0; k < bins; ++k) {
    const double mel = hz_to_mel(static_cast<double>(k) * sr / static_cast<double>(nfft));
    for (std::size_t m = 0; m < n_mels; ++m) {
      const double left = edges[m];
      const double centre = edges[m + 1];
      const double right = edges[m + 2];
      if (mel > left && mel < right) {
        fb[m][k] = mel <= centre ? (mel - left) / (centre - left) : (right - mel) / (right - centre);
      }
    }
  }
  return fb;
}

std::string fingerprint(const MelCepstrumConfig& cfg, int sr, double fmax, std::size_t nfft) {
  std::ostringstream s;
  s << "mcep;sr=" << sr << ";frame=" << cfg.frame_s << ";hop=" << cfg.hop_s << ";window=" << window_name(cfg.window)
    << ";nmels=" << cfg.n_mels << ";K=" << cfg.order << ";fmin=" << cfg.fmin << ";fmax=" << fmax << ";nfft=" << nfft
    << ";log=ln;floor=" << cfg.log_floor << ";dct=ortho";
  return s.str();
}

}  // namespace

CepstrumTrack mel_cepstrum(const audio::Waveform& w, const MelCepstrumConfig& cfg) {
  if (cfg.order < 1 || cfg.order >= cfg.n_mels) throw Error(Errc::precondition, "mel_cepstrum: need 1 <= K < n_mels");
  const double sr = w.sample_rate;
  const double fmax = cfg.fmax > 0.0 ? cfg.fmax : 0.5 * sr;
  if (!(fmax > cfg.fmin)) throw Error(Errc::precondition, "mel_cepstrum: fmax must exceed fmin");

  // Throws Errc::empty_input when shorter than one frame.
  audio::FrameSequence frames = audio::frame_signal(w, cfg.frame_s, cfg.hop_s, cfg.window);
  const std::size_t nfft = next_pow2(frames.frame_length);
  const auto fb = mel_filterbank(cfg.n_mels, nfft, sr, cfg.fmin, fmax);
  const std::size_t bins = nfft / 2 + 1;
  const std::size_t m_count = cfg.n_mels;

  // Orthonormal DCT-II rows for c0..cK.
  std::vector<std::vector<double>> dct(cfg.order + 1, std::vector<double>(m_count));
  for (std::size_t n = 0; n <= cfg.order; ++n) {
    const double scale = std::sqrt((n == 0 ? 1.0 : 2.0) / static_cast<double>(m_count));
    for (std::size_t m = 0; m < m_count; ++m) {
      dct[n][m] = scale * std::cos(std::numbers::pi * static_cast<double>(n) * (static_cast<double>(m) + 0.5) /
                                   static_cast<double>(m_count));
    }
  }

  CepstrumTrack track;
  track.hop = cfg.hop_s;
  track.config_fingerprint = fingerprint(cfg, w.sample_rate, fmax, nfft);
  track.frames.reserve(frames.size());

  Eigen::FFT<double> fft;
  std::vector<double> buf(nfft);
  std::vector<std::complex<double>> spectrum;
  std::vector<double> logmel(m_count);
  for (const auto& frame : frames.frames) {
    std::fill(buf.begin(), buf.end(), 0.0);
    std::copy(frame.begin(), frame.end(), buf.begin());
    fft.fwd(spectrum, buf);
    for (std::size_t m = 0; m < m_count; ++m) {
      double e = 0.0;
      for (std::size_t k = 0; k < bins; ++k) {
        if (fb[m][k] != 0.0) e += fb[m][k] * std::abs(spectrum[k]);
      }
      logmel[m] = std::log(std::max(e, cfg.log_floor));
    }
    std::vector<double> c(cfg.order + 1, 0.0);
    for (std::size_t n = 0; n <= cfg.order; ++n) {
      for (std::size_t m = 0; m < m_count; ++m) c[n] += dct[n][m] * logmel[m];
    }
    track.frames.push_back(std::move(c));
  }
  return track;
}

double mcd_scale() { return 10.0 / std::numbers::ln10 * std::numbers::sqrt2; }

McdResult mcd(const CepstrumTrack& a, const CepstrumTrack& b) {
  if (a.config_fingerprint != b.config_fingerprint) {
    throw Error(Errc::incompatible_inputs,
                "mcd: cepstra computed with different settings (" + a.config_fingerprint + " vs " +
                    b.config_fingerprint + ")");
  }
  if (a.frames.empty() || b.frames.empty()) throw Error(Errc::empty_input, "mcd: empty cepstrum track");
  const double scale = mcd_scale();
  auto cost = [&](std::size_t i, std::size_t j) {
    const auto& x = a.frames[i];
    const auto& y = b.frames[j];
    double s = 0.0;
    for (std::size_t k = 1; k < x.size(); ++k) s += (x[k] - y[k]) * (x[k] - y[k]);
    return scale * std::sqrt(s);
  };
  McdResult r;
  r.alignment = dtw::align(a.size(), b.size(), cost);
  r.mcd_db = r.alignment.mean_cost;
  return r;
}

void write_cepstrum(std::ostream& out, const CepstrumTrack& t) {
  std::vector<std::string> header;
  const std::size_t width = t.frames.empty() ? 0 : t.frames.front().size();
  for (std::size_t k = 0; k < width; ++k) header.push_back("c" + std::to_string(k));
  csv::write_hop_table(out, t.hop, header, t.frames, {{"config", t.config_fingerprint}});
}

CepstrumTrack read_cepstrum(std::istream& in) {
  csv::Table tab = csv::read_hop_table(in);
  auto it = tab.meta.find("config");
  if (it == tab.meta.end()) throw ParseError("cepstrum cache lacks a '#config=' line");
  return {std::move(tab.rows), tab.hop, it->second};
}

}  // namespace accent_eval::spectral
