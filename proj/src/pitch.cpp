#include "accent_eval/pitch.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "accent_eval/csv.hpp"
#include "accent_eval/error.hpp"

namespace accent_eval::pitch {

namespace {

struct FrameEstimate {
  double f0 = 0.0;
  double periodicity = 0.0;
  bool voiced = false;
};

class Yin {
 public:
  Yin(const F0Config& cfg, int sr)
      : cfg_(cfg),
        sr_(sr),
        width_(static_cast<std::size_t>(std::llround(cfg.frame_s * sr))),
        tau_min_(std::max<std::size_t>(2, static_cast<std::size_t>(std::floor(sr / cfg.fmax)))),
        tau_max_(static_cast<std::size_t>(std::ceil(sr / cfg.fmin))),
        diff_(tau_max_ + 2, 0.0),
        cmnd_(tau_max_ + 2, 1.0) {
    if (width_ <= tau_max_ + 2) throw Error(Errc::precondition, "estimate_f0: frame shorter than the longest period");
    integration_ = width_ - tau_max_ - 1;
  }

  std::size_t width() const { return width_; }

  FrameEstimate run(const std::vector<double>& x) {
    double energy = 0.0;
    for (double v : x) energy += v * v;
    if (!(energy > 0.0)) return {};

    for (std::size_t tau = 1; tau <= tau_max_ + 1; ++tau) {
      double s = 0.0;
      for (std::size_t j = 0; j < integration_; ++j) {
        const double d = x[j] - x[j + tau];
        s += d * d;
      }
      diff_[tau] = s;
    }
    double running = 0.0;
    cmnd_[0] = 1.0;
    for (std::size_t tau = 1; tau <= tau_max_ + 1; ++tau) {
      running += diff_[tau];
      cmnd_[tau] = running > 0.0 ? diff_[tau] * static_cast<double>(tau) / running : 1.0;
    }

    std::size_t lag = 0;
    for (std::size_t tau = tau_min_; tau <= tau_max_; ++tau) {
      if (cmnd_[tau] < cfg_.threshold) {
        while (tau + 1 <= tau_max_ && cmnd_[tau + 1] < cmnd_[tau]) ++tau;
        lag = tau;
        break;
      }
    }
    if (lag == 0) {
      std::size_t best = tau_min_;
      for (std::size_t tau = tau_min_; tau <= tau_max_; ++tau) {
        if (cmnd_[tau] < cmnd_[best]) best = tau;
      }
      return {0.0, std::clamp(1.0 - cmnd_[best], 0.0, 1.0), false};
    }

    double refined = static_cast<double>(lag);
    const double l = cmnd_[lag - 1];
    const double c = cmnd_[lag];
    const double r = cmnd_[lag + 1];
    const double denom = l - 2.0 * c + r;
    if (denom > 0.0) refined += std::clamp(0.5 * (l - r) / denom, -1.0, 1.0);

    const double f0 = static_cast<double>(sr_) / refined;
    const double periodicity = std::clamp(1.0 - c, 0.0, 1.0);
    if (f0 < cfg_.fmin || f0 > cfg_.fmax) return {0.0, periodicity, false};
    return {f0, periodicity, true};
  }

 private:
  F0Config cfg_;
  int sr_;
  std::size_t width_;
  std::size_t tau_min_;
  std::size_t tau_max_;
  std::size_t integration_ = 0;
  std::vector<double> diff_;
  std::vector<double> cmnd_;
};

double pearson(const std::vector<double>& x, const std::vector<double>& y) {
  const auto n = static_cast<double>(x.size());
  double mx = 0.0;
  double my = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= n;
  my /= n;
  double sxy = 0.0;
  double sxx = 0.0;
  double syy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
    syy += (y[i] - my) * (y[i] - my);
  }
  if (!(sxx > 0.0) || !(syy > 0.0)) return std::nan("");
  return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

}  // namespace

F0Track estimate_f0(const audio::Waveform& w, const F0Config& cfg) {
  if (w.sample_rate < 8.0 * cfg.fmax) {
    throw Error(Errc::precondition, "estimate_f0: sample rate must be at least 8 * fmax");
  }
  if (!(cfg.fmin > 0.0) || !(cfg.fmax > cfg.fmin)) throw Error(Errc::precondition, "estimate_f0: invalid F0 range");

  F0Track track;
  track.hop = cfg.hop_s;
  const auto ref_len = static_cast<std::size_t>(std::llround(cfg.reference_frame_s * w.sample_rate));
  const std::size_t n = audio::frame_count(w.samples.size(), ref_len, cfg.hop_s, w.sample_rate);
  if (n == 0) return track;

  Yin yin(cfg, w.sample_rate);
  const std::size_t width = yin.width();
  const auto total = static_cast<long long>(w.samples.size());
  std::vector<double> frame(width);
  for (std::size_t i = 0; i < n; ++i) {
    const long long ref_start = std::llround(static_cast<double>(i) * cfg.hop_s * w.sample_rate);
    const long long start = ref_start + static_cast<long long>(ref_len / 2) - static_cast<long long>(width / 2);
    for (std::size_t k = 0; k < width; ++k) {
      const long long idx = start + static_cast<long long>(k);
      frame[k] = (idx >= 0 && idx < total) ? w.samples[static_cast<std::size_t>(idx)] : 0.0;
    }
    FrameEstimate e = yin.run(frame);
    track.f0.push_back(e.f0);
    track.periodicity.push_back(e.periodicity);
    track.voiced.push_back(e.voiced);
  }
  return track;
}

F0Metrics f0_metrics(const F0Track& a, const F0Track& b, const std::vector<std::pair<std::size_t, std::size_t>>& path) {
  if (path.empty()) throw Error(Errc::empty_input, "f0_metrics: empty alignment path");
  F0Metrics m;
  std::vector<double> fa;
  std::vector<double> fb;
  double per_sq = 0.0;
  for (const auto& [i, j] : path) {
    if (i >= a.size() || j >= b.size()) {
      throw Error(Errc::incompatible_inputs, "f0_metrics: path index beyond F0 track length");
    }
    const double dp = a.periodicity[i] - b.periodicity[j];
    per_sq += dp * dp;
    if (a.voiced[i] && b.voiced[j]) {
      fa.push_back(a.f0[i]);
      fb.push_back(b.f0[j]);
    }
  }
  m.steps = path.size();
  m.co_voiced = fa.size();
  m.per_rmse = std::sqrt(per_sq / static_cast<double>(path.size()));
  if (fa.size() >= 2) {
    double sq = 0.0;
    for (std::size_t k = 0; k < fa.size(); ++k) sq += (fa[k] - fb[k]) * (fa[k] - fb[k]);
    m.f0_rmse = std::sqrt(sq / static_cast<double>(fa.size()));
    const double r = pearson(fa, fb);
    if (!std::isnan(r)) m.f0_pcc = r;
  }
  return m;
}

std::vector<std::pair<std::size_t, std::size_t>> identity_path(std::size_t n) {
  std::vector<std::pair<std::size_t, std::size_t>> p;
  p.reserve(n);
  for (std::size_t i = 0; i < n; ++i) p.emplace_back(i, i);
  return p;
}

void write_f0(std::ostream& out, const F0Track& t) {
  std::vector<std::vector<double>> rows;
  rows.reserve(t.size());
  for (std::size_t i = 0; i < t.size(); ++i) {
    rows.push_back({static_cast<double>(i), t.f0[i], t.periodicity[i], t.voiced[i] ? 1.0 : 0.0});
  }
  csv::write_hop_table(out, t.hop, {"frame", "f0", "periodicity", "voiced"}, rows);
}

F0Track read_f0(std::istream& in) {
  csv::Table tab = csv::read_hop_table(in);
  if (tab.header != std::vector<std::string>{"frame", "f0", "periodicity", "voiced"}) {
    throw ParseError("F0 cache header must be frame,f0,periodicity,voiced");
  }
  F0Track t;
  t.hop = tab.hop;
  for (const auto& row : tab.rows) {
    t.f0.push_back(row[1]);
    t.periodicity.push_back(row[2]);
    t.voiced.push_back(row[3] != 0.0);
  }
  return t;
}

}  // namespace accent_eval::pitch
