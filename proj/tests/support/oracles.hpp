#pragma once

// Independent reference implementations and signal generators used by the
// unit and acceptance tests. Nothing here calls into the library under test.

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <random>
#include <string>
#include <utility>
#include <vector>

namespace oracle {

/// Impulse train at f0 shaped by a one-pole source tilt (corner `tilt_hz`,
/// none when 0), then two cascaded second-order resonators (F1/B1 then
/// F2/B2), normalized to a 0.5 peak.
std::vector<double> two_resonator_vowel(double f1, double f2, int sample_rate, double seconds, double f0 = 120.0,
                                        double b1 = 80.0, double b2 = 100.0, double tilt_hz = 100.0);

/// Band-limited sawtooth by additive synthesis (harmonics below Nyquist).
std::vector<double> sawtooth(double f0, int sample_rate, double seconds, double amplitude = 0.5);

/// x[n] = a1 x[n-1] + a2 x[n-2] + e[n], unit-variance Gaussian e.
std::vector<double> ar2(double a1, double a2, std::size_t n, std::uint64_t seed);

struct DtwOracle {
  double best_sum = 0.0;
  std::size_t best_steps = 0;
  double mean = 0.0;
};

/// Enumerates every monotone path with steps (1,0), (0,1), (1,1) from
/// (0,0) to (n-1,m-1) and returns the one with the lowest (sum, steps).
DtwOracle dtw_enumerate(const std::vector<std::vector<double>>& cost);

/// Plain recursive Levenshtein distance.
std::size_t edit_distance_recursive(const std::vector<int>& a, const std::vector<int>& b);

/// Student-t CDF by composite Simpson integration of the density from 0.
double t_cdf_quadrature(double t, double df);

/// Closed forms for df = 1 and df = 2.
double t_cdf_df1(double t);
double t_cdf_df2(double t);

/// Random probability vector of length k (Dirichlet(1)); with probability
/// `zero_prob` each entry is zeroed before renormalizing (at least one
/// entry survives).
std::vector<double> random_distribution(std::mt19937_64& rng, std::size_t k, double zero_prob = 0.0);

/// Minimal 16-bit PCM mono WAV writer.
void write_wav16(const std::filesystem::path& path, const std::vector<double>& samples, int sample_rate);

/// Fresh empty directory under the system temp directory.
std::filesystem::path temp_dir(const std::string& tag);

}  // namespace oracle
