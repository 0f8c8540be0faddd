#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

namespace accent_eval::audio {

/// Mono PCM signal. Samples are nominally in [-1, 1]; int16 input is scaled
/// by 1/32768.
struct Waveform {
  std::vector<double> samples;
  int sample_rate = 0;

  double duration() const {
    return sample_rate > 0 ? static_cast<double>(samples.size()) / sample_rate : 0.0;
  }
};

/// Parses a RIFF/WAVE byte stream. Supports PCM 16-bit (format 1) and IEEE
/// float 32-bit (format 3), including WAVE_FORMAT_EXTENSIBLE wrappers of
/// either. Multi-channel input is averaged to mono. Unknown chunks are
/// skipped.
Waveform load_wav(std::span<const std::uint8_t> bytes);
Waveform load_wav_file(const std::filesystem::path& path);

/// Serializes as mono PCM16. Samples are clamped to [-1, 32767/32768]; the
/// round(x * 32768) quantizer makes read(write(read(file))) bit-exact.
std::vector<std::uint8_t> write_wav_pcm16(const Waveform& w);
void write_wav_file(const std::filesystem::path& path, const Waveform& w);

enum class Window { rectangular, hann, hamming };

/// Symmetric window of length n (first/last Hann values are 0).
std::vector<double> make_window(Window kind, std::size_t n);

struct FrameSequence {
  std::vector<std::vector<double>> frames;
  double hop = 0.0;               // seconds
  std::size_t frame_length = 0;   // samples
  std::vector<double> start_times;

  std::size_t size() const { return frames.size(); }
};

/// Number of frames produced for a signal of `length` samples. Frame i
/// starts at round(i * hop_s * sample_rate).
std::size_t frame_count(std::size_t length, std::size_t frame_length, double hop_s,
                        int sample_rate);

/// Left-aligned framing; the trailing partial frame is dropped.
/// Throws Errc::empty_input when the signal is shorter than one frame.
FrameSequence frame_signal(const Waveform& w, double frame_length_s, double hop_s,
                           Window window);

}  // namespace accent_eval::audio
