#include "accent_eval/audio.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>
#include <numbers>
#include <string>

#include "accent_eval/error.hpp"

namespace accent_eval::audio {

namespace {

constexpr std::uint16_t kFormatPcm = 1;
constexpr std::uint16_t kFormatFloat = 3;
constexpr std::uint16_t kFormatExtensible = 0xFFFE;

class ByteReader {
 public:
  explicit ByteReader(std::span<const std::uint8_t> bytes) : bytes_(bytes) {}

  bool has(std::size_t n) const { return pos_ + n <= bytes_.size(); }
  std::size_t pos() const { return pos_; }
  void seek(std::size_t p) { pos_ = p; }

  std::uint16_t u16() {
    std::uint16_t v = static_cast<std::uint16_t>(bytes_[pos_] | (bytes_[pos_ + 1] << 8));
    pos_ += 2;
    return v;
  }
  std::uint32_t u32() {
    std::uint32_t v = 0;
    for (int i = 3; i >= 0; --i) v = (v << 8) | bytes_[pos_ + static_cast<std::size_t>(i)];
    pos_ += 4;
    return v;
  }
  std::string tag() {
    std::string t(reinterpret_cast<const char*>(bytes_.data() + pos_), 4);
    pos_ += 4;
    return t;
  }

 private:
  std::span<const std::uint8_t> bytes_;
  std::size_t pos_ = 0;
};

struct FmtChunk {
  std::uint16_t format = 0;
  std::uint16_t channels = 0;
  std::uint32_t sample_rate = 0;
  std::uint16_t block_align = 0;
  std::uint16_t bits = 0;
};

FmtChunk read_fmt(ByteReader& r, std::uint32_t size) {
  if (size < 16) throw ParseError("chunk 'fmt ': too short (" + std::to_string(size) + " bytes)");
  FmtChunk f;
  f.format = r.u16();
  f.channels = r.u16();
  f.sample_rate = r.u32();
  r.u32();  // byte rate
  f.block_align = r.u16();
  f.bits = r.u16();
  if (f.format == kFormatExtensible) {
    if (size < 40) throw ParseError("chunk 'fmt ': truncated WAVE_FORMAT_EXTENSIBLE header");
    r.u16();  // cbSize
    r.u16();  // valid bits
    r.u32();  // channel mask
    f.format = r.u16();  // first two bytes of the subformat GUID
  }
  if (f.channels == 0) throw ParseError("chunk 'fmt ': zero channels");
  if (f.sample_rate == 0) throw ParseError("chunk 'fmt ': zero sample rate");
  return f;
}

double decode_sample(const std::uint8_t* p, const FmtChunk& f) {
  if (f.format == kFormatPcm) {
    auto v = static_cast<std::int16_t>(static_cast<std::uint16_t>(p[0] | (p[1] << 8)));
    return static_cast<double>(v) / 32768.0;
  }
  std::uint32_t bits = static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
                       (static_cast<std::uint32_t>(p[2]) << 16) |
                       (static_cast<std::uint32_t>(p[3]) << 24);
  return static_cast<double>(std::bit_cast<float>(bits));
}

void put_u16(std::vector<std::uint8_t>& out, std::uint16_t v) {
  out.push_back(static_cast<std::uint8_t>(v & 0xFF));
  out.push_back(static_cast<std::uint8_t>(v >> 8));
}

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>((v >> (8 * i)) & 0xFF));
}

void put_tag(std::vector<std::uint8_t>& out, const char* tag) {
  out.insert(out.end(), tag, tag + 4);
}

}  // namespace

Waveform load_wav(std::span<const std::uint8_t> bytes) {
  ByteReader r(bytes);
  if (!r.has(12)) throw ParseError("chunk 'RIFF': file shorter than the RIFF header");
  if (r.tag() != "RIFF") throw ParseError("chunk 'RIFF': missing RIFF signature");
  r.u32();
  if (r.tag() != "WAVE") throw ParseError("chunk 'RIFF': form type is not WAVE");

  FmtChunk fmt;
  bool have_fmt = false;
  std::span<const std::uint8_t> data;
  bool have_data = false;

  while (r.has(8)) {
    std::string id = r.tag();
    std::uint32_t size = r.u32();
    std::size_t body = r.pos();
    if (id == "fmt ") {
      if (!r.has(size)) throw ParseError("chunk 'fmt ': declared size exceeds file");
      fmt = read_fmt(r, size);
      have_fmt = true;
    } else if (id == "data") {
      // Streaming writers leave 0 or 0xFFFFFFFF here; take what is present.
      std::size_t avail = bytes.size() - body;
      std::size_t n = (size == 0 || size == 0xFFFFFFFFu || size > avail) ? avail : size;
      data = bytes.subspan(body, n);
      have_data = true;
      size = static_cast<std::uint32_t>(n);
    }
    std::size_t next = body + size + (size & 1u);
    if (next > bytes.size()) break;
    r.seek(next);
  }

  if (!have_fmt) throw ParseError("chunk 'fmt ': missing");
  if (!have_data) throw ParseError("chunk 'data': missing");

  const bool pcm16 = fmt.format == kFormatPcm && fmt.bits == 16;
  const bool float32 = fmt.format == kFormatFloat && fmt.bits == 32;
  if (!pcm16 && !float32) {
    throw Error(Errc::unsupported_format,
                "unsupported WAV encoding: format tag " + std::to_string(fmt.format) + ", " +
                    std::to_string(fmt.bits) + " bits per sample");
  }

  const std::size_t bytes_per_sample = fmt.bits / 8;
  const std::size_t frame_bytes = bytes_per_sample * fmt.channels;
  const std::size_t n = data.size() / frame_bytes;

  Waveform w;
  w.sample_rate = static_cast<int>(fmt.sample_rate);
  w.samples.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const std::uint8_t* frame = data.data() + i * frame_bytes;
    double acc = 0.0;
    for (std::size_t c = 0; c < fmt.channels; ++c) acc += decode_sample(frame + c * bytes_per_sample, fmt);
    double v = fmt.channels == 1 ? acc : acc / fmt.channels;
    if (!std::isfinite(v)) throw ParseError("chunk 'data': non-finite sample at frame " + std::to_string(i));
    w.samples[i] = v;
  }
  return w;
}

Waveform load_wav_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(Errc::not_found, "cannot open audio file " + path.string());
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return load_wav(bytes);
}

std::vector<std::uint8_t> write_wav_pcm16(const Waveform& w) {
  if (w.sample_rate <= 0) throw Error(Errc::precondition, "write_wav: sample rate must be positive");
  const auto data_bytes = static_cast<std::uint32_t>(w.samples.size() * 2);
  std::vector<std::uint8_t> out;
  out.reserve(44 + data_bytes);
  put_tag(out, "RIFF");
  put_u32(out, 36 + data_bytes);
  put_tag(out, "WAVE");
  put_tag(out, "fmt ");
  put_u32(out, 16);
  put_u16(out, kFormatPcm);
  put_u16(out, 1);
  put_u32(out, static_cast<std::uint32_t>(w.sample_rate));
  put_u32(out, static_cast<std::uint32_t>(w.sample_rate) * 2);
  put_u16(out, 2);
  put_u16(out, 16);
  put_tag(out, "data");
  put_u32(out, data_bytes);
  for (double s : w.samples) {
    double q = std::round(s * 32768.0);
    q = std::clamp(q, -32768.0, 32767.0);
    put_u16(out, static_cast<std::uint16_t>(static_cast<std::int16_t>(q)));
  }
  return out;
}

void write_wav_file(const std::filesystem::path& path, const Waveform& w) {
  auto bytes = write_wav_pcm16(w);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(Errc::not_found, "cannot write audio file " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
}

std::vector<double> make_window(Window kind, std::size_t n) {
  std::vector<double> w(n, 1.0);
  if (kind == Window::rectangular || n < 2) return w;
  const double denom = static_cast<double>(n - 1);
  for (std::size_t i = 0; i < n; ++i) {
    double c = std::cos(2.0 * std::numbers::pi * static_cast<double>(i) / denom);
    w[i] = kind == Window::hann ? 0.5 - 0.5 * c : 0.54 - 0.46 * c;
  }
  return w;
}

std::size_t frame_count(std::size_t length, std::size_t frame_length, double hop_s, int sample_rate) {
  if (frame_length == 0 || length < frame_length) return 0;
  std::size_t count = 0;
  while (true) {
    auto start = static_cast<std::size_t>(std::llround(static_cast<double>(count) * hop_s * sample_rate));
    if (start + frame_length > length) break;
    ++count;
  }
  return count;
}

FrameSequence frame_signal(const Waveform& w, double frame_length_s, double hop_s, Window window) {
  if (!(hop_s > 0.0) || frame_length_s < hop_s) {
    throw Error(Errc::precondition, "frame_signal: need frame_length >= hop > 0");
  }
  if (w.sample_rate <= 0) throw Error(Errc::precondition, "frame_signal: sample rate must be positive");
  const auto frame_len = static_cast<std::size_t>(std::llround(frame_length_s * w.sample_rate));
  const std::size_t n = frame_count(w.samples.size(), frame_len, hop_s, w.sample_rate);
  if (n == 0) throw Error(Errc::empty_input, "frame_signal: waveform shorter than one frame");

  const auto win = make_window(window, frame_len);
  FrameSequence fs;
  fs.hop = hop_s;
  fs.frame_length = frame_len;
  fs.frames.reserve(n);
  fs.start_times.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    auto start = static_cast<std::size_t>(std::llround(static_cast<double>(i) * hop_s * w.sample_rate));
    std::vector<double> f(frame_len);
    for (std::size_t k = 0; k < frame_len; ++k) f[k] = w.samples[start + k] * win[k];
    fs.frames.push_back(std::move(f));
    fs.start_times.push_back(static_cast<double>(i) * hop_s);
  }
  return fs;
}

}  // namespace accent_eval::audio
