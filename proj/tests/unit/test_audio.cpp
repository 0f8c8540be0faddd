#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <cstring>

#include "accent_eval/audio.hpp"
#include "accent_eval/error.hpp"
#include "oracles.hpp"

using namespace accent_eval;
using Catch::Matchers::WithinAbs;

namespace {

void put_u32(std::vector<std::uint8_t>& b, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) b.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}
void put_u16(std::vector<std::uint8_t>& b, std::uint16_t v) {
  b.push_back(static_cast<std::uint8_t>(v));
  b.push_back(static_cast<std::uint8_t>(v >> 8));
}
void put_tag(std::vector<std::uint8_t>& b, const char* tag) { b.insert(b.end(), tag, tag + 4); }

// Builds a RIFF file with an optional extensible fmt chunk and a junk chunk.
std::vector<std::uint8_t> riff(std::uint16_t format, std::uint16_t channels, std::uint16_t bits,
                               const std::vector<std::uint8_t>& data, bool extensible = false, bool junk = false) {
  std::vector<std::uint8_t> fmt;
  put_u16(fmt, extensible ? 0xFFFE : format);
  put_u16(fmt, channels);
  put_u32(fmt, 16000);
  put_u32(fmt, 16000u * channels * bits / 8);
  put_u16(fmt, static_cast<std::uint16_t>(channels * bits / 8));
  put_u16(fmt, bits);
  if (extensible) {
    put_u16(fmt, 22);
    put_u16(fmt, bits);
    put_u32(fmt, 0);
    put_u16(fmt, format);
    const std::uint8_t guid_tail[14] = {0x00, 0x00, 0x00, 0x00, 0x10, 0x00, 0x80,
                                        0x00, 0x00, 0xAA, 0x00, 0x38, 0x9B, 0x71};
    fmt.insert(fmt.end(), guid_tail, guid_tail + 14);
  }
  std::vector<std::uint8_t> body;
  put_tag(body, "WAVE");
  if (junk) {
    put_tag(body, "LIST");
    put_u32(body, 3);
    body.insert(body.end(), {1, 2, 3, 0});
  }
  put_tag(body, "fmt ");
  put_u32(body, static_cast<std::uint32_t>(fmt.size()));
  body.insert(body.end(), fmt.begin(), fmt.end());
  put_tag(body, "data");
  put_u32(body, static_cast<std::uint32_t>(data.size()));
  body.insert(body.end(), data.begin(), data.end());
  std::vector<std::uint8_t> out;
  put_tag(out, "RIFF");
  put_u32(out, static_cast<std::uint32_t>(body.size()));
  out.insert(out.end(), body.begin(), body.end());
  return out;
}

}  // namespace

TEST_CASE("pcm16 write/read round trip is bit exact") {
  audio::Waveform w{oracle::sawtooth(200.0, 16000, 0.1), 16000};
  const auto bytes = audio::write_wav_pcm16(w);
  const auto once = audio::load_wav(bytes);
  REQUIRE(once.sample_rate == 16000);
  REQUIRE(once.samples.size() == w.samples.size());
  for (std::size_t i = 0; i < w.samples.size(); ++i) REQUIRE(std::abs(once.samples[i] - w.samples[i]) <= 0.5 / 32768);
  const auto twice = audio::load_wav(audio::write_wav_pcm16(once));
  REQUIRE(twice.samples == once.samples);
  REQUIRE(audio::write_wav_pcm16(twice) == audio::write_wav_pcm16(once));
}

TEST_CASE("extreme samples are clamped into the int16 range") {
  audio::Waveform w{{-2.0, -1.0, 1.0, 2.0}, 8000};
  const auto r = audio::load_wav(audio::write_wav_pcm16(w));
  REQUIRE(r.samples[0] == -1.0);
  REQUIRE(r.samples[1] == -1.0);
  REQUIRE(r.samples[2] == 32767.0 / 32768.0);
  REQUIRE(r.samples[3] == 32767.0 / 32768.0);
}

TEST_CASE("float32 and extensible formats decode, stereo is averaged") {
  std::vector<std::uint8_t> data;
  for (float v : {0.25f, -0.75f, 0.5f, 0.5f}) {
    std::uint32_t bits;
    std::memcpy(&bits, &v, 4);
    put_u32(data, bits);
  }
  const auto mono = audio::load_wav(riff(3, 1, 32, data));
  REQUIRE(mono.samples == std::vector<double>{0.25, -0.75, 0.5, 0.5});

  const auto stereo = audio::load_wav(riff(3, 2, 32, data, true, true));
  REQUIRE(stereo.samples.size() == 2);
  REQUIRE_THAT(stereo.samples[0], WithinAbs(-0.25, 1e-12));
  REQUIRE_THAT(stereo.samples[1], WithinAbs(0.5, 1e-12));

  std::vector<std::uint8_t> pcm;
  put_u16(pcm, 16384);
  put_u16(pcm, static_cast<std::uint16_t>(-16384));
  const auto ext = audio::load_wav(riff(1, 1, 16, pcm, true));
  REQUIRE(ext.samples == std::vector<double>{0.5, -0.5});
}

TEST_CASE("malformed or unsupported files are rejected") {
  std::vector<std::uint8_t> pcm(8, 0);
  auto code_of = [](const std::vector<std::uint8_t>& b) {
    try {
      audio::load_wav(b);
    } catch (const Error& e) {
      return e.code();
    }
    return Errc::state;
  };
  auto good = riff(1, 1, 16, pcm);
  auto not_riff = good;
  not_riff[0] = 'X';
  CHECK(code_of(not_riff) == Errc::parse);
  CHECK(code_of(riff(1, 1, 24, pcm)) == Errc::unsupported_format);
  CHECK(code_of(riff(2, 1, 16, pcm)) == Errc::unsupported_format);
  auto inside_fmt = good;
  inside_fmt.resize(30);
  CHECK(code_of(inside_fmt) == Errc::parse);
  CHECK(code_of({}) == Errc::parse);
}

TEST_CASE("a short data chunk keeps its complete samples") {
  std::vector<std::uint8_t> pcm;
  for (std::uint16_t v : {100, 200, 300, 400}) put_u16(pcm, v);
  auto bytes = riff(1, 1, 16, pcm);
  bytes.resize(bytes.size() - 3);
  const auto w = audio::load_wav(bytes);
  REQUIRE(w.samples.size() == 2);
  CHECK(w.samples[1] == 200.0 / 32768.0);
}

TEST_CASE("frame counts follow left-aligned framing") {
  CHECK(audio::frame_count(400, 400, 0.01, 16000) == 1);
  CHECK(audio::frame_count(399, 400, 0.01, 16000) == 0);
  CHECK(audio::frame_count(16000, 400, 0.01, 16000) == 98);
  audio::Waveform w{std::vector<double>(16000, 0.1), 16000};
  const auto f = audio::frame_signal(w, 0.025, 0.01, audio::Window::rectangular);
  REQUIRE(f.size() == 98);
  REQUIRE(f.frame_length == 400);
  REQUIRE(f.start_times[1] == Catch::Approx(0.01));
  REQUIRE(f.frames[5][17] == 0.1);
  REQUIRE_THROWS_AS(audio::frame_signal({std::vector<double>(100, 0.0), 16000}, 0.025, 0.01, audio::Window::hann),
                    Error);
}

TEST_CASE("windows are symmetric with the expected end points") {
  const auto hann = audio::make_window(audio::Window::hann, 9);
  const auto hamming = audio::make_window(audio::Window::hamming, 9);
  CHECK(hann.front() == 0.0);
  CHECK_THAT(hann[4], WithinAbs(1.0, 1e-15));
  CHECK_THAT(hamming.front(), WithinAbs(0.08, 1e-12));
  for (std::size_t i = 0; i < 9; ++i) {
    CHECK_THAT(hann[i], WithinAbs(hann[8 - i], 1e-15));
    CHECK_THAT(hamming[i], WithinAbs(hamming[8 - i], 1e-15));
  }
  CHECK(audio::make_window(audio::Window::rectangular, 4) == std::vector<double>(4, 1.0));
}
