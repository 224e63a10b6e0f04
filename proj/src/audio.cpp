#include "meetbrain/audio.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>

#include "meetbrain/error.hpp"

namespace meetbrain {
namespace {

static_assert(std::endian::native == std::endian::little, "WAV codec assumes little-endian host");

template <typename T>
T read_le(std::span<const std::uint8_t> b, std::size_t off) {
  T v;
  std::memcpy(&v, b.data() + off, sizeof(T));
  return v;
}

template <typename T>
void put_le(std::vector<std::uint8_t>& out, T v) {
  std::uint8_t raw[sizeof(T)];
  std::memcpy(raw, &v, sizeof(T));
  out.insert(out.end(), raw, raw + sizeof(T));
}

void put_tag(std::vector<std::uint8_t>& out, const char* tag) { out.insert(out.end(), tag, tag + 4); }

}  // namespace

AudioClip decode_wav(std::span<const std::uint8_t> b) {
  if (b.size() < 12 || std::memcmp(b.data(), "RIFF", 4) != 0 || std::memcmp(b.data() + 8, "WAVE", 4) != 0)
    throw Error(ErrorKind::Input, "not a RIFF/WAVE stream");

  std::uint16_t format = 0, channels = 0, bits = 0;
  std::uint32_t rate = 0;
  std::span<const std::uint8_t> data;
  bool have_fmt = false, have_data = false;

  std::size_t off = 12;
  while (off + 8 <= b.size()) {
    const auto size = read_le<std::uint32_t>(b, off + 4);
    const std::size_t body = off + 8;
    const std::size_t avail = std::min<std::size_t>(size, b.size() - body);
    if (std::memcmp(b.data() + off, "fmt ", 4) == 0 && avail >= 16) {
      format = read_le<std::uint16_t>(b, body);
      channels = read_le<std::uint16_t>(b, body + 2);
      rate = read_le<std::uint32_t>(b, body + 4);
      bits = read_le<std::uint16_t>(b, body + 14);
      // WAVE_FORMAT_EXTENSIBLE carries the real format in the subformat GUID.
      if (format == 0xFFFE && avail >= 26) format = read_le<std::uint16_t>(b, body + 24);
      have_fmt = true;
    } else if (std::memcmp(b.data() + off, "data", 4) == 0) {
      data = b.subspan(body, avail);
      have_data = true;
    }
    off = body + size + (size & 1u);
  }
  if (!have_fmt || !have_data) throw Error(ErrorKind::Input, "WAV stream lacks fmt or data chunk");
  if (channels == 0 || rate == 0) throw Error(ErrorKind::Input, "WAV header has zero channels or rate");

  const bool pcm16 = format == 1 && bits == 16;
  const bool f32 = format == 3 && bits == 32;
  if (!pcm16 && !f32)
    throw Error(ErrorKind::Input, "unsupported WAV encoding (need PCM16 or float32), format=" +
                                      std::to_string(format) + " bits=" + std::to_string(bits));

  const std::size_t bytes_per = bits / 8;
  const std::size_t frames = data.size() / (bytes_per * channels);
  AudioClip clip;
  clip.sample_rate = rate;
  clip.samples.resize(frames);
  for (std::size_t i = 0; i < frames; ++i) {
    double acc = 0.0;
    for (std::size_t c = 0; c < channels; ++c) {
      const std::size_t p = (i * channels + c) * bytes_per;
      acc += pcm16 ? read_le<std::int16_t>(data, p) / 32768.0 : static_cast<double>(read_le<float>(data, p));
    }
    clip.samples[i] = acc / channels;
  }
  return clip;
}

AudioClip read_wav(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::NotFound, "cannot open " + path.string());
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return decode_wav(bytes);
}

std::vector<std::uint8_t> encode_wav(const AudioClip& clip, WavEncoding enc) {
  const bool f32 = enc == WavEncoding::Float32;
  const std::uint16_t bits = f32 ? 32 : 16;
  const std::uint32_t rate = static_cast<std::uint32_t>(std::lround(clip.sample_rate));
  const std::uint32_t data_bytes = static_cast<std::uint32_t>(clip.samples.size() * (bits / 8));

  std::vector<std::uint8_t> out;
  out.reserve(44 + data_bytes);
  put_tag(out, "RIFF");
  put_le<std::uint32_t>(out, 36 + data_bytes);
  put_tag(out, "WAVE");
  put_tag(out, "fmt ");
  put_le<std::uint32_t>(out, 16);
  put_le<std::uint16_t>(out, f32 ? 3 : 1);
  put_le<std::uint16_t>(out, 1);
  put_le<std::uint32_t>(out, rate);
  put_le<std::uint32_t>(out, rate * (bits / 8));
  put_le<std::uint16_t>(out, bits / 8);
  put_le<std::uint16_t>(out, bits);
  put_tag(out, "data");
  put_le<std::uint32_t>(out, data_bytes);
  for (double s : clip.samples) {
    if (f32) {
      put_le<float>(out, static_cast<float>(s));
    } else {
      const double c = std::clamp(s, -1.0, 32767.0 / 32768.0);
      put_le<std::int16_t>(out, static_cast<std::int16_t>(std::lround(c * 32768.0)));
    }
  }
  return out;
}

void write_wav(const std::filesystem::path& path, const AudioClip& clip, WavEncoding enc) {
  const auto bytes = encode_wav(clip, enc);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorKind::Input, "cannot write " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
}

}  // namespace meetbrain
