#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

namespace meetbrain {

// Mono PCM audio with amplitudes nominally in [-1, 1].
struct AudioClip {
  std::vector<double> samples;
  double sample_rate = 0.0;

  double duration_s() const {
    return sample_rate > 0 ? static_cast<double>(samples.size()) / sample_rate : 0.0;
  }
  bool empty() const { return samples.empty(); }
};

enum class WavEncoding { Pcm16, Float32 };

// WAV decoding accepts PCM 16-bit and IEEE float32, mono or multichannel
// (multichannel input is downmixed by averaging).
AudioClip decode_wav(std::span<const std::uint8_t> bytes);
AudioClip read_wav(const std::filesystem::path& path);

std::vector<std::uint8_t> encode_wav(const AudioClip& clip, WavEncoding enc = WavEncoding::Pcm16);
void write_wav(const std::filesystem::path& path, const AudioClip& clip,
               WavEncoding enc = WavEncoding::Pcm16);

}  // namespace meetbrain
