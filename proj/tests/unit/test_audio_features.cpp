#include <doctest.h>

#include <random>

#include "meetbrain/audio_features.hpp"
#include "meetbrain/error.hpp"
#include "synth.hpp"

using namespace meetbrain;
using namespace meetbrain::audio_features;

TEST_CASE("WAV round trip in both encodings") {
  AudioClip c;
  c.sample_rate = 16000;
  c.samples = synth::sine(440, 16000, 1600, 0.7);
  const auto f32 = decode_wav(encode_wav(c, WavEncoding::Float32));
  REQUIRE(f32.samples.size() == c.samples.size());
  for (std::size_t i = 0; i < c.samples.size(); ++i) CHECK(f32.samples[i] == doctest::Approx(c.samples[i]).epsilon(1e-6));
  const auto p16 = decode_wav(encode_wav(c));
  CHECK(p16.sample_rate == 16000);
  for (std::size_t i = 0; i < c.samples.size(); ++i) CHECK(std::abs(p16.samples[i] - c.samples[i]) < 1e-4);
  const std::vector<std::uint8_t> junk{1, 2, 3};
  CHECK_THROWS_AS(decode_wav(junk), Error);
}

TEST_CASE("tempo of click tracks") {
  CHECK(std::abs(estimate_tempo(synth::click_track(0.5, 12)).bpm - 120.0) <= 2.0);
  CHECK(std::abs(estimate_tempo(synth::click_track(0.75, 12)).bpm - 80.0) <= 2.0);
  AudioClip silence{std::vector<double>(22050 * 3, 0.0), 22050};
  const auto t = estimate_tempo(silence);
  CHECK(t.bpm == 120.0);
  CHECK(t.low_confidence);
  AudioClip tiny{std::vector<double>(1000, 0.1), 22050};
  CHECK_THROWS_AS(estimate_tempo(tiny), Error);
}

TEST_CASE("articulation from zero-crossing rate") {
  AudioClip dc{std::vector<double>(16000, 0.5), 16000};
  CHECK(rhythmic_articulation(dc) == doctest::Approx(1e6));
  AudioClip alt{std::vector<double>(16000), 16000};
  for (std::size_t i = 0; i < alt.samples.size(); ++i) alt.samples[i] = i % 2 ? 1.0 : -1.0;
  CHECK(rhythmic_articulation(alt) == doctest::Approx(1.0).epsilon(1e-5));
  AudioClip s{synth::sine(100, 16000, 16000 * 2, 0.5, 0.3), 16000};
  CHECK(rhythmic_articulation(s) == doctest::Approx(80.0).epsilon(0.03));
}

TEST_CASE("mode of synthetic triads") {
  const auto maj = detect_mode(synth::chord({60, 64, 67}, 3));
  CHECK(maj.mode == Mode::Major);
  CHECK(maj.major_tonic == 0);
  const auto min = detect_mode(synth::chord({60, 63, 67}, 3));
  CHECK(min.mode == Mode::Minor);
  CHECK(min.minor_tonic == 0);

  // Ideal chroma oracle: dot products of the triad indicator with templates.
  std::array<double, 12> ideal{};
  ideal[0] = ideal[4] = ideal[7] = 1.0 / std::sqrt(3.0);
  CHECK(mode_from_chroma(ideal).mode == Mode::Major);

  std::array<double, 12> flat;
  flat.fill(1.0 / std::sqrt(12.0));
  const auto tie = mode_from_chroma(flat);
  CHECK(std::abs(tie.mode_raw) < kModeTieThreshold);
  CHECK(tie.low_confidence);

  AudioClip silence{std::vector<double>(22050, 0.0), 22050};
  CHECK_THROWS_AS(detect_mode(silence), Error);
}

TEST_CASE("pitch range and melodic direction") {
  AudioClip tone{synth::sine(220, 16000, 16000 * 2, 0.5), 16000};
  CHECK(pitch_range(tone).semitones == doctest::Approx(0.0).epsilon(0.01));
  CHECK(std::abs(pitch_range(synth::sweep(220, 440, 4)).semitones - 12.0) <= 0.5);
  CHECK(melodic_direction(synth::sweep(220, 440, 4)).value == 0.0);
  CHECK(melodic_direction(synth::sweep(440, 220, 4)).value == 1.0);

  AudioClip noise{synth::white_noise(16000 * 2, 5, 0.3), 16000};
  const auto pr = pitch_range(noise);
  CHECK(pr.semitones == 0.0);
  CHECK(pr.degenerate);
  CHECK(melodic_direction(noise).value == 0.5);

  // Zig-zag track: alternating one-semitone steps.
  PitchTrack zig;
  zig.hop_s = 0.01;
  for (int i = 0; i < 21; ++i) zig.f0_hz.push_back(i % 2 ? synth::midi_hz(58) : synth::midi_hz(57));
  const auto md = melodic_direction(zig);
  CHECK(md.ascending == 10);
  CHECK(md.descending == 10);
  CHECK(md.value == 0.5);
}

TEST_CASE("feature scaling to [1, 7]") {
  CHECK(scale_to_range({2, 4, 6}) == std::vector<double>{1, 4, 7});
  CHECK(scale_to_range({5, 5, 5}) == std::vector<double>{4, 4, 4});
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(-50, 50);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<double> v(17);
    for (auto& x : v) x = u(rng);
    const auto s = scale_to_range(v);
    CHECK(*std::min_element(s.begin(), s.end()) == 1.0);
    CHECK(*std::max_element(s.begin(), s.end()) == 7.0);
  }
}

TEST_CASE("group ANOVA over features") {
  FeatureGroups same, apart;
  std::mt19937_64 rng(9);
  std::normal_distribution<double> n1(1.0, 0.01), n7(7.0, 0.01);
  for (auto q : kAllQuadrants)
    for (int i = 0; i < 5; ++i) {
      same[q].push_back({4, 4 + 0.1 * i, 4, 4, 4});
      const double v = q == Quadrant::HAHV ? n7(rng) : n1(rng);
      apart[q].push_back({v, v, v, v, v});
    }
  const auto s = feature_group_anova(same);
  CHECK(s[1].f == doctest::Approx(0.0));
  CHECK(s[1].p == doctest::Approx(1.0));
  const auto a = feature_group_anova(apart);
  CHECK(a[0].p < 1e-6);
}

TEST_CASE("extract_features is amplitude invariant") {
  auto clip = synth::chord({62, 66, 69}, 4);
  auto loud = clip;
  for (auto& v : loud.samples) v *= 2.5;
  const auto a = extract_features(clip);
  const auto b = extract_features(loud);
  CHECK(a.tempo_bpm == doctest::Approx(b.tempo_bpm));
  CHECK(a.mode == b.mode);
  CHECK(a.pitch_range_semitones == doctest::Approx(b.pitch_range_semitones));
  CHECK(a.melodic_direction_raw == doctest::Approx(b.melodic_direction_raw));
  CHECK(a.articulation_raw == doctest::Approx(b.articulation_raw));
}
