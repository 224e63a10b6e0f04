#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>
#include <string>
#include <vector>

#include "meetbrain/audio.hpp"
#include "meetbrain/session.hpp"
#include "meetbrain/sigproc.hpp"

namespace synth {

inline constexpr double kTwoPi = 2.0 * std::numbers::pi;

inline std::vector<double> sine(double freq, double fs, std::size_t n, double amp = 1.0, double phase = 0.0) {
  std::vector<double> x(n);
  for (std::size_t i = 0; i < n; ++i) x[i] = amp * std::sin(kTwoPi * freq * static_cast<double>(i) / fs + phase);
  return x;
}

inline std::vector<double> white_noise(std::size_t n, std::uint64_t seed, double sd = 1.0) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> d(0.0, sd);
  std::vector<double> x(n);
  for (auto& v : x) v = d(rng);
  return x;
}

// Decaying noise bursts every `period_s` seconds.
inline meetbrain::AudioClip click_track(double period_s, double seconds, double fs = 22050.0) {
  meetbrain::AudioClip c;
  c.sample_rate = fs;
  c.samples.assign(static_cast<std::size_t>(seconds * fs), 0.0);
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  const auto len = static_cast<std::size_t>(0.02 * fs);
  for (double t = 0.1; t < seconds; t += period_s) {
    const auto start = static_cast<std::size_t>(t * fs);
    for (std::size_t i = 0; i < len && start + i < c.samples.size(); ++i)
      c.samples[start + i] = 0.8 * u(rng) * std::exp(-static_cast<double>(i) / (0.004 * fs));
  }
  return c;
}

inline double midi_hz(double note) { return 440.0 * std::pow(2.0, (note - 69.0) / 12.0); }

inline meetbrain::AudioClip chord(const std::vector<double>& midi_notes, double seconds, double fs = 22050.0) {
  meetbrain::AudioClip c;
  c.sample_rate = fs;
  c.samples.assign(static_cast<std::size_t>(seconds * fs), 0.0);
  for (double m : midi_notes) {
    const double f = midi_hz(m);
    for (std::size_t i = 0; i < c.samples.size(); ++i)
      c.samples[i] += 0.25 * std::sin(kTwoPi * f * static_cast<double>(i) / fs);
  }
  return c;
}

// Exponential glide from f0 to f1 Hz.
inline meetbrain::AudioClip sweep(double f0, double f1, double seconds, double fs = 16000.0) {
  meetbrain::AudioClip c;
  c.sample_rate = fs;
  const auto n = static_cast<std::size_t>(seconds * fs);
  c.samples.resize(n);
  const double k = std::log(f1 / f0) / seconds;
  for (std::size_t i = 0; i < n; ++i) {
    const double t = static_cast<double>(i) / fs;
    const double phase = kTwoPi * f0 * (std::exp(k * t) - 1.0) / k;
    c.samples[i] = 0.5 * std::sin(phase);
  }
  return c;
}

inline meetbrain::sigproc::EegEpoch eeg_epoch(const std::vector<double>& ch0, const std::vector<double>& ch1) {
  meetbrain::sigproc::EegEpoch e;
  e.trial_id = "t";
  e.data = {ch0, ch1};
  return e;
}

// Library of screened clips, `n` per quadrant.
inline meetbrain::screening::ScreeningReport library(int n) { return meetbrain::session::synthetic_library(n); }

}  // namespace synth
