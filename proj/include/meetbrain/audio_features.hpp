#pragma once

#include <array>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "meetbrain/audio.hpp"
#include "meetbrain/quadrant.hpp"
#include "meetbrain/stats.hpp"

namespace meetbrain::audio_features {

// STFT-based features run on audio resampled to this rate.
inline constexpr double kAnalysisRate = 32000.0;

struct TempoEstimate {
  double bpm = 120.0;
  bool low_confidence = false;
  std::vector<double> beat_times_s;
};

// Onset envelope (mel spectral flux, 10 ms hop), autocorrelation tempo with a
// log-Gaussian prior at 120 BPM, then dynamic-programming beat tracking.
// Silent input falls back to 120 BPM flagged low-confidence.
TempoEstimate estimate_tempo(const AudioClip& clip);

// Inverse mean zero-crossing rate over 20 ms frames, 1 / (ZCR + 1e-6).
double rhythmic_articulation(const AudioClip& clip);

enum class Mode { Major, Minor };
const char* to_string(Mode m);

struct ModeEstimate {
  Mode mode = Mode::Major;
  double mode_raw = 0.0;  // best major similarity minus best minor similarity
  double major_similarity = 0.0;
  double minor_similarity = 0.0;
  int major_tonic = 0;  // pitch class, C = 0
  int minor_tonic = 0;
  bool low_confidence = false;  // |mode_raw| < kModeTieThreshold
  std::array<double, 12> chroma{};
};
inline constexpr double kModeTieThreshold = 0.05;

// Time-averaged, L2-normalized 12-bin chroma (C = 0) from STFT peaks.
// Throws Error(Input) for silent audio.
std::array<double, 12> chroma(const AudioClip& clip);
ModeEstimate mode_from_chroma(const std::array<double, 12>& chroma);
ModeEstimate detect_mode(const AudioClip& clip);

struct PitchTrack {
  double hop_s = 0.0;
  std::vector<std::optional<double>> f0_hz;  // nullopt = unvoiced frame
  std::size_t voiced() const;
};

// Normalized autocorrelation f0 per 40 ms frame, 50-1000 Hz, voiced when the
// chosen peak reaches 0.3.
PitchTrack track_pitch(const AudioClip& clip);

struct PitchRange {
  double semitones = 0.0;
  bool degenerate = false;  // fewer than two voiced frames
};
PitchRange pitch_range(const PitchTrack& track);
PitchRange pitch_range(const AudioClip& clip);

struct MelodicDirection {
  double value = 0.5;  // 1 - ascending / (ascending + descending)
  std::size_t ascending = 0;
  std::size_t descending = 0;
};
inline constexpr double kIntervalThresholdSemitones = 0.5;
MelodicDirection melodic_direction(const PitchTrack& track);
MelodicDirection melodic_direction(const AudioClip& clip);

inline constexpr std::size_t kFeatureCount = 5;
inline constexpr std::array<const char*, kFeatureCount> kFeatureNames{
    "tempo", "articulation", "mode", "pitch_range", "melodic_direction"};

struct StructuralFeatures {
  double tempo_bpm = 0.0;
  double articulation_raw = 0.0;
  double mode_raw = 0.0;
  double pitch_range_semitones = 0.0;
  double melodic_direction_raw = 0.5;
  std::array<double, kFeatureCount> scaled{};
  Mode mode = Mode::Major;
  bool tempo_low_confidence = false;
  bool mode_low_confidence = false;
  bool pitch_degenerate = false;

  std::array<double, kFeatureCount> raw() const {
    return {tempo_bpm, articulation_raw, mode_raw, pitch_range_semitones, melodic_direction_raw};
  }
};

// All five raw features; clip must be at least 2 s long.
StructuralFeatures extract_features(const AudioClip& clip);

// Per-feature min-max over the corpus onto [1, 7]; constant features map to 4.
void scale_features(std::vector<StructuralFeatures>& corpus);
std::vector<double> scale_to_range(const std::vector<double>& values);

using FeatureGroups = std::map<Quadrant, std::vector<std::array<double, kFeatureCount>>>;
std::array<stats::AnovaResult, kFeatureCount> feature_group_anova(const FeatureGroups& groups);

}  // namespace meetbrain::audio_features
