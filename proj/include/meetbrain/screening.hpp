#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "meetbrain/audio.hpp"
#include "meetbrain/quadrant.hpp"

namespace meetbrain::screening {

struct EvaluatorRating {
  std::string evaluator_id;
  std::string clip_id;
  int valence = 0;  // 1..9
  int arousal = 0;  // 1..9
};

struct ClipScore {
  std::string clip_id;
  double v = 0.0;  // mean valence
  double a = 0.0;  // mean arousal
  int n_raters = 0;
};

struct TechnicalThresholds {
  double spike_threshold = 10.0;  // ratio to the 95th-percentile frame peak
  double silence_rms_db = -50.0;  // dBFS
  double silence_max_s = 3.0;
  double frame_s = 0.010;
};

struct TechnicalResult {
  bool pass = true;
  std::string reason;  // "abrupt_noise" | "extended_silence" | ""
};

TechnicalResult technical_screen(const AudioClip& audio, const TechnicalThresholds& t = {});

std::vector<ClipScore> aggregate_scores(const std::vector<EvaluatorRating>& ratings);
// Same, but every id in `expected` must have at least one rating.
std::vector<ClipScore> aggregate_scores(const std::vector<EvaluatorRating>& ratings,
                                        const std::vector<std::string>& expected);

// Radii of the selection discs in valence-arousal space.
inline constexpr double kHighArousalRadiusSq = 8.0;  // (2*sqrt(2))^2
inline constexpr double kLalvRadius = 3.4;
inline constexpr double kLahvRadius = 5.0;

// Disc rules around the quadrant corners, boundary inclusive. When v and a
// are means of n_raters integer ratings the test is exact.
bool select_clip(const ClipScore& score, Quadrant intended);

struct ClipRecord {
  std::string clip_id;
  Quadrant quadrant = Quadrant::HAHV;  // intended label, from the generating prompt
  std::string prompt;
  std::optional<AudioClip> audio;  // absent means the technical screen is skipped
};

struct ScreeningReport {
  std::vector<std::string> retained_technical;
  std::map<Quadrant, std::vector<std::string>> selected;
  std::vector<std::pair<std::string, std::string>> rejected;  // (clip_id, reason)
  std::map<std::string, ClipScore> scores;

  nlohmann::json to_json() const;
  static ScreeningReport from_json(const nlohmann::json& j);
};

ScreeningReport screen_library(const std::vector<ClipRecord>& clips,
                               const std::vector<EvaluatorRating>& ratings,
                               const TechnicalThresholds& thresholds = {}, unsigned jobs = 1);

// CSV `evaluator_id,clip_id,valence,arousal` with header.
std::vector<EvaluatorRating> parse_ratings_csv(const std::string& text);
std::vector<EvaluatorRating> load_ratings_csv(const std::string& path);

}  // namespace meetbrain::screening
