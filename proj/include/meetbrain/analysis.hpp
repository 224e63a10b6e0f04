#pragma once

#include <array>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "meetbrain/quadrant.hpp"
#include "meetbrain/sigproc.hpp"
#include "meetbrain/stats.hpp"

namespace meetbrain::analysis {

// ---- labels ----------------------------------------------------------------

struct RatingTriple {
  int valence = 5;
  int arousal = 5;
  int liking = 5;
  void validate() const;  // Error(Validation) unless every score is in [1, 9]
  bool operator==(const RatingTriple&) const = default;
};

enum class LabelSource { SelfReport, MusicFallbackValence, MusicFallbackArousal, MusicFallbackBoth };
const char* to_string(LabelSource s);
LabelSource label_source_from_string(const std::string& s);

struct TrialLabel {
  Quadrant quadrant = Quadrant::HAHV;
  bool valence_high = true;
  bool arousal_high = true;
  LabelSource source = LabelSource::SelfReport;
  bool operator==(const TrialLabel&) const = default;
};

inline constexpr int kRatingThreshold = 5;
TrialLabel derive_label(const RatingTriple& rating, Quadrant music);

// ---- EEG band power --------------------------------------------------------

inline constexpr std::size_t kBandCount = 5;
inline constexpr std::array<const char*, kBandCount> kBandNames{"delta", "theta", "alpha", "beta", "gamma"};

struct BandEdges {
  // [lo, hi) per band; the last band also includes its upper edge.
  std::array<std::array<double, 2>, kBandCount> bands{{{0.5, 4.0}, {4.0, 8.0}, {8.0, 13.0}, {13.0, 30.0}, {30.0, 40.0}}};
  std::array<double, 2> full{0.5, 40.0};
  double sub_epoch_s = 3.0;
  double segment_s = 1.0;
  double overlap = 0.5;

  nlohmann::json to_json() const;
  static BandEdges from_json(const nlohmann::json& j);
};

using BandPowers = std::array<double, kBandCount>;
using ChannelBandPowers = std::array<BandPowers, sigproc::kEegChannels>;

// Relative power per channel, averaged over the 3 s sub-epochs.
ChannelBandPowers relative_band_power_per_channel(const sigproc::EegEpoch& epoch, double fs = sigproc::kEegRate,
                                                  const BandEdges& edges = {});
// Channel average of the above.
BandPowers relative_band_power(const sigproc::EegEpoch& epoch, double fs = sigproc::kEegRate,
                               const BandEdges& edges = {});

// ---- fNIRS features --------------------------------------------------------

inline constexpr std::size_t kFnirsFeatureCount = 48;
using FnirsFeatures = std::array<double, kFnirsFeatureCount>;

enum class HbKind { HbO = 0, HbR = 1, HbT = 2 };
enum class Statistic { Mean = 0, Variance = 1 };

// Channel-major, then chromophore (HbO, HbR, HbT), then statistic (mean, variance).
constexpr std::size_t fnirs_feature_index(std::size_t channel, HbKind hb, Statistic stat) {
  return channel * 6 + static_cast<std::size_t>(hb) * 2 + static_cast<std::size_t>(stat);
}
std::string fnirs_feature_name(std::size_t index);  // e.g. "ch3_hbo_mean"

// Population mean and variance over the final window_s seconds of
// [start_ms, end_ms). Error(Data) when fewer than window_s of samples exist.
FnirsFeatures fnirs_features(const sigproc::HemodynamicSeries& series, double start_ms, double end_ms,
                             double window_s = 30.0);

// ---- ratings ---------------------------------------------------------------

struct RatedTrial {
  std::string trial_id;
  Quadrant music = Quadrant::HAHV;
  RatingTriple rating;
};

struct CorrelationCell {
  std::optional<stats::PearsonResult> result;
  std::string error;  // set when the correlation is undefined
};

struct RatingReport {
  struct QuadrantSummary {
    std::size_t n = 0;
    std::array<double, 5> valence{}, arousal{}, liking{};  // quartiles
    std::array<std::size_t, 4> label_histogram{};         // indexed by derived quadrant
  };
  std::map<Quadrant, QuadrantSummary> quadrants;  // empty quadrants omitted
  std::vector<Quadrant> missing_quadrants;
  // Rows/columns: valence, arousal, liking.
  std::array<std::array<CorrelationCell, 3>, 3> correlations;
  nlohmann::json to_json() const;
};

RatingReport rating_report(const std::vector<RatedTrial>& trials);

// ---- feature table ---------------------------------------------------------

struct FeatureRow {
  std::string trial_id;
  std::string subject;
  Quadrant music = Quadrant::HAHV;
  BandPowers bands{};             // channel-averaged
  FnirsFeatures fnirs{};
  RatingTriple rating;
  TrialLabel label;
  ChannelBandPowers eeg_channels{};
  std::array<double, 18> ppg{};
  bool operator==(const FeatureRow&) const = default;
};

std::vector<std::string> feature_header();
std::string format_feature_csv(const std::vector<FeatureRow>& rows);
std::vector<FeatureRow> parse_feature_csv(std::string_view text);
std::vector<FeatureRow> load_feature_csv(const std::filesystem::path& path);

// Table-4-shaped band-power statistics across derived-label groups, Table-2
// rating correlations, and per-feature fNIRS correlations with each rating.
nlohmann::json stats_report(const std::vector<FeatureRow>& rows, double alpha = 0.05);

}  // namespace meetbrain::analysis
