#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "meetbrain/analysis.hpp"
#include "meetbrain/sigproc.hpp"

namespace meetbrain::recognition {

enum class Combo { Eeg, Ppg, Hb, EegPpg, EegHb, EegPpgHb };
inline constexpr std::array<Combo, 6> kAllCombos{Combo::Eeg,   Combo::Ppg,   Combo::Hb,
                                                 Combo::EegPpg, Combo::EegHb, Combo::EegPpgHb};
const char* to_string(Combo c);
Combo combo_from_string(const std::string& s);

enum class Target { Valence, Arousal };
const char* to_string(Target t);
Target target_from_string(const std::string& s);

enum class Protocol { Loso, IntraSubject };
const char* to_string(Protocol p);
Protocol protocol_from_string(const std::string& s);

inline constexpr std::size_t kEegDims = 10;
inline constexpr std::size_t kPpgDims = 18;
inline constexpr std::size_t kHbDims = 48;

struct TrialFeatures {
  std::string trial_id;
  std::string subject;
  std::array<double, kEegDims> eeg{};  // fp1 bands then fp2 bands
  std::array<double, kPpgDims> ppg{};
  std::array<double, kHbDims> hb{};
  bool valence_high = false;
  bool arousal_high = false;

  std::vector<double> vector(Combo combo) const;
  bool target(Target t) const { return t == Target::Valence ? valence_high : arousal_high; }
};

TrialFeatures from_feature_row(const analysis::FeatureRow& row);
std::vector<TrialFeatures> from_feature_rows(const std::vector<analysis::FeatureRow>& rows);

// Per-channel mean and variance over the last window_s seconds of
// [start_ms, end_ms), then mean and SD of heart rate from peaks of the
// channel-averaged PPG.
struct PpgFeatures {
  std::array<double, kPpgDims> values{};
  bool hr_undefined = false;
};
PpgFeatures ppg_features(const sigproc::PpgSeries& ppg, double start_ms, double end_ms, double window_s = 30.0,
                         double refractory_s = 0.3);
// Sample indices of positive local maxima at least refractory_s apart.
std::vector<std::size_t> detect_peaks(std::span<const double> x, double fs, double refractory_s = 0.3);

struct Hyperparameters {
  double lambda = 0.01;
  double learning_rate = 0.1;
  int iterations = 500;
  int folds = 10;
  std::uint64_t seed = 0;

  nlohmann::json to_json() const;
  static Hyperparameters from_json(const nlohmann::json& j);
};

struct Standardizer {
  std::vector<double> mean, sd;  // population SD; zero-SD features map to 0
  static Standardizer fit(const std::vector<std::vector<double>>& x);
  std::vector<double> apply(const std::vector<double>& x) const;
};

struct Model {
  Standardizer scaler;
  std::vector<double> weights;
  double bias = 0.0;

  double probability(const std::vector<double>& x) const;
  bool predict(const std::vector<double>& x) const { return probability(x) >= 0.5; }
};

// Logistic regression on z-scored features, L2 penalty (lambda/2)|w|^2 on
// the weights, full-batch gradient descent from zero.
Model fit_logistic(const std::vector<std::vector<double>>& x, const std::vector<bool>& y, const Hyperparameters& h);
Model train_classifier(const std::vector<TrialFeatures>& train, Combo combo, Target target,
                       const Hyperparameters& h = {});

double accuracy(const std::vector<bool>& predictions, const std::vector<bool>& labels);
double macro_f1(const std::vector<bool>& predictions, const std::vector<bool>& labels);

struct CvUnit {
  std::string name;  // held-out subject (LOSO) or subject (intra)
  double acc = 0.0;
  double mf1 = 0.0;
  std::size_t folds = 1;
  std::size_t test_trials = 0;
};

struct CvResult {
  double acc_mean = 0.0, acc_sd = 0.0, mf1_mean = 0.0, mf1_sd = 0.0;
  std::vector<CvUnit> units;
  std::vector<std::string> excluded;  // subjects left out, with reason
  nlohmann::json to_json() const;
};

CvResult loso_cv(const std::vector<TrialFeatures>& data, Combo combo, Target target, const Hyperparameters& h = {},
                 unsigned jobs = 1);

// Stratified fold assignment (fold index per trial) for one subject.
std::vector<int> stratified_folds(const std::vector<bool>& labels, int k, std::uint64_t seed);
CvResult kfold_cv(const std::vector<TrialFeatures>& data, Combo combo, Target target, const Hyperparameters& h = {},
                  unsigned jobs = 1);

struct AblationOptions {
  std::vector<Combo> combos{kAllCombos.begin(), kAllCombos.end()};
  std::vector<Target> targets{Target::Valence, Target::Arousal};
  std::vector<Protocol> protocols{Protocol::Loso, Protocol::IntraSubject};
  Hyperparameters hyper;

  nlohmann::json to_json() const;
  static AblationOptions from_json(const nlohmann::json& j);
};

struct AblationCell {
  Protocol protocol;
  Target target;
  Combo combo;
  CvResult result;
};

struct AblationReport {
  std::vector<AblationCell> cells;
  AblationOptions options;
  const AblationCell* find(Protocol p, Target t, Combo c) const;
  nlohmann::json to_json() const;
  std::string to_markdown() const;
};

AblationReport ablation_report(const std::vector<TrialFeatures>& data, const AblationOptions& options = {},
                               unsigned jobs = 1);

}  // namespace meetbrain::recognition
