#pragma once

#include <cstdint>
#include <filesystem>
#include <string>

#include <nlohmann/json.hpp>

#include "meetbrain/analysis.hpp"
#include "meetbrain/recognition.hpp"
#include "meetbrain/screening.hpp"
#include "meetbrain/session.hpp"
#include "meetbrain/sigproc.hpp"

namespace meetbrain {

struct PipelineConfig {
  std::uint64_t seed = 7;

  struct Prompts {
    std::size_t count = 59;
    std::string template_text;     // empty = built-in template
    std::string lexicon_path;      // empty = built-in lexicon
    double duration_s = 30.0;
  } prompts;

  screening::TechnicalThresholds technical;

  struct Filters {
    double eeg_lo = 0.1, eeg_hi = 40.0;
    double ppg_lo = 0.5, ppg_hi = 4.0;
    double systemic_lo = 0.01, systemic_hi = 0.1;
  } filters;

  sigproc::EpochOptions epoch;
  double analysis_window_start_s = 30.0;  // EEG band-power window relative to music onset
  double analysis_window_end_s = 60.0;
  double fnirs_baseline_s = 5.0;
  double fnirs_feature_window_s = 30.0;
  sigproc::PpgSource ppg_source = sigproc::PpgSource::Wavelength850;
  double ppg_refractory_s = 0.3;
  analysis::BandEdges bands;
  sigproc::OpticalConstants optical;
  double alpha = 0.05;

  recognition::AblationOptions classify;
  session::Timing timing;
  session::SimulationProfile simulation;
  int simulate_subjects = 5;
  int simulate_clips_per_quadrant = 5;

  nlohmann::json to_json() const;
  // Missing keys keep their defaults; unknown keys are rejected.
  static PipelineConfig from_json(const nlohmann::json& j);
  static PipelineConfig load(const std::filesystem::path& path);
};

}  // namespace meetbrain
