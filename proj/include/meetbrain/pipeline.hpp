#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "meetbrain/audio_features.hpp"
#include "meetbrain/config.hpp"
#include "meetbrain/promptgen.hpp"
#include "meetbrain/recognition.hpp"
#include "meetbrain/screening.hpp"

namespace meetbrain::pipeline {

namespace fs = std::filesystem;

// ---- prompts ---------------------------------------------------------------

std::vector<promptgen::PromptSpec> make_prompts(const PipelineConfig& cfg, const std::vector<Quadrant>& quadrants);
// prompts.jsonl and clips.csv (clip_id,quadrant,prompt) under out_dir.
void write_prompts(const std::vector<promptgen::PromptSpec>& prompts, const fs::path& out_dir);
// Requests audio for every prompt and stores <out_dir>/audio/<clip_id>.wav.
void generate_audio(const std::vector<promptgen::PromptSpec>& prompts, promptgen::GenerationClient& client,
                    double duration_s, const fs::path& out_dir, unsigned jobs);

// ---- screening and music features ------------------------------------------

// clips.csv with columns clip_id,quadrant,prompt; audio read from
// <audio_dir>/<clip_id>.wav when audio_dir is given.
std::vector<screening::ClipRecord> load_corpus(const fs::path& clips_csv, const std::optional<fs::path>& audio_dir);

screening::ScreeningReport screen(const fs::path& clips_csv, const fs::path& ratings_csv,
                                  const std::optional<fs::path>& audio_dir, const PipelineConfig& cfg,
                                  const fs::path& out_dir, unsigned jobs);

struct MusicFeatureRow {
  std::string clip_id;
  Quadrant quadrant = Quadrant::HAHV;
  audio_features::StructuralFeatures features;
};

std::vector<MusicFeatureRow> music_features(const std::vector<screening::ClipRecord>& corpus, unsigned jobs);
std::string format_music_features_csv(const std::vector<MusicFeatureRow>& rows);
nlohmann::json music_anova_json(const std::vector<MusicFeatureRow>& rows);
void run_music_features(const fs::path& clips_csv, const fs::path& audio_dir, const fs::path& out_dir, unsigned jobs);

// ---- physiological pipeline --------------------------------------------------

struct SimulateSummary {
  std::vector<std::string> participants;
  std::vector<fs::path> bundles;
};
// Synthetic participants P01.. with bundles under out_dir.
SimulateSummary simulate(const PipelineConfig& cfg, int subjects, const fs::path& out_dir, unsigned jobs);

struct PreprocessSummary {
  std::size_t sessions = 0;
  std::size_t epochs = 0;
  nlohmann::json skipped;  // per session
};
// Mirrors every bundle under out_dir with epochs/, windows/, hemo.csv,
// ppg.csv and the bundle's events, ratings, clips and manifest.
PreprocessSummary preprocess(const fs::path& bundle_root, const fs::path& out_dir, const PipelineConfig& cfg,
                             unsigned jobs);

struct AnalyzeSummary {
  std::vector<analysis::FeatureRow> rows;
  nlohmann::json excluded;
  nlohmann::json stats;
};
// features.csv, stats.json and exclusions.json under out_dir.
AnalyzeSummary analyze(const fs::path& preprocessed_root, const fs::path& out_dir, const PipelineConfig& cfg,
                       unsigned jobs);

// ablation.json and ablation.md under out_dir.
recognition::AblationReport classify(const fs::path& features_csv, const fs::path& out_dir, const PipelineConfig& cfg,
                                     unsigned jobs);

}  // namespace meetbrain::pipeline
