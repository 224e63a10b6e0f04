#include "meetbrain/pipeline.hpp"

#include <algorithm>
#include <cstdio>

#include "meetbrain/audio.hpp"
#include "meetbrain/csv.hpp"
#include "meetbrain/error.hpp"
#include "meetbrain/log.hpp"
#include "meetbrain/parallel.hpp"
#include "meetbrain/recordings.hpp"
#include "meetbrain/session.hpp"

namespace meetbrain::pipeline {

// ---- prompts ---------------------------------------------------------------

std::vector<promptgen::PromptSpec> make_prompts(const PipelineConfig& cfg, const std::vector<Quadrant>& quadrants) {
  const auto lexicon = cfg.prompts.lexicon_path.empty() ? promptgen::PromptLexicon::builtin()
                                                        : promptgen::PromptLexicon::load(cfg.prompts.lexicon_path);
  const std::string tmpl =
      cfg.prompts.template_text.empty() ? std::string(promptgen::kDefaultTemplate) : cfg.prompts.template_text;
  promptgen::validate_template(tmpl);
  std::vector<promptgen::PromptSpec> out;
  for (auto q : quadrants) {
    auto specs = promptgen::enumerate_prompts(lexicon, q, cfg.prompts.count, cfg.seed, tmpl);
    out.insert(out.end(), specs.begin(), specs.end());
  }
  return out;
}

void write_prompts(const std::vector<promptgen::PromptSpec>& prompts, const fs::path& out_dir) {
  std::string jsonl, clips = "clip_id,quadrant,prompt\n";
  for (const auto& p : prompts) {
    jsonl += p.to_json().dump() + "\n";
    clips += p.id() + "," + std::string(to_string(p.quadrant)) + "," + csv::quote(p.rendered) + "\n";
  }
  csv::write_file(out_dir / "prompts.jsonl", jsonl);
  csv::write_file(out_dir / "clips.csv", clips);
}

void generate_audio(const std::vector<promptgen::PromptSpec>& prompts, promptgen::GenerationClient& client,
                    double duration_s, const fs::path& out_dir, unsigned jobs) {
  std::vector<std::string> texts;
  for (const auto& p : prompts) texts.push_back(p.rendered);
  const auto clips = promptgen::request_generation_batch(texts, duration_s, client, jobs);
  fs::create_directories(out_dir / "audio");
  for (std::size_t i = 0; i < prompts.size(); ++i)
    write_wav(out_dir / "audio" / (prompts[i].id() + ".wav"), clips[i]);
}

// ---- screening and music features ------------------------------------------

std::vector<screening::ClipRecord> load_corpus(const fs::path& clips_csv, const std::optional<fs::path>& audio_dir) {
  const auto t = csv::parse(csv::read_file(clips_csv));
  const auto id_col = t.column("clip_id");
  const auto q_col = t.column("quadrant");
  const auto has_prompt = std::find(t.header.begin(), t.header.end(), "prompt") != t.header.end();
  std::vector<screening::ClipRecord> out;
  for (const auto& row : t.rows) {
    screening::ClipRecord c;
    c.clip_id = row[id_col];
    c.quadrant = quadrant_from_string(row[q_col]);
    if (has_prompt) c.prompt = row[t.column("prompt")];
    if (audio_dir) c.audio = read_wav(*audio_dir / (c.clip_id + ".wav"));
    out.push_back(std::move(c));
  }
  return out;
}

screening::ScreeningReport screen(const fs::path& clips_csv, const fs::path& ratings_csv,
                                  const std::optional<fs::path>& audio_dir, const PipelineConfig& cfg,
                                  const fs::path& out_dir, unsigned jobs) {
  const auto corpus = load_corpus(clips_csv, audio_dir);
  const auto ratings = screening::load_ratings_csv(ratings_csv.string());
  auto report = screening::screen_library(corpus, ratings, cfg.technical, jobs);
  csv::write_file(out_dir / "screening.json", report.to_json().dump(2) + "\n");
  return report;
}

std::vector<MusicFeatureRow> music_features(const std::vector<screening::ClipRecord>& corpus, unsigned jobs) {
  std::vector<MusicFeatureRow> rows(corpus.size());
  parallel_for(corpus.size(), jobs, [&](std::size_t i) {
    if (!corpus[i].audio) throw Error(ErrorKind::Input, "clip " + corpus[i].clip_id + " has no audio");
    rows[i] = {corpus[i].clip_id, corpus[i].quadrant, audio_features::extract_features(*corpus[i].audio)};
  });
  std::vector<audio_features::StructuralFeatures> feats;
  for (const auto& r : rows) feats.push_back(r.features);
  audio_features::scale_features(feats);
  for (std::size_t i = 0; i < rows.size(); ++i) rows[i].features = feats[i];
  return rows;
}

std::string format_music_features_csv(const std::vector<MusicFeatureRow>& rows) {
  std::string out = "clip_id,quadrant";
  for (auto n : audio_features::kFeatureNames) out += std::string(",") + n;
  for (auto n : audio_features::kFeatureNames) out += std::string(",") + n + "_scaled";
  out += ",mode_label,tempo_low_confidence,mode_low_confidence,pitch_degenerate\n";
  for (const auto& r : rows) {
    out += csv::quote(r.clip_id) + "," + std::string(to_string(r.quadrant));
    for (double v : r.features.raw()) {
      out += ',';
      csv::append_number(out, v);
    }
    for (double v : r.features.scaled) {
      out += ',';
      csv::append_number(out, v);
    }
    out += std::string(",") + audio_features::to_string(r.features.mode);
    out += r.features.tempo_low_confidence ? ",1" : ",0";
    out += r.features.mode_low_confidence ? ",1" : ",0";
    out += r.features.pitch_degenerate ? ",1\n" : ",0\n";
  }
  return out;
}

nlohmann::json music_anova_json(const std::vector<MusicFeatureRow>& rows) {
  audio_features::FeatureGroups groups;
  for (const auto& r : rows) groups[r.quadrant].push_back(r.features.scaled);
  nlohmann::ordered_json j;
  const auto res = audio_features::feature_group_anova(groups);
  for (std::size_t f = 0; f < audio_features::kFeatureCount; ++f) {
    nlohmann::ordered_json e;
    for (const auto& [q, vals] : groups) {
      double m = 0.0;
      for (const auto& v : vals) m += v[f];
      e["mean"][std::string(to_string(q))] = m / static_cast<double>(vals.size());
    }
    e["f"] = std::isfinite(res[f].f) ? nlohmann::json(res[f].f) : nlohmann::json("inf");
    e["p"] = res[f].p;
    e["df_between"] = res[f].df_between;
    e["df_within"] = res[f].df_within;
    j[audio_features::kFeatureNames[f]] = e;
  }
  return j;
}

void run_music_features(const fs::path& clips_csv, const fs::path& audio_dir, const fs::path& out_dir, unsigned jobs) {
  const auto rows = music_features(load_corpus(clips_csv, audio_dir), jobs);
  csv::write_file(out_dir / "music_features.csv", format_music_features_csv(rows));
  csv::write_file(out_dir / "music_anova.json", music_anova_json(rows).dump(2) + "\n");
}

// ---- simulation ------------------------------------------------------------

SimulateSummary simulate(const PipelineConfig& cfg, int subjects, const fs::path& out_dir, unsigned jobs) {
  if (subjects < 1) throw Error(ErrorKind::Usage, "need at least one subject");
  const auto library = session::synthetic_library(cfg.simulate_clips_per_quadrant);
  SimulateSummary summary;
  std::vector<std::vector<fs::path>> dirs(static_cast<std::size_t>(subjects));
  for (int i = 1; i <= subjects; ++i) {
    char id[16];
    std::snprintf(id, sizeof id, "P%02d", i);
    summary.participants.emplace_back(id);
  }
  parallel_for(dirs.size(), jobs, [&](std::size_t i) {
    const std::uint64_t seed = cfg.seed * 1000003ULL + i + 1;
    const auto plan = session::build_plan(summary.participants[i], library, seed);
    const auto p = session::simulate_device(plan, cfg.simulation, seed, cfg.timing, cfg.optical);
    dirs[i] = session::export_dataset(p.machine, p.eeg, p.fnirs, out_dir);
    csv::write_file(out_dir / "participant" / summary.participants[i] / "plan.json", plan.to_json().dump(2) + "\n");
  });
  for (const auto& d : dirs) summary.bundles.insert(summary.bundles.end(), d.begin(), d.end());
  return summary;
}

// ---- preprocessing ------------------------------------------------------------

namespace {

nlohmann::json skipped_json(const std::vector<sigproc::SkippedTrial>& s) {
  nlohmann::json j = nlohmann::json::array();
  for (const auto& t : s) j.push_back({{"trial_id", t.trial_id}, {"reason", t.reason}});
  return j;
}

fs::path relative_session(const fs::path& dir) {
  return fs::path("participant") / dir.parent_path().filename() / dir.filename();
}

void copy_metadata(const fs::path& from, const fs::path& to) {
  for (const char* f : {"manifest.json", "events.jsonl", "ratings.csv", "clips.json"})
    fs::copy_file(from / f, to / f, fs::copy_options::overwrite_existing);
}

}  // namespace

PreprocessSummary preprocess(const fs::path& bundle_root, const fs::path& out_dir, const PipelineConfig& cfg,
                             unsigned jobs) {
  const auto bundles = session::find_bundles(bundle_root);
  if (bundles.empty()) throw Error(ErrorKind::NotFound, "no session bundles under " + bundle_root.string());
  std::vector<nlohmann::json> notes(bundles.size());
  std::vector<std::size_t> epochs(bundles.size());
  parallel_for(bundles.size(), jobs, [&](std::size_t i) {
    const auto b = session::load_bundle(bundles[i]);
    const auto dst = out_dir / relative_session(bundles[i]);
    fs::create_directories(dst / "epochs");
    fs::create_directories(dst / "windows");
    copy_metadata(bundles[i], dst);
    nlohmann::ordered_json note;
    note["session_dir"] = relative_session(bundles[i]).generic_string();

    const auto masked = sigproc::exclude_artifacts(b.eeg, b.events);
    const auto filtered = sigproc::filter_eeg(masked, cfg.filters.eeg_lo, cfg.filters.eeg_hi);
    const auto ep = sigproc::epoch_eeg(filtered, b.events, cfg.epoch);
    sigproc::EpochOptions win;
    win.start_s = cfg.analysis_window_start_s;
    win.end_s = cfg.analysis_window_end_s;
    const auto wins = sigproc::epoch_eeg(filtered, b.events, win);
    for (const auto& e : ep.epochs) csv::write_file(dst / "epochs" / (e.trial_id + ".csv"), recordings::format_epoch(e));
    for (const auto& e : wins.epochs)
      csv::write_file(dst / "windows" / (e.trial_id + ".csv"), recordings::format_epoch(e));
    note["skipped_epochs"] = skipped_json(ep.skipped);
    note["skipped_windows"] = skipped_json(wins.skipped);
    epochs[i] = ep.epochs.size();

    if (b.fnirs.size() > 0) {
      const auto od = sigproc::intensity_to_od(b.fnirs);
      const auto ppg = sigproc::extract_ppg(od, cfg.ppg_source, cfg.filters.ppg_lo, cfg.filters.ppg_hi);
      const auto hemo = sigproc::systemic_filter(sigproc::mbll(od, cfg.optical), cfg.filters.systemic_lo,
                                                 cfg.filters.systemic_hi);
      const auto corrected = sigproc::fnirs_baseline_correct(hemo, b.events, cfg.fnirs_baseline_s);
      csv::write_file(dst / "hemo.csv", recordings::format_hemo(corrected.series));
      csv::write_file(dst / "ppg.csv", recordings::format_ppg(ppg));
      note["baseline_flagged"] = skipped_json(corrected.flagged);
    } else {
      note["baseline_flagged"] = nlohmann::json::array();
      note["fnirs_missing"] = true;
    }
    csv::write_file(dst / "preprocess.json", nlohmann::json(note).dump(2) + "\n");
    notes[i] = note;
  });
  PreprocessSummary s;
  s.sessions = bundles.size();
  s.skipped = nlohmann::json::array();
  for (std::size_t i = 0; i < bundles.size(); ++i) {
    s.epochs += epochs[i];
    s.skipped.push_back(notes[i]);
  }
  log::info("preprocessed sessions", {{"sessions", s.sessions}, {"epochs", s.epochs}});
  return s;
}

// ---- analysis ----------------------------------------------------------------

AnalyzeSummary analyze(const fs::path& root, const fs::path& out_dir, const PipelineConfig& cfg, unsigned jobs) {
  const auto sessions = session::find_bundles(root);
  if (sessions.empty()) throw Error(ErrorKind::NotFound, "no preprocessed sessions under " + root.string());
  std::vector<std::vector<analysis::FeatureRow>> rows(sessions.size());
  std::vector<nlohmann::json> excluded(sessions.size(), nlohmann::json::array());
  parallel_for(sessions.size(), jobs, [&](std::size_t i) {
    const auto& dir = sessions[i];
    const auto manifest = nlohmann::json::parse(csv::read_file(dir / "manifest.json"));
    const auto subject = manifest.at("participant_id").get<std::string>();
    const auto trials = session::parse_ratings_csv(csv::read_file(dir / "ratings.csv"));
    const auto note = nlohmann::json::parse(csv::read_file(dir / "preprocess.json"));
    std::map<std::string, std::string> flagged;
    for (const auto& f : note.at("baseline_flagged")) flagged[f.at("trial_id")] = f.at("reason");
    for (const auto& f : note.at("skipped_windows")) flagged.emplace(f.at("trial_id"), f.at("reason"));
    const bool has_fnirs = fs::exists(dir / "hemo.csv");
    sigproc::HemodynamicSeries hemo;
    sigproc::PpgSeries ppg;
    if (has_fnirs) {
      hemo = recordings::parse_hemo(csv::read_file(dir / "hemo.csv"));
      ppg = recordings::parse_ppg(csv::read_file(dir / "ppg.csv"));
    }
    auto exclude = [&](const std::string& trial, const std::string& reason) {
      excluded[i].push_back({{"subject", subject}, {"trial_id", trial}, {"reason", reason}});
    };
    for (const auto& t : trials) {
      if (!t.rating) {
        exclude(t.trial_id, t.complete ? "unrated" : "incomplete");
        continue;
      }
      if (auto it = flagged.find(t.trial_id); it != flagged.end()) {
        exclude(t.trial_id, it->second);
        continue;
      }
      if (!has_fnirs) {
        exclude(t.trial_id, "fnirs_missing");
        continue;
      }
      const auto win = dir / "windows" / (t.trial_id + ".csv");
      if (!fs::exists(win)) {
        exclude(t.trial_id, "eeg_window_missing");
        continue;
      }
      analysis::FeatureRow r;
      r.trial_id = t.trial_id;
      r.subject = subject;
      r.music = t.music_quadrant;
      r.rating = *t.rating;
      r.label = analysis::derive_label(r.rating, r.music);
      try {
        const auto epoch = recordings::parse_epoch(csv::read_file(win), t.trial_id, t.t_music_on);
        r.eeg_channels = analysis::relative_band_power_per_channel(epoch, sigproc::kEegRate, cfg.bands);
        for (std::size_t b = 0; b < analysis::kBandCount; ++b)
          r.bands[b] = 0.5 * (r.eeg_channels[0][b] + r.eeg_channels[1][b]);
        r.fnirs = analysis::fnirs_features(hemo, t.t_music_on, t.t_music_off, cfg.fnirs_feature_window_s);
        const auto pf = recognition::ppg_features(ppg, t.t_music_on, t.t_music_off, cfg.fnirs_feature_window_s,
                                                  cfg.ppg_refractory_s);
        r.ppg = pf.values;
        if (pf.hr_undefined) log::warn("heart rate undefined; HR features set to 0", {{"subject", subject}, {"trial_id", t.trial_id}});
      } catch (const Error& e) {
        exclude(t.trial_id, e.what());
        continue;
      }
      rows[i].push_back(std::move(r));
    }
  });
  AnalyzeSummary s;
  s.excluded = nlohmann::json::array();
  for (std::size_t i = 0; i < sessions.size(); ++i) {
    s.rows.insert(s.rows.end(), rows[i].begin(), rows[i].end());
    for (const auto& e : excluded[i]) s.excluded.push_back(e);
  }
  if (s.rows.empty()) throw Error(ErrorKind::Data, "no trial produced a complete feature vector");
  s.stats = analysis::stats_report(s.rows, cfg.alpha);
  csv::write_file(out_dir / "features.csv", analysis::format_feature_csv(s.rows));
  csv::write_file(out_dir / "stats.json", s.stats.dump(2) + "\n");
  csv::write_file(out_dir / "exclusions.json", s.excluded.dump(2) + "\n");
  log::info("analyzed trials", {{"rows", s.rows.size()}, {"excluded", s.excluded.size()}});
  return s;
}

recognition::AblationReport classify(const fs::path& features_csv, const fs::path& out_dir, const PipelineConfig& cfg,
                                     unsigned jobs) {
  const auto data = recognition::from_feature_rows(analysis::load_feature_csv(features_csv));
  auto report = recognition::ablation_report(data, cfg.classify, jobs);
  csv::write_file(out_dir / "ablation.json", report.to_json().dump(2) + "\n");
  csv::write_file(out_dir / "ablation.md", report.to_markdown());
  return report;
}

}  // namespace meetbrain::pipeline
