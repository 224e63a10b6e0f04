#include <csignal>
#include <cstdio>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "meetbrain/config.hpp"
#include "meetbrain/csv.hpp"
#include "meetbrain/error.hpp"
#include "meetbrain/log.hpp"
#include "meetbrain/pipeline.hpp"
#include "meetbrain/session_server.hpp"
#include "meetbrain/session_store.hpp"

namespace fs = std::filesystem;
using namespace meetbrain;

namespace {

int fail(std::string_view kind, const std::string& message, int code) {
  nlohmann::json j = {{"error", {{"kind", kind}, {"message", message}}}};
  std::cerr << j.dump() << '\n';
  return code;
}

void print_json(const nlohmann::json& j) { std::cout << j.dump(2) << '\n'; }

session::SessionServer* g_server = nullptr;

void on_signal(int) {
  if (g_server) g_server->stop();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"meetbrain: music-evoked emotion data pipeline"};
  app.require_subcommand(0, 1);
  app.fallthrough();

  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::string out_dir = ".";
  unsigned jobs = 0;
  bool log_json = false, dump_config = false, quiet = false;
  app.add_option("--config", config_path, "JSON config file")->check(CLI::ExistingFile);
  app.add_option("--seed", seed, "Master seed (overrides config)");
  app.add_option("--out-dir", out_dir, "Output directory");
  app.add_option("--jobs", jobs, "Worker threads (0 = available parallelism)");
  app.add_flag("--log-json", log_json, "Emit logs as JSON lines on stderr");
  app.add_flag("--quiet", quiet, "Suppress informational logs");
  app.add_flag("--dump-config", dump_config, "Print the effective config and exit");

  // prompts
  auto* prompts = app.add_subcommand("prompts", "Enumerate and render prompts per quadrant");
  std::optional<std::size_t> prompt_count;
  bool all_quadrants = false;
  std::vector<std::string> quadrant_names;
  std::string stub_dir, generate_url, lexicon_path, template_text;
  std::optional<double> duration;
  prompts->add_option("--count", prompt_count, "Prompts per quadrant");
  prompts->add_flag("--all-quadrants", all_quadrants, "Generate for HAHV, HALV, LAHV and LALV");
  prompts->add_option("--quadrant", quadrant_names, "Quadrant (repeatable)");
  prompts->add_option("--lexicon", lexicon_path, "Lexicon JSON file")->check(CLI::ExistingFile);
  prompts->add_option("--template", template_text, "Prompt template");
  prompts->add_option("--duration", duration, "Clip duration in seconds");
  auto* stub_opt = prompts->add_option("--stub-dir", stub_dir, "Generate audio from a stub directory");
  prompts->add_option("--generate-url", generate_url, "Generate audio through an HTTP service")->excludes(stub_opt);

  // screen
  auto* screen = app.add_subcommand("screen", "Technical and geometric clip screening");
  std::string clips_csv, ratings_csv, audio_dir;
  std::optional<double> spike, silence_db, silence_s;
  screen->add_option("--clips", clips_csv, "clips.csv")->required()->check(CLI::ExistingFile);
  screen->add_option("--ratings", ratings_csv, "Evaluator ratings CSV")->required()->check(CLI::ExistingFile);
  screen->add_option("--audio-dir", audio_dir, "Directory of <clip_id>.wav")->check(CLI::ExistingDirectory);
  screen->add_option("--spike-threshold", spike, "Frame peak ratio for abrupt noise");
  screen->add_option("--silence-rms-db", silence_db, "Silence RMS level in dBFS");
  screen->add_option("--silence-max-s", silence_s, "Longest tolerated silence");

  // music-features
  auto* music = app.add_subcommand("music-features", "Structural audio features and quadrant ANOVA");
  std::string music_clips, music_audio;
  music->add_option("--clips", music_clips, "clips.csv")->required()->check(CLI::ExistingFile);
  music->add_option("--audio-dir", music_audio, "Directory of <clip_id>.wav")->required()->check(CLI::ExistingDirectory);

  // preprocess / analyze / classify
  auto* pre = app.add_subcommand("preprocess", "EEG and fNIRS preprocessing of session bundles");
  std::string pre_input;
  pre->add_option("--input", pre_input, "Bundle root (contains participant/)")->required()->check(CLI::ExistingDirectory);
  auto* ana = app.add_subcommand("analyze", "Labels, features and statistics");
  std::string ana_input;
  ana->add_option("--input", ana_input, "Preprocessed root")->required()->check(CLI::ExistingDirectory);
  auto* cls = app.add_subcommand("classify", "Modality ablation grid");
  std::string features_csv;
  cls->add_option("--features", features_csv, "features.csv")->required()->check(CLI::ExistingFile);

  // serve
  auto* serve = app.add_subcommand("serve", "Session HTTP API");
  std::string host = "127.0.0.1", state_dir = "state", clip_dir = "clips", export_dir, library_json;
  int port = 8080;
  serve->add_option("--host", host);
  serve->add_option("--port", port);
  serve->add_option("--state-dir", state_dir, "Journal directory");
  serve->add_option("--clip-dir", clip_dir, "Directory of <clip_id>.wav served to clients");
  serve->add_option("--export-dir", export_dir, "Bundle root for exports (default: --out-dir)");
  serve->add_option("--library", library_json, "screening.json enabling plan-less sessions")->check(CLI::ExistingFile);

  // simulate
  auto* sim = app.add_subcommand("simulate", "Synthetic participants end-to-end");
  std::optional<int> subjects;
  sim->add_option("--subjects", subjects, "Number of participants");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    return fail("usage", e.what(), 2);
  }

  log::set_json(log_json);
  if (quiet) log::set_min_level(log::Level::Warn);

  try {
    PipelineConfig cfg = config_path.empty() ? PipelineConfig{} : PipelineConfig::load(config_path);
    if (seed) cfg.seed = *seed;
    if (prompt_count) cfg.prompts.count = *prompt_count;
    if (!lexicon_path.empty()) cfg.prompts.lexicon_path = lexicon_path;
    if (!template_text.empty()) cfg.prompts.template_text = template_text;
    if (duration) cfg.prompts.duration_s = *duration;
    if (spike) cfg.technical.spike_threshold = *spike;
    if (silence_db) cfg.technical.silence_rms_db = *silence_db;
    if (silence_s) cfg.technical.silence_max_s = *silence_s;
    if (subjects) cfg.simulate_subjects = *subjects;
    cfg = PipelineConfig::from_json(cfg.to_json());  // re-validates overrides

    if (dump_config) {
      print_json(cfg.to_json());
      return 0;
    }
    if (app.get_subcommands().empty()) throw Error(ErrorKind::Usage, "a subcommand is required");
    const fs::path out = out_dir;
    fs::create_directories(out);

    if (*prompts) {
      std::vector<Quadrant> qs;
      if (all_quadrants) qs.assign(kAllQuadrants.begin(), kAllQuadrants.end());
      for (const auto& n : quadrant_names) qs.push_back(quadrant_from_string(n));
      if (qs.empty()) throw Error(ErrorKind::Usage, "give --quadrant or --all-quadrants");
      const auto specs = pipeline::make_prompts(cfg, qs);
      pipeline::write_prompts(specs, out);
      if (!stub_dir.empty()) {
        promptgen::StubGenerationClient client(stub_dir);
        pipeline::generate_audio(specs, client, cfg.prompts.duration_s, out, jobs);
      } else if (!generate_url.empty()) {
        promptgen::HttpGenerationClient client(generate_url);
        pipeline::generate_audio(specs, client, cfg.prompts.duration_s, out, jobs);
      }
      print_json({{"prompts", specs.size()}, {"out_dir", out.string()}});
    } else if (*screen) {
      std::optional<fs::path> audio;
      if (!audio_dir.empty()) audio = audio_dir;
      const auto report = pipeline::screen(clips_csv, ratings_csv, audio, cfg, out, jobs);
      nlohmann::ordered_json counts;
      for (auto q : kAllQuadrants) {
        auto it = report.selected.find(q);
        counts[std::string(to_string(q))] = it == report.selected.end() ? 0 : it->second.size();
      }
      print_json({{"retained_technical", report.retained_technical.size()},
                  {"selected", counts},
                  {"rejected", report.rejected.size()}});
    } else if (*music) {
      pipeline::run_music_features(music_clips, music_audio, out, jobs);
      print_json({{"out_dir", out.string()}});
    } else if (*pre) {
      const auto s = pipeline::preprocess(pre_input, out, cfg, jobs);
      print_json({{"sessions", s.sessions}, {"epochs", s.epochs}});
    } else if (*ana) {
      const auto s = pipeline::analyze(ana_input, out, cfg, jobs);
      print_json({{"trials", s.rows.size()}, {"excluded", s.excluded.size()}});
    } else if (*cls) {
      const auto r = pipeline::classify(features_csv, out, cfg, jobs);
      std::cout << r.to_markdown();
    } else if (*sim) {
      const auto s = pipeline::simulate(cfg, cfg.simulate_subjects, out, jobs);
      print_json({{"participants", s.participants}, {"bundles", s.bundles.size()}});
    } else if (*serve) {
      session::SystemClock clock;
      session::SessionManager manager(state_dir, clock, cfg.timing, cfg.seed);
      session::ServerOptions opts;
      opts.clip_dir = clip_dir;
      opts.export_dir = export_dir.empty() ? out : fs::path(export_dir);
      opts.plan_seed = cfg.seed;
      if (!library_json.empty())
        opts.library = screening::ScreeningReport::from_json(nlohmann::json::parse(csv::read_file(library_json)));
      session::SessionServer server(manager, opts);
      g_server = &server;
      std::signal(SIGINT, on_signal);
      std::signal(SIGTERM, on_signal);
      log::info("serving", {{"host", host}, {"port", port}});
      if (!server.listen(host, port)) throw Error(ErrorKind::Transport, "could not listen on " + host);
      g_server = nullptr;
    }
  } catch (const Error& e) {
    return fail(to_string(e.kind()), e.what(), e.kind() == ErrorKind::Usage ? 2 : 1);
  } catch (const nlohmann::json::exception& e) {
    return fail("input", e.what(), 1);
  } catch (const std::exception& e) {
    return fail("internal", e.what(), 1);
  }
  return 0;
}
