#include "meetbrain/config.hpp"

#include <functional>

#include "meetbrain/csv.hpp"
#include "meetbrain/error.hpp"

namespace meetbrain {

namespace {

const char* ppg_source_name(sigproc::PpgSource s) {
  switch (s) {
    case sigproc::PpgSource::Wavelength850: return "850nm";
    case sigproc::PpgSource::Wavelength735: return "735nm";
    case sigproc::PpgSource::Average: return "average";
  }
  return "?";
}

sigproc::PpgSource ppg_source_from(const std::string& s) {
  for (auto v : {sigproc::PpgSource::Wavelength850, sigproc::PpgSource::Wavelength735, sigproc::PpgSource::Average})
    if (s == ppg_source_name(v)) return v;
  throw Error(ErrorKind::Config, "unknown PPG source '" + s + "'");
}

// Every key in `patch` must exist in `base`, recursively through objects.
void check_keys(const nlohmann::json& base, const nlohmann::json& patch, const std::string& path) {
  if (!patch.is_object()) return;
  for (auto it = patch.begin(); it != patch.end(); ++it) {
    const auto key = path.empty() ? it.key() : path + "." + it.key();
    if (!base.contains(it.key())) throw Error(ErrorKind::Config, "unknown config key '" + key + "'");
    if (base.at(it.key()).is_object()) check_keys(base.at(it.key()), it.value(), key);
  }
}

}  // namespace

nlohmann::json PipelineConfig::to_json() const {
  nlohmann::ordered_json j;
  j["seed"] = seed;
  j["prompts"] = {{"count", prompts.count},
                  {"template", prompts.template_text},
                  {"lexicon_path", prompts.lexicon_path},
                  {"duration_s", prompts.duration_s}};
  j["screening"] = {{"spike_threshold", technical.spike_threshold},
                    {"silence_rms_db", technical.silence_rms_db},
                    {"silence_max_s", technical.silence_max_s},
                    {"frame_s", technical.frame_s}};
  j["filters"] = {{"eeg_hz", {filters.eeg_lo, filters.eeg_hi}},
                  {"ppg_hz", {filters.ppg_lo, filters.ppg_hi}},
                  {"systemic_hz", {filters.systemic_lo, filters.systemic_hi}}};
  j["epoch"] = {{"start_s", epoch.start_s},
                {"end_s", epoch.end_s},
                {"baseline", epoch.baseline == sigproc::BaselineMode::EpochMean ? "epoch_mean" : "prestimulus"},
                {"prestimulus_s", epoch.prestimulus_s}};
  j["analysis"] = {{"eeg_window_s", {analysis_window_start_s, analysis_window_end_s}},
                   {"fnirs_baseline_s", fnirs_baseline_s},
                   {"fnirs_feature_window_s", fnirs_feature_window_s},
                   {"ppg_source", ppg_source_name(ppg_source)},
                   {"ppg_refractory_s", ppg_refractory_s},
                   {"bands", bands.to_json()},
                   {"alpha", alpha}};
  j["optical"] = optical.to_json();
  j["classify"] = classify.to_json();
  j["session"] = timing.to_json();
  j["simulate"] = {{"subjects", simulate_subjects},
                   {"clips_per_quadrant", simulate_clips_per_quadrant},
                   {"profile", simulation.to_json()}};
  return j;
}

PipelineConfig PipelineConfig::from_json(const nlohmann::json& patch) {
  auto j = PipelineConfig{}.to_json();
  check_keys(j, patch, "");
  j.merge_patch(patch);
  PipelineConfig c;
  try {
    c.seed = j.at("seed").get<std::uint64_t>();
    const auto& p = j.at("prompts");
    c.prompts.count = p.at("count").get<std::size_t>();
    c.prompts.template_text = p.at("template").get<std::string>();
    c.prompts.lexicon_path = p.at("lexicon_path").get<std::string>();
    c.prompts.duration_s = p.at("duration_s").get<double>();
    const auto& s = j.at("screening");
    c.technical.spike_threshold = s.at("spike_threshold").get<double>();
    c.technical.silence_rms_db = s.at("silence_rms_db").get<double>();
    c.technical.silence_max_s = s.at("silence_max_s").get<double>();
    c.technical.frame_s = s.at("frame_s").get<double>();
    const auto& f = j.at("filters");
    c.filters.eeg_lo = f.at("eeg_hz").at(0).get<double>();
    c.filters.eeg_hi = f.at("eeg_hz").at(1).get<double>();
    c.filters.ppg_lo = f.at("ppg_hz").at(0).get<double>();
    c.filters.ppg_hi = f.at("ppg_hz").at(1).get<double>();
    c.filters.systemic_lo = f.at("systemic_hz").at(0).get<double>();
    c.filters.systemic_hi = f.at("systemic_hz").at(1).get<double>();
    const auto& e = j.at("epoch");
    c.epoch.start_s = e.at("start_s").get<double>();
    c.epoch.end_s = e.at("end_s").get<double>();
    const auto mode = e.at("baseline").get<std::string>();
    if (mode == "epoch_mean") c.epoch.baseline = sigproc::BaselineMode::EpochMean;
    else if (mode == "prestimulus") c.epoch.baseline = sigproc::BaselineMode::PreStimulus;
    else throw Error(ErrorKind::Config, "epoch.baseline must be epoch_mean or prestimulus");
    c.epoch.prestimulus_s = e.at("prestimulus_s").get<double>();
    const auto& a = j.at("analysis");
    c.analysis_window_start_s = a.at("eeg_window_s").at(0).get<double>();
    c.analysis_window_end_s = a.at("eeg_window_s").at(1).get<double>();
    c.fnirs_baseline_s = a.at("fnirs_baseline_s").get<double>();
    c.fnirs_feature_window_s = a.at("fnirs_feature_window_s").get<double>();
    c.ppg_source = ppg_source_from(a.at("ppg_source").get<std::string>());
    c.ppg_refractory_s = a.at("ppg_refractory_s").get<double>();
    c.bands = analysis::BandEdges::from_json(a.at("bands"));
    c.alpha = a.at("alpha").get<double>();
    c.optical = sigproc::OpticalConstants::from_json(j.at("optical"));
    c.classify = recognition::AblationOptions::from_json(j.at("classify"));
    c.timing = session::Timing::from_json(j.at("session"));
    const auto& sim = j.at("simulate");
    c.simulate_subjects = sim.at("subjects").get<int>();
    c.simulate_clips_per_quadrant = sim.at("clips_per_quadrant").get<int>();
    c.simulation = session::SimulationProfile::from_json(sim.at("profile"));
  } catch (const nlohmann::json::exception& ex) {
    throw Error(ErrorKind::Config, std::string("invalid config: ") + ex.what());
  }
  if (!(c.epoch.end_s > c.epoch.start_s) || !(c.analysis_window_end_s > c.analysis_window_start_s))
    throw Error(ErrorKind::Config, "windows must have end > start");
  if (c.simulate_subjects < 1 || c.simulate_clips_per_quadrant < 1)
    throw Error(ErrorKind::Config, "simulate.subjects and simulate.clips_per_quadrant must be positive");
  if (c.prompts.count < 1) throw Error(ErrorKind::Config, "prompts.count must be positive");
  return c;
}

PipelineConfig PipelineConfig::load(const std::filesystem::path& path) {
  try {
    return from_json(nlohmann::json::parse(csv::read_file(path)));
  } catch (const nlohmann::json::parse_error& e) {
    throw Error(ErrorKind::Config, path.string() + ": " + e.what());
  }
}

}  // namespace meetbrain
