// One line per acceptance criterion: PASS/FAIL, name, measured details.
#include <array>
#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <iostream>
#include <random>
#include <sstream>
#include <string>

#include "meetbrain/analysis.hpp"
#include "meetbrain/audio_features.hpp"
#include "meetbrain/csv.hpp"
#include "meetbrain/error.hpp"
#include "meetbrain/log.hpp"
#include "meetbrain/recognition.hpp"
#include "meetbrain/screening.hpp"
#include "meetbrain/session.hpp"
#include "meetbrain/sigproc.hpp"
#include "meetbrain/stats.hpp"
#include "session_fuzz.hpp"
#include "synth.hpp"

using namespace meetbrain;
namespace fs = std::filesystem;
using Clock = std::chrono::steady_clock;

namespace {

struct Verdict {
  bool pass = true;
  std::ostringstream detail;
  void require(bool ok, const std::string& what) {
    if (!ok) {
      pass = false;
      detail << " [failed: " << what << "]";
    }
  }
};

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

// ---- 1 -----------------------------------------------------------------------

void screening_geometry(Verdict& v) {
  const auto t0 = Clock::now();
  // Oracle in integer tenths: v = i/10, so every comparison is exact.
  auto oracle = [](int vi, int ai, Quadrant q) {
    auto d2 = [&](int cv, int ca) { return (vi - cv) * (vi - cv) + (ai - ca) * (ai - ca); };
    switch (q) {
      case Quadrant::HAHV: return d2(90, 90) <= 800;
      case Quadrant::HALV: return d2(10, 90) <= 800;
      case Quadrant::LALV: return d2(10, 10) <= 34 * 34;
      case Quadrant::LAHV: return d2(90, 10) <= 50 * 50 && vi >= 50 && ai <= 50;
    }
    return false;
  };
  std::size_t disagreements = 0, points = 0, selected = 0;
  for (int vi = 10; vi <= 90; ++vi)
    for (int ai = 10; ai <= 90; ++ai)
      for (auto q : kAllQuadrants) {
        const screening::ClipScore s{"grid", 1.0 + 0.1 * (vi - 10), 1.0 + 0.1 * (ai - 10), 10};
        const bool got = screening::select_clip(s, q);
        disagreements += got != oracle(vi, ai, q);
        selected += got;
        ++points;
      }
  const bool b1 = screening::select_clip({"b", 7.0, 7.0, 1}, Quadrant::HAHV);
  const bool b2 = screening::select_clip({"b", 4.4, 1.0, 5}, Quadrant::LALV);
  const double dt = seconds_since(t0);
  v.detail << points << " grid evaluations, " << disagreements << " disagreements, " << selected
           << " selected; (7,7)->HAHV " << (b1 ? "selected" : "rejected") << ", (4.4,1)->LALV "
           << (b2 ? "selected" : "rejected") << "; " << dt << " s";
  v.require(disagreements == 0, "grid matches oracle");
  v.require(b1 && b2, "boundary points");
  v.require(dt < 1.0, "runtime < 1 s");
}

// ---- 2 -----------------------------------------------------------------------

void mbll_round_trip(Verdict& v) {
  const auto t0 = Clock::now();
  const sigproc::OpticalConstants c;
  std::mt19937_64 rng(2024);
  std::uniform_real_distribution<double> u(-10.0, 10.0);
  const std::size_t n = 10000;
  std::vector<std::array<double, 2>> truth(n);
  sigproc::OpticalDensity od;
  od.timestamps_ms.resize(n);
  for (auto& ch : od.od)
    for (auto& w : ch) w.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    od.timestamps_ms[i] = static_cast<double>(i) * 40.0;
    truth[i] = {u(rng), u(rng)};
    const auto fwd = sigproc::mbll_forward(truth[i][0], truth[i][1], c);
    for (auto& ch : od.od) {
      ch[0][i] = fwd[0];
      ch[1][i] = fwd[1];
    }
  }
  const auto h = sigproc::mbll(od, c);
  double worst = 0.0;
  for (std::size_t ch = 0; ch < sigproc::kFnirsChannels; ++ch)
    for (std::size_t i = 0; i < n; ++i) {
      const double err = std::hypot(h.hbo[ch][i] - truth[i][0], h.hbr[ch][i] - truth[i][1]);
      worst = std::max(worst, err / std::hypot(truth[i][0], truth[i][1]));
    }
  const double dt = seconds_since(t0);
  v.detail << n << " pairs x 8 channels, worst relative error " << worst << "; " << dt << " s";
  v.require(worst < 1e-9, "relative error < 1e-9");
  v.require(dt < 1.0, "runtime < 1 s");
}

// ---- 3 -----------------------------------------------------------------------

double rms_mid(const std::vector<double>& x) {
  const std::size_t a = x.size() / 4, b = 3 * x.size() / 4;
  double s = 0.0;
  for (std::size_t i = a; i < b; ++i) s += x[i] * x[i];
  return std::sqrt(s / static_cast<double>(b - a));
}

int zero_phase_lag(double lo, double hi, double fs, double seconds) {
  const double fc = std::sqrt(std::max(lo, 1e-3) * hi);
  const auto x = synth::sine(fc, fs, static_cast<std::size_t>(seconds * fs));
  const auto y = sigproc::bandpass(x, lo, hi, fs);
  int best = 0;
  double best_v = -1e300;
  const int span = static_cast<int>(fs / fc / 2.0);
  for (int lag = -span; lag <= span; ++lag) {
    double acc = 0.0;
    for (std::size_t i = x.size() / 4; i < 3 * x.size() / 4; ++i)
      acc += x[i] * y[static_cast<std::size_t>(static_cast<long>(i) + lag)];
    if (acc > best_v) best_v = acc, best = lag;
  }
  return best;
}

void filters(Verdict& v) {
  const auto eeg_in = synth::sine(10, 250, 250 * 30);
  const double eeg_gain = rms_mid(sigproc::bandpass(eeg_in, 0.1, 40, 250)) / rms_mid(eeg_in);
  const auto cardiac = synth::sine(1.0, 25, 25 * 1200);
  const double sys_db = 20 * std::log10(rms_mid(sigproc::bandpass(cardiac, 0.01, 0.1, 25)) / rms_mid(cardiac));
  const auto drift = synth::sine(0.05, 25, 25 * 1200);
  const double ppg_db = 20 * std::log10(rms_mid(sigproc::bandpass(drift, 0.5, 4, 25)) / rms_mid(drift));
  const int lag_eeg = zero_phase_lag(0.1, 40, 250, 120);
  const int lag_ppg = zero_phase_lag(0.5, 4, 25, 120);
  const int lag_sys = zero_phase_lag(0.01, 0.1, 25, 2400);
  v.detail << "10 Hz gain " << eeg_gain << ", 1 Hz through systemic " << sys_db << " dB, 0.05 Hz through PPG "
           << ppg_db << " dB, centre lags " << lag_eeg << "/" << lag_ppg << "/" << lag_sys << " samples";
  v.require(std::abs(eeg_gain - 1.0) <= 0.05, "10 Hz within 5%");
  v.require(sys_db <= -20.0, "systemic attenuation");
  v.require(ppg_db <= -20.0, "PPG attenuation");
  v.require(lag_eeg == 0 && lag_ppg == 0 && lag_sys == 0, "zero lag");
}

// ---- 4 -----------------------------------------------------------------------

void band_power(Verdict& v) {
  const auto tone = synth::sine(10, 250, 7500, 15);
  const auto pure = analysis::relative_band_power(synth::eeg_epoch(tone, tone));

  const auto a = synth::white_noise(7500, 77, 4.0), b = synth::sine(21, 250, 7500, 3.0);
  const auto ref = analysis::relative_band_power(synth::eeg_epoch(a, b));
  double scale_err = 0.0;
  for (double k : {1e-6, 0.37, 42.0, 9.9e5}) {
    auto sa = a, sb = b;
    for (auto& x : sa) x *= k;
    for (auto& x : sb) x *= k;
    const auto s = analysis::relative_band_power(synth::eeg_epoch(sa, sb));
    for (std::size_t i = 0; i < analysis::kBandCount; ++i) scale_err = std::max(scale_err, std::abs(s[i] - ref[i]));
  }

  const analysis::BandEdges edges;
  const double full = edges.full[1] - edges.full[0];
  std::array<double, analysis::kBandCount> mean{};
  double worst_draw = 0.0;
  const int draws = 100;
  for (std::uint64_t seed = 0; seed < draws; ++seed) {
    const auto p = analysis::relative_band_power(
        synth::eeg_epoch(synth::white_noise(7500, seed * 2 + 1), synth::white_noise(7500, seed * 2 + 2)));
    for (std::size_t i = 0; i < analysis::kBandCount; ++i) {
      const double expect = (edges.bands[i][1] - edges.bands[i][0]) / full;
      mean[i] += p[i] / draws;
      worst_draw = std::max(worst_draw, std::abs(p[i] / expect - 1.0));
    }
  }
  double worst = 0.0;
  for (std::size_t i = 0; i < analysis::kBandCount; ++i)
    worst = std::max(worst, std::abs(mean[i] * full / (edges.bands[i][1] - edges.bands[i][0]) - 1.0));
  v.detail << "10 Hz alpha fraction " << pure[2] << ", scaling deviation " << scale_err
           << ", white noise mean band deviation " << 100.0 * worst << "% over " << draws
           << " seeds (worst single draw " << 100.0 * worst_draw << "%)";
  v.require(pure[2] > 0.9, "alpha > 0.9");
  v.require(scale_err <= 1e-9, "scale invariance");
  v.require(worst <= 0.30, "white noise within 30%");
}

// ---- 5 -----------------------------------------------------------------------

void statistics(Verdict& v) {
  // Frozen from tests/oracles/stats_reference.py (SciPy).
  struct Table {
    std::vector<std::vector<double>> groups;
    double f, p;
    std::vector<double> tukey_p;
  };
  const Table tables[] = {
      {{{1, 2, 3}, {2, 3, 4}, {10, 11, 12}},
       73.0,
       6.1506779413908729e-05,
       {0.48272727950311844, 8.1843905931910932e-05, 0.00016024787863200274}},
      {{{4.2, 5.1, 3.9, 4.8, 5.5, 4.4}, {5.0, 6.2, 5.8, 6.6, 5.1}, {3.1, 2.7, 4.0, 3.3, 2.9, 3.8, 3.5}, {4.9, 5.3, 4.1, 5.7}},
       17.185246309453746,
       1.6064198177465538e-05,
       {0.034281284212269836, 0.0044694300467753578, 0.80092612143082809, 1.0507622025590635e-05,
        0.28489639359552543, 0.0015556864234321788}},
      {{{0.12, -0.35, 0.41, -0.08, 0.27, -0.19, 0.05, 0.33},
        {-0.22, 0.18, 0.09, -0.41, 0.36, 0.02, -0.13, 0.25},
        {10.1, 9.7, 10.4, 9.9, 10.2, 9.8, 10.3, 10.0}},
       4073.3122298504672,
       6.4017263192113853e-28,
       {0.91184361342206244, 0.0, 0.0}}};
  struct Corr {
    std::vector<double> x, y;
    double r, p;
  };
  const Corr corrs[] = {
      {{1, 2, 3, 4, 5, 6, 7, 8, 9, 10}, {2.1, 3.9, 6.2, 7.8, 10.1, 12.2, 13.8, 16.1, 18.0, 19.9}, 0.99969100321235826,
       3.9868773129948064e-14},
      {{3, 7, 5, 8, 2, 6, 4, 9, 1, 5, 6, 7}, {6, 5, 7, 4, 5, 8, 3, 6, 5, 4, 7, 6}, 0.1690880332379161,
       0.59934499989894174},
      {{0.5, 1.5, 2.0, 3.5, 4.0, 5.5, 6.0}, {9.0, 7.5, 7.9, 5.1, 5.6, 2.2, 2.9}, -0.97240164007420682,
       0.00023944767986619917}};
  double f_err = 0.0, p_err = 0.0, r_err = 0.0;
  for (const auto& t : tables) {
    const auto a = stats::one_way_anova(t.groups);
    f_err = std::max(f_err, std::abs(a.f - t.f) / std::max(1.0, std::abs(t.f)));
    p_err = std::max(p_err, std::abs(a.p - t.p));
    const auto pairs = stats::tukey_hsd(t.groups);
    for (std::size_t i = 0; i < pairs.size(); ++i) p_err = std::max(p_err, std::abs(pairs[i].p - t.tukey_p[i]));
  }
  for (const auto& c : corrs) {
    const auto r = stats::pearson(c.x, c.y);
    r_err = std::max(r_err, std::abs(r.r - c.r));
    p_err = std::max(p_err, std::abs(r.p - c.p));
  }
  v.detail << "3 ANOVA/Tukey tables + 3 Pearson pairs: max F error " << f_err << " (relative to max(1,|F|)), max r error "
           << r_err << ", max p error " << p_err;
  v.require(f_err <= 1e-9, "F within 1e-9");
  v.require(r_err <= 1e-9, "r within 1e-9");
  v.require(p_err <= 1e-6, "p within 1e-6");
}

// ---- 6 -----------------------------------------------------------------------

void label_rule(Verdict& v) {
  std::size_t mismatches = 0, fallbacks = 0, cases = 0;
  for (int val = 1; val <= 9; ++val)
    for (int aro = 1; aro <= 9; ++aro)
      for (auto music : kAllQuadrants) {
        const bool vh = val == 5 ? high_valence(music) : val > 5;
        const bool ah = aro == 5 ? high_arousal(music) : aro > 5;
        const auto got = analysis::derive_label({val, aro, 5}, music);
        const bool fb = val == 5 || aro == 5;
        mismatches += got.quadrant != make_quadrant(ah, vh) || got.valence_high != vh || got.arousal_high != ah ||
                      (got.source != analysis::LabelSource::SelfReport) != fb;
        fallbacks += fb;
        ++cases;
      }
  const auto ex = analysis::derive_label({7, 3, 5}, Quadrant::HALV);
  v.detail << cases << " cases (" << fallbacks << " with a score of 5), " << mismatches
           << " mismatches; (valence 7, arousal 3) -> " << to_string(ex.quadrant);
  v.require(mismatches == 0, "brute force agreement");
  v.require(ex.quadrant == Quadrant::LAHV, "example LAHV");
}

// ---- 7 -----------------------------------------------------------------------

void audio(Verdict& v) {
  using namespace audio_features;
  const double bpm = estimate_tempo(synth::click_track(0.5, 12)).bpm;
  const auto maj = detect_mode(synth::chord({60, 64, 67}, 3)).mode;
  const auto min = detect_mode(synth::chord({60, 63, 67}, 3)).mode;
  const auto up = synth::sweep(220, 440, 4);
  const double range = pitch_range(up).semitones;
  const double dir = melodic_direction(up).value;
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(-300, 300);
  bool exact = true;
  for (int k = 0; k < 100; ++k) {
    std::vector<double> corpus(3 + k % 20);
    for (auto& x : corpus) x = u(rng);
    const auto s = scale_to_range(corpus);
    exact &= *std::min_element(s.begin(), s.end()) == 1.0 && *std::max_element(s.begin(), s.end()) == 7.0;
  }
  v.detail << "click track " << bpm << " BPM, C major -> " << to_string(maj) << ", C minor -> " << to_string(min)
           << ", octave sweep " << range << " semitones, ascending direction " << dir << ", scaling endpoints "
           << (exact ? "exact" : "inexact");
  v.require(std::abs(bpm - 120.0) <= 2.0, "tempo");
  v.require(maj == Mode::Major && min == Mode::Minor, "mode");
  v.require(std::abs(range - 12.0) <= 0.5, "pitch range");
  v.require(dir == 0.0, "melodic direction");
  v.require(exact, "scaling endpoints");
}

// ---- 8 -----------------------------------------------------------------------

void end_to_end(Verdict& v) {
  const auto dir = fs::temp_directory_path() / "meetbrain_acceptance_e2e";
  fs::remove_all(dir);
  fs::create_directories(dir);
  const std::string cli = MEETBRAIN_CLI;
  const std::string quiet = " --quiet > /dev/null";
  const auto t0 = Clock::now();
  const std::string steps[] = {
      cli + " simulate --subjects 5 --seed 7 --out-dir " + (dir / "bundles").string() + quiet,
      cli + " preprocess --input " + (dir / "bundles").string() + " --out-dir " + (dir / "pre").string() + quiet,
      cli + " analyze --input " + (dir / "pre").string() + " --out-dir " + (dir / "ana").string() + quiet,
      cli + " classify --features " + (dir / "ana/features.csv").string() + " --out-dir " + (dir / "cls").string() + quiet};
  for (const auto& s : steps)
    if (std::system(s.c_str()) != 0) {
      v.require(false, "command failed: " + s);
      return;
    }
  const double dt = seconds_since(t0);
  const auto report = nlohmann::json::parse(csv::read_file(dir / "cls/ablation.json"));
  std::size_t cells = 0;
  bool shaped = true;
  for (const auto& [protocol, targets] : report.at("protocols").items())
    for (const auto& [target, entry] : targets.items())
      for (const auto& [combo, c] : entry.at("cells").items()) {
        ++cells;
        shaped &= c.contains("acc_mean") && c.contains("acc_sd") && c.contains("mf1_mean") && c.contains("mf1_sd");
      }
  const auto& loso = report.at("protocols").at("loso");
  const double fused_valence = loso.at("valence").at("cells").at("EEG+PPG+Hb").at("acc_mean");
  const double fused_arousal = loso.at("arousal").at("cells").at("EEG+PPG+Hb").at("acc_mean");
  const auto md = csv::read_file(dir / "cls/ablation.md");
  v.detail << "simulate -> preprocess -> analyze -> classify in " << dt << " s; fused LOSO ACC valence "
           << fused_valence << ", arousal " << fused_arousal << "; " << cells << " grid cells";
  v.require(dt < 300.0, "runtime < 5 min");
  v.require(fused_valence >= 0.95 && fused_arousal >= 0.95, "fused LOSO ACC >= 0.95");
  v.require(cells == 24 && shaped, "6 x 2 x 2 mean/SD grid");
  v.require(md.find("±") != std::string::npos, "markdown mean±SD cells");
}

// ---- 9 -----------------------------------------------------------------------

void session_machine(Verdict& v) {
  const auto plan = session::build_plan("P01", session::synthetic_library(5), 11);
  std::size_t illegal = 0, timing = 0, window = 0, attempted = 0, rejected = 0;
  for (std::uint64_t seed = 0; seed < 1000; ++seed) {
    const auto o = fuzz::run(plan, seed);
    illegal += o.illegal_transition;
    timing += o.timing_error;
    window += o.window_violation;
    attempted += o.ratings_attempted;
    rejected += o.ratings_rejected;
  }

  session::SessionMachine m(plan);
  m.start(0);
  m.advance(5000);
  const bool prep_ok = m.state().phase == session::Phase::Playback;
  m.advance(65000);
  const bool play_ok = m.state().phase == session::Phase::Rating;
  m.record_rating(70000, "s1b1t1", {7, 8, 6});
  const bool rest_ok = m.state().phase_deadline == 85000.0;

  const auto sim = session::simulate_device(plan, {}, 3);
  const auto dir = fs::temp_directory_path() / "meetbrain_acceptance_bundle";
  fs::remove_all(dir);
  const auto dirs = session::export_dataset(sim.machine, sim.eeg, sim.fnirs, dir);
  const auto mem = session::make_bundles(sim.machine, sim.eeg, sim.fnirs);
  bool lossless = dirs.size() == mem.size();
  for (std::size_t k = 0; lossless && k < dirs.size(); ++k) {
    const auto b = session::load_bundle(dirs[k]);
    lossless = b.events.events == mem[k].events.events && b.eeg.timestamps_ms == mem[k].eeg.timestamps_ms &&
               b.eeg.channels == mem[k].eeg.channels && b.fnirs.timestamps_ms == mem[k].fnirs.timestamps_ms &&
               b.fnirs.intensity == mem[k].fnirs.intensity && b.trials == mem[k].trials;
  }
  v.detail << "1000 interleavings: " << illegal << " illegal transitions, " << timing << " timing deviations, " << window
           << " rating-window violations (" << rejected << "/" << attempted << " ratings rejected); 5/60/15 s phases "
           << (prep_ok && play_ok && rest_ok ? "exact" : "off") << "; bundle round trip "
           << (lossless ? "lossless" : "lossy") << "; headless, no UI built";
  v.require(illegal == 0, "no illegal transitions");
  v.require(timing == 0 && prep_ok && play_ok && rest_ok, "phase durations");
  v.require(window == 0, "out-of-window ratings rejected");
  v.require(lossless, "export/import lossless");
}

}  // namespace

int main() {
  log::set_min_level(log::Level::Error);
  const std::pair<const char*, std::function<void(Verdict&)>> criteria[] = {
      {"screening-geometry", screening_geometry}, {"mbll-round-trip", mbll_round_trip},
      {"filters", filters},                       {"relative-band-power", band_power},
      {"statistics-oracle", statistics},          {"label-rule", label_rule},
      {"audio-features", audio},                  {"end-to-end-synthetic-study", end_to_end},
      {"session-state-machine", session_machine}};
  int failures = 0;
  for (const auto& [name, fn] : criteria) {
    Verdict v;
    try {
      fn(v);
    } catch (const std::exception& e) {
      v.pass = false;
      v.detail << " [exception: " << e.what() << "]";
    }
    failures += !v.pass;
    std::cout << (v.pass ? "PASS " : "FAIL ") << name << ": " << v.detail.str() << std::endl;
  }
  std::cout << (9 - failures) << "/9 criteria passed" << std::endl;
  return failures == 0 ? 0 : 1;
}
