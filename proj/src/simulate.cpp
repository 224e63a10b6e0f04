#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

#include "meetbrain/error.hpp"
#include "meetbrain/session.hpp"

namespace meetbrain::session {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

class Noise {
 public:
  explicit Noise(std::uint64_t seed) : gen_(seed) {}
  double uniform() { return static_cast<double>(gen_() >> 11) * 0x1.0p-53; }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  int integer(int lo, int hi) { return lo + static_cast<int>(uniform() * (hi - lo + 1)); }
  double gaussian() {
    if (spare_) {
      spare_ = false;
      return cached_;
    }
    double u = 0.0;
    while (u <= 0.0) u = uniform();
    const double v = uniform();
    const double r = std::sqrt(-2.0 * std::log(u));
    cached_ = r * std::sin(kTwoPi * v);
    spare_ = true;
    return r * std::cos(kTwoPi * v);
  }

 private:
  std::mt19937_64 gen_;
  bool spare_ = false;
  double cached_ = 0.0;
};

int draw_score(Noise& rng, bool high, double fallback_p) {
  if (rng.uniform() < fallback_p) return 5;
  return high ? rng.integer(6, 9) : rng.integer(1, 4);
}

// Raised-cosine envelope: rises over `ramp` ms from on, falls over `ramp` ms after off.
double envelope(double t, double on, double off, double ramp) {
  if (t < on || t >= off + ramp) return 0.0;
  if (t < on + ramp) return 0.5 - 0.5 * std::cos(std::numbers::pi * (t - on) / ramp);
  if (t < off) return 1.0;
  return 0.5 + 0.5 * std::cos(std::numbers::pi * (t - off) / ramp);
}

}  // namespace

nlohmann::json SimulationProfile::to_json() const {
  return {{"eeg_noise_uv", eeg_noise_uv},
          {"alpha_uv", alpha_uv},
          {"beta_uv", beta_uv},
          {"hbo_response_um", hbo_response_um},
          {"cardiac_low_hz", cardiac_low_hz},
          {"cardiac_high_hz", cardiac_high_hz},
          {"cardiac_od", cardiac_od},
          {"mayer_od", mayer_od},
          {"optical_noise_od", optical_noise_od},
          {"fallback_probability", fallback_probability},
          {"rating_delay_s", rating_delay_s},
          {"arithmetic_delay_s", arithmetic_delay_s},
          {"inter_session_gap_s", inter_session_gap_s},
          {"subject_gain_spread", subject_gain_spread}};
}

SimulationProfile SimulationProfile::from_json(const nlohmann::json& j) {
  SimulationProfile p;
  p.eeg_noise_uv = j.at("eeg_noise_uv").get<double>();
  p.alpha_uv = j.at("alpha_uv").get<double>();
  p.beta_uv = j.at("beta_uv").get<double>();
  p.hbo_response_um = j.at("hbo_response_um").get<double>();
  p.cardiac_low_hz = j.at("cardiac_low_hz").get<double>();
  p.cardiac_high_hz = j.at("cardiac_high_hz").get<double>();
  p.cardiac_od = j.at("cardiac_od").get<double>();
  p.mayer_od = j.at("mayer_od").get<double>();
  p.optical_noise_od = j.at("optical_noise_od").get<double>();
  p.fallback_probability = j.at("fallback_probability").get<double>();
  p.rating_delay_s = j.at("rating_delay_s").get<double>();
  p.arithmetic_delay_s = j.at("arithmetic_delay_s").get<double>();
  p.inter_session_gap_s = j.at("inter_session_gap_s").get<double>();
  p.subject_gain_spread = j.at("subject_gain_spread").get<double>();
  if (p.fallback_probability < 0 || p.fallback_probability > 1 || p.subject_gain_spread < 0 ||
      p.subject_gain_spread >= 1)
    throw Error(ErrorKind::Config, "simulation probabilities and spreads must lie in [0, 1)");
  return p;
}

screening::ScreeningReport synthetic_library(int per_quadrant) {
  screening::ScreeningReport r;
  for (auto q : kAllQuadrants)
    for (int i = 1; i <= per_quadrant; ++i) {
      char buf[32];
      std::snprintf(buf, sizeof buf, "%s-%02d", std::string(to_string(q)).c_str(), i);
      r.selected[q].push_back(buf);
      r.retained_technical.push_back(buf);
    }
  std::sort(r.retained_technical.begin(), r.retained_technical.end());
  return r;
}

SimulatedParticipant simulate_device(const SessionPlan& plan, const SimulationProfile& profile, std::uint64_t seed,
                                     const Timing& timing, const sigproc::OpticalConstants& constants) {
  Noise rng(seed);
  SessionMachine m(plan, timing, seed);

  // Drive the paradigm with a simulated participant.
  double now = 10000.0;
  m.start(now);
  while (m.state().phase != Phase::Finished) {
    switch (m.state().phase) {
      case Phase::Rating: {
        const auto& rec = m.trials().back();
        const double delay = std::clamp(profile.rating_delay_s + rng.uniform(-3.0, 3.0), 1.0,
                                        0.9 * timing.rating_timeout_ms / 1000.0);
        now = rec.t_music_off + 1000.0 * delay;
        analysis::RatingTriple r;
        r.valence = draw_score(rng, high_valence(rec.music_quadrant), profile.fallback_probability);
        r.arousal = draw_score(rng, high_arousal(rec.music_quadrant), profile.fallback_probability);
        r.liking = std::clamp(r.valence + rng.integer(-1, 1), 1, 9);
        m.record_rating(now, rec.trial_id, r);
        break;
      }
      case Phase::Arithmetic: {
        now += 1000.0 * profile.arithmetic_delay_s;
        std::vector<int> answers;
        for (const auto& p : m.current_problems()) answers.push_back(p.answer());
        m.submit_arithmetic(now, m.arithmetic().back().block_id, answers);
        break;
      }
      case Phase::Idle:
        now += 1000.0 * profile.inter_session_gap_s;
        m.start(now);
        break;
      default:
        now = *m.state().phase_deadline;
        m.advance(now);
    }
  }
  const double end_ms = now + 10000.0;

  // Per-subject gains.
  const double s = profile.subject_gain_spread;
  const double noise_gain = 1.0 + rng.uniform(-s, s);
  const double alpha_gain = 1.0 + rng.uniform(-s, s);
  const double beta_gain = 1.0 + rng.uniform(-s, s);
  const double hemo_gain = 1.0 + rng.uniform(-s, s);

  struct Span {
    double on, off;
    bool valence_high, arousal_high;
  };
  std::vector<Span> spans;
  for (const auto& r : m.trials()) {
    const auto label = r.label ? *r.label : analysis::derive_label({5, 5, 5}, r.music_quadrant);
    spans.push_back({r.t_music_on, r.t_music_off, label.valence_high, label.arousal_high});
  }
  auto active = [&](double t) -> const Span* {
    for (const auto& sp : spans)
      if (t >= sp.on && t < sp.off) return &sp;
    return nullptr;
  };

  SimulatedParticipant out{std::move(m), {}, {}};

  // EEG: white plus slow AR(1) background, band components during music.
  {
    auto& eeg = out.eeg;
    const double period = 1000.0 / sigproc::kEegRate;
    const auto n = static_cast<std::size_t>(end_ms / period);
    eeg.timestamps_ms.resize(n);
    for (auto& ch : eeg.channels) ch.resize(n);
    std::array<double, sigproc::kEegChannels> ar{}, phase_a{}, phase_b{};
    for (std::size_t c = 0; c < sigproc::kEegChannels; ++c) {
      phase_a[c] = rng.uniform(0.0, kTwoPi);
      phase_b[c] = rng.uniform(0.0, kTwoPi);
    }
    for (std::size_t i = 0; i < n; ++i) {
      const double t = static_cast<double>(i) * period;
      eeg.timestamps_ms[i] = t;
      const Span* sp = active(t);
      for (std::size_t c = 0; c < sigproc::kEegChannels; ++c) {
        ar[c] = 0.95 * ar[c] + rng.gaussian();
        double v = noise_gain * profile.eeg_noise_uv * (rng.gaussian() + 0.3 * ar[c]);
        const double ts = t / 1000.0;
        const double a = sp && sp->valence_high ? 1.0 : 0.15;
        const double b = sp && sp->arousal_high ? 1.0 : 0.15;
        v += alpha_gain * profile.alpha_uv * a * std::sin(kTwoPi * 10.0 * ts + phase_a[c]);
        v += beta_gain * profile.beta_uv * b * std::sin(kTwoPi * 20.0 * ts + phase_b[c]);
        eeg.channels[c][i] = v;
      }
    }
  }

  // fNIRS: forward MBLL of task responses plus cardiac and Mayer components.
  {
    auto& f = out.fnirs;
    const double period = 1000.0 / sigproc::kFnirsRate;
    const auto n = static_cast<std::size_t>(end_ms / period);
    f.timestamps_ms.resize(n);
    std::array<std::array<double, sigproc::kWavelengths>, sigproc::kFnirsChannels> i0{};
    std::array<double, sigproc::kFnirsChannels> ch_gain{};
    for (std::size_t c = 0; c < sigproc::kFnirsChannels; ++c) {
      ch_gain[c] = 1.0 + rng.uniform(-0.2, 0.2);
      for (auto& v : i0[c]) v = rng.uniform(800.0, 1200.0);
      for (auto& w : f.intensity[c]) w.resize(n);
    }
    const double mayer_phase = rng.uniform(0.0, kTwoPi);
    double cardiac_phase = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double t = static_cast<double>(i) * period;
      f.timestamps_ms[i] = t;
      const Span* sp = active(t);
      const double hr = sp ? (sp->arousal_high ? profile.cardiac_high_hz : profile.cardiac_low_hz) : 0.5 * (profile.cardiac_low_hz + profile.cardiac_high_hz);
      cardiac_phase += kTwoPi * hr * period / 1000.0;
      double hbo = 0.0;
      for (const auto& s2 : spans) {
        const double e = envelope(t, s2.on, s2.off, 5000.0);
        if (e > 0.0) hbo += e * (s2.valence_high ? 1.0 : -0.5) * profile.hbo_response_um * hemo_gain;
      }
      const double cardiac = profile.cardiac_od * (std::sin(cardiac_phase) + 0.3 * std::sin(2.0 * cardiac_phase));
      const double mayer = profile.mayer_od * std::sin(kTwoPi * 0.1 * t / 1000.0 + mayer_phase);
      for (std::size_t c = 0; c < sigproc::kFnirsChannels; ++c) {
        const auto od = sigproc::mbll_forward(ch_gain[c] * hbo, -0.3 * ch_gain[c] * hbo, constants);
        for (std::size_t w = 0; w < sigproc::kWavelengths; ++w) {
          const double scale = w == 1 ? 1.0 : 0.7;
          const double total = od[w] + scale * cardiac + mayer + profile.optical_noise_od * rng.gaussian();
          f.intensity[c][w][i] = i0[c][w] * std::exp(-total);
        }
      }
    }
  }
  return out;
}

}  // namespace meetbrain::session
