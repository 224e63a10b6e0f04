#include "meetbrain/audio_features.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "meetbrain/dsp.hpp"
#include "meetbrain/error.hpp"

namespace meetbrain::audio_features {
namespace {

std::vector<double> at_analysis_rate(const AudioClip& clip) {
  return dsp::resample(clip.samples, clip.sample_rate, kAnalysisRate);
}

void require_duration(const AudioClip& clip, double seconds, const char* what) {
  if (clip.sample_rate <= 0 || clip.duration_s() + 1e-9 < seconds)
    throw Error(ErrorKind::Input, std::string(what) + " needs at least " + std::to_string(seconds) +
                                      " s of audio");
}

double hz_to_mel(double f) { return 2595.0 * std::log10(1.0 + f / 700.0); }
double mel_to_hz(double m) { return 700.0 * (std::pow(10.0, m / 2595.0) - 1.0); }

// Triangular mel filterbank over FFT bins.
std::vector<std::vector<double>> mel_filterbank(std::size_t n_bins, double bin_hz, int n_mels,
                                                double f_lo, double f_hi) {
  std::vector<double> edges(n_mels + 2);
  const double m_lo = hz_to_mel(f_lo), m_hi = hz_to_mel(f_hi);
  for (int i = 0; i < n_mels + 2; ++i) edges[i] = mel_to_hz(m_lo + (m_hi - m_lo) * i / (n_mels + 1));
  std::vector<std::vector<double>> fb(n_mels, std::vector<double>(n_bins, 0.0));
  for (int m = 0; m < n_mels; ++m) {
    for (std::size_t k = 0; k < n_bins; ++k) {
      const double f = k * bin_hz;
      if (f > edges[m] && f < edges[m + 2]) {
        fb[m][k] = f <= edges[m + 1] ? (f - edges[m]) / (edges[m + 1] - edges[m])
                                     : (edges[m + 2] - f) / (edges[m + 2] - edges[m + 1]);
      }
    }
  }
  return fb;
}

constexpr double kOnsetHopS = 0.010;
constexpr std::size_t kOnsetWindow = 1024;  // 32 ms at 32 kHz
constexpr int kMelBands = 40;
constexpr double kTightness = 100.0;
constexpr double kPriorBpm = 120.0;
constexpr double kPriorOctaves = 1.0;

double fold_bpm(double bpm) {
  while (bpm > 300.0) bpm /= 2.0;
  while (bpm < 30.0) bpm *= 2.0;
  return bpm;
}

}  // namespace

TempoEstimate estimate_tempo(const AudioClip& clip) {
  require_duration(clip, 2.0, "tempo estimation");
  const auto x = at_analysis_rate(clip);
  const auto hop = static_cast<std::size_t>(std::lround(kOnsetHopS * kAnalysisRate));

  TempoEstimate est;
  double peak = 0.0;
  for (double v : x) peak = std::max(peak, std::abs(v));
  if (peak < 1e-6) {
    est.low_confidence = true;
    return est;
  }

  // Onset strength: half-wave rectified frame-to-frame increase of log mel energy.
  const auto spec = dsp::stft_magnitude(x, kAnalysisRate, kOnsetWindow, hop);
  const auto fb = mel_filterbank(kOnsetWindow / 2 + 1, spec.bin_hz(), kMelBands, 30.0, 8000.0);
  std::vector<std::vector<double>> mel_db(spec.frames.size(), std::vector<double>(kMelBands));
  double max_db = -1e300;
  for (std::size_t t = 0; t < spec.frames.size(); ++t) {
    for (int m = 0; m < kMelBands; ++m) {
      double e = 0.0;
      for (std::size_t k = 0; k < spec.frames[t].size(); ++k)
        if (fb[m][k] > 0.0) e += fb[m][k] * spec.frames[t][k] * spec.frames[t][k];
      mel_db[t][m] = 10.0 * std::log10(std::max(e, 1e-12));
      max_db = std::max(max_db, mel_db[t][m]);
    }
  }
  for (auto& row : mel_db)
    for (auto& v : row) v = std::max(v, max_db - 80.0);

  const std::size_t n = mel_db.size();
  std::vector<double> onset(n, 0.0);
  for (std::size_t t = 1; t < n; ++t)
    for (int m = 0; m < kMelBands; ++m) onset[t] += std::max(0.0, mel_db[t][m] - mel_db[t - 1][m]);
  const double sd = stats::population_sd(onset);
  if (n < 4 || sd <= 0.0) {
    est.low_confidence = true;
    return est;
  }
  for (auto& v : onset) v /= sd;

  // Global period: prior-weighted autocorrelation of the mean-removed envelope.
  const double mu = stats::sample_mean(onset);
  std::vector<double> centered(n);
  for (std::size_t t = 0; t < n; ++t) centered[t] = onset[t] - mu;
  const auto min_lag = static_cast<std::size_t>(std::floor(60.0 / 300.0 / kOnsetHopS));
  const auto max_lag = std::min(n - 1, static_cast<std::size_t>(std::ceil(60.0 / 30.0 / kOnsetHopS)));
  std::size_t best_lag = 0;
  double best = -1e300;
  for (std::size_t lag = std::max<std::size_t>(min_lag, 1); lag <= max_lag; ++lag) {
    double ac = 0.0;
    for (std::size_t t = 0; t + lag < n; ++t) ac += centered[t] * centered[t + lag];
    const double bpm = 60.0 / (static_cast<double>(lag) * kOnsetHopS);
    const double oct = std::log2(bpm / kPriorBpm) / kPriorOctaves;
    const double score = ac * std::exp(-0.5 * oct * oct);
    if (score > best) {
      best = score;
      best_lag = lag;
    }
  }
  if (best_lag == 0 || best <= 0.0) {
    est.low_confidence = true;
    return est;
  }
  const double period = static_cast<double>(best_lag);

  // Dynamic-programming beat placement.
  std::vector<double> score(n);
  std::vector<std::ptrdiff_t> back(n, -1);
  const auto lo_off = static_cast<std::ptrdiff_t>(std::lround(period / 2.0));
  const auto hi_off = static_cast<std::ptrdiff_t>(std::lround(2.0 * period));
  for (std::size_t t = 0; t < n; ++t) {
    double best_prev = 0.0;
    std::ptrdiff_t arg = -1;
    for (std::ptrdiff_t off = lo_off; off <= hi_off; ++off) {
      const auto tau = static_cast<std::ptrdiff_t>(t) - off;
      if (tau < 0) break;
      const double l = std::log(static_cast<double>(off) / period);
      const double cand = score[tau] - kTightness * l * l;
      if (arg < 0 || cand > best_prev) {
        best_prev = cand;
        arg = tau;
      }
    }
    score[t] = onset[t] + (arg >= 0 ? std::max(best_prev, 0.0) : 0.0);
    back[t] = (arg >= 0 && best_prev > 0.0) ? arg : -1;
  }
  const auto tail = std::max<std::ptrdiff_t>(0, static_cast<std::ptrdiff_t>(n) - hi_off);
  auto last = static_cast<std::ptrdiff_t>(
      std::max_element(score.begin() + tail, score.end()) - score.begin());
  std::vector<std::size_t> beats;
  for (auto t = last; t >= 0; t = back[t]) beats.push_back(static_cast<std::size_t>(t));
  std::reverse(beats.begin(), beats.end());

  for (auto b : beats) est.beat_times_s.push_back(static_cast<double>(b * hop + kOnsetWindow / 2) / kAnalysisRate);
  if (beats.size() < 3) {
    est.bpm = fold_bpm(60.0 / (period * kOnsetHopS));
    est.low_confidence = true;
    return est;
  }
  std::vector<double> ibi;
  for (std::size_t i = 1; i < beats.size(); ++i) ibi.push_back(static_cast<double>(beats[i] - beats[i - 1]));
  std::nth_element(ibi.begin(), ibi.begin() + ibi.size() / 2, ibi.end());
  double med = ibi[ibi.size() / 2];
  if (ibi.size() % 2 == 0) {
    const double lower = *std::max_element(ibi.begin(), ibi.begin() + ibi.size() / 2);
    med = 0.5 * (med + lower);
  }
  est.bpm = fold_bpm(60.0 / (med * kOnsetHopS));
  return est;
}

double rhythmic_articulation(const AudioClip& clip) {
  if (clip.samples.empty() || clip.sample_rate <= 0)
    throw Error(ErrorKind::Input, "articulation needs a non-empty clip");
  const auto frame = std::max<std::size_t>(2, static_cast<std::size_t>(std::lround(0.020 * clip.sample_rate)));
  const auto& x = clip.samples;
  double zcr_sum = 0.0;
  std::size_t frames = 0;
  auto frame_zcr = [&](std::size_t lo, std::size_t len) {
    std::size_t changes = 0;
    for (std::size_t i = lo + 1; i < lo + len; ++i) changes += std::signbit(x[i]) != std::signbit(x[i - 1]);
    return static_cast<double>(changes) / static_cast<double>(len - 1);
  };
  for (std::size_t lo = 0; lo + frame <= x.size(); lo += frame, ++frames) zcr_sum += frame_zcr(lo, frame);
  if (frames == 0) {
    if (x.size() < 2) return 1.0 / 1e-6;
    zcr_sum = frame_zcr(0, x.size());
    frames = 1;
  }
  return 1.0 / (zcr_sum / static_cast<double>(frames) + 1e-6);
}

const char* to_string(Mode m) { return m == Mode::Major ? "major" : "minor"; }

namespace {

// Krumhansl-Kessler key profiles, tonic first.
constexpr std::array<double, 12> kMajorProfile{6.35, 2.23, 3.48, 2.33, 4.38, 4.09,
                                               2.52, 5.19, 2.39, 3.66, 2.29, 2.88};
constexpr std::array<double, 12> kMinorProfile{6.33, 2.68, 3.52, 5.38, 2.60, 3.53,
                                               2.54, 4.75, 3.98, 2.69, 3.34, 3.17};

// Mean-centered then unit-norm: a flat chroma scores zero against both.
std::array<double, 12> normalized_template(const std::array<double, 12>& p) {
  std::array<double, 12> t{};
  const double m = std::accumulate(p.begin(), p.end(), 0.0) / 12.0;
  double nrm = 0.0;
  for (int i = 0; i < 12; ++i) {
    t[i] = p[i] - m;
    nrm += t[i] * t[i];
  }
  nrm = std::sqrt(nrm);
  for (auto& v : t) v /= nrm;
  return t;
}

std::pair<double, int> best_rotation(const std::array<double, 12>& tmpl, const std::array<double, 12>& c) {
  double best = -1e300;
  int tonic = 0;
  for (int r = 0; r < 12; ++r) {
    double d = 0.0;
    for (int i = 0; i < 12; ++i) d += tmpl[i] * c[(i + r) % 12];
    if (d > best) {
      best = d;
      tonic = r;
    }
  }
  return {best, tonic};
}

constexpr std::size_t kChromaFft = 2048;
constexpr std::size_t kChromaHop = 1024;
constexpr double kChromaMinHz = 55.0;
constexpr double kChromaMaxHz = 5000.0;

}  // namespace

std::array<double, 12> chroma(const AudioClip& clip) {
  require_duration(clip, 1.0, "chroma");
  const auto x = at_analysis_rate(clip);
  const auto spec = dsp::stft_magnitude(x, kAnalysisRate, kChromaFft, kChromaHop);
  std::array<double, 12> c{};
  for (const auto& mag : spec.frames) {
    const double frame_max = *std::max_element(mag.begin(), mag.end());
    if (frame_max <= 0.0) continue;
    const double floor = 0.01 * frame_max;
    // Fold spectral peaks, located by parabolic interpolation on log magnitude,
    // so window leakage at low frequencies does not bleed into neighbor classes.
    for (std::size_t k = 1; k + 1 < mag.size(); ++k) {
      if (!(mag[k] > mag[k - 1] && mag[k] >= mag[k + 1] && mag[k] > floor)) continue;
      const double a = std::log(mag[k - 1] + 1e-300), b = std::log(mag[k]), g = std::log(mag[k + 1] + 1e-300);
      const double denom = a - 2.0 * b + g;
      const double delta = denom != 0.0 ? std::clamp(0.5 * (a - g) / denom, -0.5, 0.5) : 0.0;
      const double f = (static_cast<double>(k) + delta) * spec.bin_hz();
      if (f < kChromaMinHz || f > kChromaMaxHz) continue;
      const long semis = std::lround(12.0 * std::log2(f / 440.0));
      const int pc = static_cast<int>(((semis + 9) % 12 + 12) % 12);
      c[pc] += mag[k];
    }
  }
  double nrm = 0.0;
  for (double v : c) nrm += v * v;
  nrm = std::sqrt(nrm);
  if (nrm <= 0.0) throw Error(ErrorKind::Input, "undefined chroma: clip is silent");
  for (auto& v : c) v /= nrm;
  return c;
}

ModeEstimate mode_from_chroma(const std::array<double, 12>& c) {
  static const auto major = normalized_template(kMajorProfile);
  static const auto minor = normalized_template(kMinorProfile);
  ModeEstimate m;
  m.chroma = c;
  std::tie(m.major_similarity, m.major_tonic) = best_rotation(major, c);
  std::tie(m.minor_similarity, m.minor_tonic) = best_rotation(minor, c);
  m.mode_raw = m.major_similarity - m.minor_similarity;
  m.mode = m.mode_raw >= 0.0 ? Mode::Major : Mode::Minor;
  m.low_confidence = std::abs(m.mode_raw) < kModeTieThreshold;
  return m;
}

ModeEstimate detect_mode(const AudioClip& clip) { return mode_from_chroma(chroma(clip)); }

std::size_t PitchTrack::voiced() const {
  return static_cast<std::size_t>(std::count_if(f0_hz.begin(), f0_hz.end(), [](auto& f) { return f.has_value(); }));
}

PitchTrack track_pitch(const AudioClip& clip) {
  if (clip.samples.empty() || clip.sample_rate <= 0) throw Error(ErrorKind::Input, "pitch tracking needs audio");
  constexpr double kFrameS = 0.040, kHopS = 0.020, kMinHz = 50.0, kMaxHz = 1000.0, kVoicing = 0.3;
  const double fs = clip.sample_rate;
  const auto frame = static_cast<std::size_t>(std::lround(kFrameS * fs));
  const auto hop = static_cast<std::size_t>(std::lround(kHopS * fs));
  const auto min_lag = std::max<std::size_t>(2, static_cast<std::size_t>(std::floor(fs / kMaxHz)));
  const auto max_lag = std::min(frame - 2, static_cast<std::size_t>(std::ceil(fs / kMinHz)));

  PitchTrack track;
  track.hop_s = static_cast<double>(hop) / fs;
  const auto& x = clip.samples;
  std::vector<double> r(max_lag + 2, 0.0), raw, prefix(frame + 1);
  dsp::Autocorrelator acf(frame);
  for (std::size_t start = 0; start + frame <= x.size(); start += hop) {
    const std::span<const double> f(x.data() + start, frame);
    prefix[0] = 0.0;
    for (std::size_t i = 0; i < frame; ++i) prefix[i + 1] = prefix[i] + f[i] * f[i];
    if (prefix[frame] / static_cast<double>(frame) < 1e-10) {
      track.f0_hz.emplace_back();
      continue;
    }
    acf.compute(f, raw);
    for (std::size_t lag = min_lag - 1; lag <= max_lag + 1; ++lag) {
      const double e0 = prefix[frame - lag];
      const double e1 = prefix[frame] - prefix[lag];
      r[lag] = (e0 > 0 && e1 > 0) ? raw[lag] / std::sqrt(e0 * e1) : 0.0;
    }
    double global = 0.0;
    for (std::size_t lag = min_lag; lag <= max_lag; ++lag) global = std::max(global, r[lag]);
    // Earliest local maximum close to the global one avoids subharmonic picks.
    std::size_t pick = 0;
    for (std::size_t lag = min_lag; lag <= max_lag; ++lag) {
      if (r[lag] >= r[lag - 1] && r[lag] >= r[lag + 1] && r[lag] >= 0.9 * global) {
        pick = lag;
        break;
      }
    }
    if (pick == 0 || r[pick] < kVoicing) {
      track.f0_hz.emplace_back();
      continue;
    }
    const double a = r[pick - 1], b = r[pick], g = r[pick + 1];
    const double denom = a - 2.0 * b + g;
    const double delta = denom != 0.0 ? std::clamp(0.5 * (a - g) / denom, -0.5, 0.5) : 0.0;
    track.f0_hz.emplace_back(fs / (static_cast<double>(pick) + delta));
  }
  return track;
}

PitchRange pitch_range(const PitchTrack& track) {
  double lo = 0.0, hi = 0.0;
  std::size_t n = 0;
  for (const auto& f : track.f0_hz) {
    if (!f) continue;
    lo = n == 0 ? *f : std::min(lo, *f);
    hi = n == 0 ? *f : std::max(hi, *f);
    ++n;
  }
  if (n < 2) return {0.0, true};
  return {12.0 * std::log2(hi / lo), false};
}

PitchRange pitch_range(const AudioClip& clip) {
  require_duration(clip, 1.0, "pitch range");
  return pitch_range(track_pitch(clip));
}

MelodicDirection melodic_direction(const PitchTrack& track) {
  // An interval is counted once the pitch has moved more than the threshold
  // away from the last reference note; the reference then moves there.
  MelodicDirection md;
  std::optional<double> ref;
  for (const auto& f : track.f0_hz) {
    if (!f) continue;
    const double semis = 12.0 * std::log2(*f / 440.0);
    if (!ref) {
      ref = semis;
      continue;
    }
    const double d = semis - *ref;
    if (d > kIntervalThresholdSemitones) {
      ++md.ascending;
      ref = semis;
    } else if (d < -kIntervalThresholdSemitones) {
      ++md.descending;
      ref = semis;
    }
  }
  const auto total = md.ascending + md.descending;
  md.value = total == 0 ? 0.5 : 1.0 - static_cast<double>(md.ascending) / static_cast<double>(total);
  return md;
}

MelodicDirection melodic_direction(const AudioClip& clip) { return melodic_direction(track_pitch(clip)); }

StructuralFeatures extract_features(const AudioClip& clip) {
  require_duration(clip, 2.0, "feature extraction");
  StructuralFeatures f;
  const auto tempo = estimate_tempo(clip);
  f.tempo_bpm = tempo.bpm;
  f.tempo_low_confidence = tempo.low_confidence;
  f.articulation_raw = rhythmic_articulation(clip);
  try {
    const auto mode = detect_mode(clip);
    f.mode_raw = mode.mode_raw;
    f.mode = mode.mode;
    f.mode_low_confidence = mode.low_confidence;
  } catch (const Error& e) {
    if (e.kind() != ErrorKind::Input) throw;
    f.mode_raw = 0.0;
    f.mode_low_confidence = true;
  }
  const auto track = track_pitch(clip);
  const auto range = pitch_range(track);
  f.pitch_range_semitones = range.semitones;
  f.pitch_degenerate = range.degenerate;
  f.melodic_direction_raw = melodic_direction(track).value;
  return f;
}

std::vector<double> scale_to_range(const std::vector<double>& values) {
  if (values.empty()) return {};
  const auto [mn, mx] = std::minmax_element(values.begin(), values.end());
  const double lo = *mn, hi = *mx;
  std::vector<double> out(values.size(), 4.0);
  if (hi == lo) return out;
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (values[i] == lo)
      out[i] = 1.0;
    else if (values[i] == hi)
      out[i] = 7.0;
    else
      out[i] = 1.0 + 6.0 * (values[i] - lo) / (hi - lo);
  }
  return out;
}

void scale_features(std::vector<StructuralFeatures>& corpus) {
  for (std::size_t k = 0; k < kFeatureCount; ++k) {
    std::vector<double> col;
    col.reserve(corpus.size());
    for (const auto& f : corpus) col.push_back(f.raw()[k]);
    const auto scaled = scale_to_range(col);
    for (std::size_t i = 0; i < corpus.size(); ++i) corpus[i].scaled[k] = scaled[i];
  }
}

std::array<stats::AnovaResult, kFeatureCount> feature_group_anova(const FeatureGroups& groups) {
  std::array<stats::AnovaResult, kFeatureCount> out{};
  for (std::size_t k = 0; k < kFeatureCount; ++k) {
    std::vector<std::vector<double>> g;
    for (const auto& [q, rows] : groups) {
      std::vector<double> col;
      for (const auto& r : rows) col.push_back(r[k]);
      g.push_back(std::move(col));
    }
    out[k] = stats::one_way_anova(g);
  }
  return out;
}

}  // namespace meetbrain::audio_features
