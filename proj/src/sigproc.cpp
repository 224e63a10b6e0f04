#include "meetbrain/sigproc.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>

#include "meetbrain/dsp.hpp"
#include "meetbrain/error.hpp"

namespace meetbrain::sigproc {

using cplx = std::complex<double>;

void EegRecording::validate() const {
  for (const auto& ch : channels)
    if (ch.size() != timestamps_ms.size())
      throw Error(ErrorKind::Schema, "EEG channel length does not match timestamps");
  if (!mask.empty() && mask.size() != timestamps_ms.size())
    throw Error(ErrorKind::Schema, "EEG mask length does not match timestamps");
  if (sample_rate != kEegRate) throw Error(ErrorKind::Schema, "EEG must be sampled at 250 Hz");
}

void FnirsRecording::validate() const {
  if (sample_rate != kFnirsRate) throw Error(ErrorKind::Schema, "fNIRS must be sampled at 25 Hz");
  for (std::size_t c = 0; c < kFnirsChannels; ++c) {
    for (std::size_t w = 0; w < kWavelengths; ++w) {
      const auto& v = intensity[c][w];
      if (v.size() != timestamps_ms.size())
        throw Error(ErrorKind::Schema, "fNIRS channel length does not match timestamps");
      for (std::size_t i = 0; i < v.size(); ++i)
        if (!(v[i] > 0.0))
          throw Error(ErrorKind::Data, "nonpositive intensity at channel " + std::to_string(c + 1) + " (" +
                                           std::to_string(kWavelengthNm[w]) + " nm), sample " +
                                           std::to_string(i));
    }
  }
}

void HemodynamicSeries::recompute_hbt() {
  for (std::size_t c = 0; c < kFnirsChannels; ++c) {
    hbt[c].resize(hbo[c].size());
    for (std::size_t i = 0; i < hbo[c].size(); ++i) hbt[c][i] = hbo[c][i] + hbr[c][i];
  }
}

void OpticalConstants::validate() const {
  const double det = extinction[0][0] * extinction[1][1] - extinction[1][0] * extinction[0][1];
  if (!(std::abs(det) > 1e-6)) throw Error(ErrorKind::Config, "extinction matrix is singular");
  for (double d : dpf)
    if (!(d > 0.0)) throw Error(ErrorKind::Config, "DPF must be positive");
  if (!(separation_cm > 0.0)) throw Error(ErrorKind::Config, "source-detector separation must be positive");
}

nlohmann::json OpticalConstants::to_json() const {
  return {{"extinction_per_mM_cm",
           {{"HbO", {{"735", extinction[0][0]}, {"850", extinction[0][1]}}},
            {"HbR", {{"735", extinction[1][0]}, {"850", extinction[1][1]}}}}},
          {"dpf", {{"735", dpf[0]}, {"850", dpf[1]}}},
          {"separation_cm", separation_cm}};
}

OpticalConstants OpticalConstants::from_json(const nlohmann::json& j) {
  OpticalConstants c;
  const auto& e = j.at("extinction_per_mM_cm");
  c.extinction[0] = {e.at("HbO").at("735").get<double>(), e.at("HbO").at("850").get<double>()};
  c.extinction[1] = {e.at("HbR").at("735").get<double>(), e.at("HbR").at("850").get<double>()};
  c.dpf = {j.at("dpf").at("735").get<double>(), j.at("dpf").at("850").get<double>()};
  c.separation_cm = j.at("separation_cm").get<double>();
  c.validate();
  return c;
}

// ---- events ----------------------------------------------------------------

const char* to_string(EventKind k) {
  switch (k) {
    case EventKind::TrialPrep: return "trial_prep";
    case EventKind::MusicOn: return "music_on";
    case EventKind::MusicOff: return "music_off";
    case EventKind::RatingOpen: return "rating_open";
    case EventKind::Rest: return "rest";
    case EventKind::BlockStart: return "block_start";
    case EventKind::ArtifactStart: return "artifact_start";
    case EventKind::ArtifactEnd: return "artifact_end";
    case EventKind::Arithmetic: return "arithmetic";
    case EventKind::SessionEnd: return "session_end";
  }
  return "?";
}

EventKind event_kind_from_string(const std::string& s) {
  for (auto k : {EventKind::TrialPrep, EventKind::MusicOn, EventKind::MusicOff, EventKind::RatingOpen,
                 EventKind::Rest, EventKind::BlockStart, EventKind::ArtifactStart, EventKind::ArtifactEnd,
                 EventKind::Arithmetic, EventKind::SessionEnd})
    if (s == to_string(k)) return k;
  throw Error(ErrorKind::Timeline, "unknown event kind '" + s + "'");
}

void EventTimeline::validate() const {
  for (std::size_t i = 1; i < events.size(); ++i)
    if (events[i].t_ms < events[i - 1].t_ms)
      throw Error(ErrorKind::Timeline, "events are not sorted by time at index " + std::to_string(i));
  (void)artifact_spans(*this);
}

std::optional<double> EventTimeline::music_on(const std::string& trial_id) const {
  for (const auto& e : events)
    if (e.kind == EventKind::MusicOn && e.trial_id == trial_id) return e.t_ms;
  return std::nullopt;
}

std::optional<double> EventTimeline::music_off(const std::string& trial_id) const {
  for (const auto& e : events)
    if (e.kind == EventKind::MusicOff && e.trial_id == trial_id) return e.t_ms;
  return std::nullopt;
}

std::vector<std::string> EventTimeline::trials() const {
  std::vector<std::string> out;
  for (const auto& e : events)
    if (e.kind == EventKind::MusicOn) out.push_back(e.trial_id);
  return out;
}

std::string EventTimeline::to_jsonl() const {
  std::string out;
  for (const auto& e : events) {
    nlohmann::ordered_json j;
    j["t_ms"] = e.t_ms;
    j["kind"] = to_string(e.kind);
    j["trial_id"] = e.trial_id;
    out += j.dump();
    out += '\n';
  }
  return out;
}

EventTimeline EventTimeline::from_jsonl(const std::string& text) {
  EventTimeline tl;
  std::size_t pos = 0, lineno = 0;
  while (pos < text.size()) {
    auto nl = text.find('\n', pos);
    if (nl == std::string::npos) nl = text.size();
    const auto line = text.substr(pos, nl - pos);
    pos = nl + 1;
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      const auto j = nlohmann::json::parse(line);
      tl.events.push_back({j.at("t_ms").get<double>(), event_kind_from_string(j.at("kind").get<std::string>()),
                           j.value("trial_id", std::string{})});
    } catch (const nlohmann::json::exception& e) {
      throw Error(ErrorKind::Timeline, "events line " + std::to_string(lineno) + ": " + e.what());
    }
  }
  return tl;
}

// ---- filter design -------------------------------------------------------

namespace {

cplx eval_sos(const Sos& sos, double omega) {
  const cplx z1 = std::polar(1.0, -omega);
  const cplx z2 = z1 * z1;
  cplx h = 1.0;
  for (const auto& s : sos) h *= (s.b[0] + s.b[1] * z1 + s.b[2] * z2) / (s.a[0] + s.a[1] * z1 + s.a[2] * z2);
  return h;
}

// Pairs complex poles with their conjugates and real poles with each other.
std::vector<std::pair<cplx, cplx>> pair_poles(std::vector<cplx> poles) {
  std::vector<std::pair<cplx, cplx>> pairs;
  std::vector<cplx> reals;
  for (const auto& p : poles) {
    if (std::abs(p.imag()) < 1e-12 * std::max(1.0, std::abs(p)))
      reals.push_back({p.real(), 0.0});
    else if (p.imag() > 0)
      pairs.push_back({p, std::conj(p)});
  }
  std::sort(reals.begin(), reals.end(), [](cplx a, cplx b) { return a.real() < b.real(); });
  for (std::size_t i = 0; i < reals.size(); i += 2)
    pairs.push_back({reals[i], i + 1 < reals.size() ? reals[i + 1] : cplx{0.0, 0.0}});
  return pairs;
}

}  // namespace

Sos design_butter_bandpass(double lo, double hi, double fs, int order) {
  if (!(lo >= 0.0 && lo < hi && hi < fs / 2.0) || order < 1)
    throw Error(ErrorKind::Input, "invalid band edges: need 0 <= lo < hi < fs/2");
  const double fs2 = 2.0 * fs;
  const double w_hi = fs2 * std::tan(std::numbers::pi * hi / fs);
  std::vector<cplx> proto;
  for (int k = 0; k < order; ++k)
    proto.push_back(std::polar(1.0, std::numbers::pi * (2.0 * k + order + 1.0) / (2.0 * order)));

  std::vector<cplx> poles;
  bool lowpass = lo == 0.0;
  double center_omega = 0.0;
  if (lowpass) {
    for (auto p : proto) poles.push_back(p * w_hi);
  } else {
    const double w_lo = fs2 * std::tan(std::numbers::pi * lo / fs);
    const double bw = w_hi - w_lo;
    const double w0 = std::sqrt(w_lo * w_hi);
    for (auto p : proto) {
      const cplx half = p * bw / 2.0;
      const cplx disc = std::sqrt(half * half - w0 * w0);
      poles.push_back(half + disc);
      poles.push_back(half - disc);
    }
    center_omega = 2.0 * std::atan(w0 / fs2);
  }
  for (auto& p : poles) p = (fs2 + p) / (fs2 - p);

  Sos sos;
  for (auto [p1, p2] : pair_poles(poles)) {
    Biquad s;
    const cplx sum = p1 + p2, prod = p1 * p2;
    s.a = {1.0, -sum.real(), prod.real()};
    const bool single = p2 == cplx{0.0, 0.0};
    if (lowpass)
      s.b = single ? std::array<double, 3>{1.0, 1.0, 0.0} : std::array<double, 3>{1.0, 2.0, 1.0};
    else
      s.b = single ? std::array<double, 3>{1.0, -1.0, 0.0} : std::array<double, 3>{1.0, 0.0, -1.0};
    sos.push_back(s);
  }
  const double g = std::abs(eval_sos(sos, center_omega));
  for (auto& v : sos.front().b) v /= g;
  return sos;
}

std::vector<double> sos_filter(const Sos& sos, std::span<const double> x) {
  std::vector<double> y(x.begin(), x.end());
  for (const auto& s : sos) {
    double z1 = 0.0, z2 = 0.0;
    for (auto& v : y) {
      const double in = v;
      const double out = s.b[0] * in + z1;
      z1 = s.b[1] * in - s.a[1] * out + z2;
      z2 = s.b[2] * in - s.a[2] * out;
      v = out;
    }
  }
  return y;
}

namespace {

// Steady-state transposed-direct-form state for a unit step, per section,
// scaled by the DC gain of the preceding sections.
std::vector<std::array<double, 2>> sos_step_state(const Sos& sos) {
  std::vector<std::array<double, 2>> zi;
  double scale = 1.0;
  for (const auto& s : sos) {
    const double dc = (s.b[0] + s.b[1] + s.b[2]) / (s.a[0] + s.a[1] + s.a[2]);
    const double z2 = s.b[2] - s.a[2] * dc;
    const double z1 = dc - s.b[0];
    zi.push_back({z1 * scale, z2 * scale});
    scale *= dc;
  }
  return zi;
}

}  // namespace

std::vector<double> sos_filtfilt(const Sos& sos, std::span<const double> x, std::size_t padlen) {
  const std::size_t n = x.size();
  if (n == 0) return {};
  padlen = std::min(padlen, n - 1);
  std::vector<double> ext;
  ext.reserve(n + 2 * padlen);
  for (std::size_t i = padlen; i >= 1; --i) ext.push_back(2.0 * x[0] - x[i]);
  ext.insert(ext.end(), x.begin(), x.end());
  for (std::size_t i = 1; i <= padlen; ++i) ext.push_back(2.0 * x[n - 1] - x[n - 1 - i]);

  const auto zi = sos_step_state(sos);
  auto pass = [&](std::vector<double>& y) {
    const double x0 = y.front();
    for (std::size_t k = 0; k < sos.size(); ++k) {
      const auto& s = sos[k];
      double z1 = zi[k][0] * x0, z2 = zi[k][1] * x0;
      for (auto& v : y) {
        const double in = v;
        const double out = s.b[0] * in + z1;
        z1 = s.b[1] * in - s.a[1] * out + z2;
        z2 = s.b[2] * in - s.a[2] * out;
        v = out;
      }
    }
  };
  pass(ext);
  std::reverse(ext.begin(), ext.end());
  pass(ext);
  std::reverse(ext.begin(), ext.end());
  return {ext.begin() + static_cast<std::ptrdiff_t>(padlen), ext.begin() + static_cast<std::ptrdiff_t>(padlen + n)};
}

std::vector<double> bandpass(std::span<const double> x, double lo, double hi, double fs) {
  constexpr int kOrder = 4;
  const auto sos = design_butter_bandpass(lo, hi, fs, kOrder);
  const std::size_t filter_order = lo == 0.0 ? kOrder : 2 * kOrder;
  return sos_filtfilt(sos, x, 3 * filter_order);
}

// ---- EEG -------------------------------------------------------------------

std::vector<TimeSpan> artifact_spans(const EventTimeline& timeline) {
  std::vector<TimeSpan> spans;
  int depth = 0;
  double open = 0.0;
  for (const auto& e : timeline.events) {
    if (e.kind == EventKind::ArtifactStart) {
      if (depth++ == 0) open = e.t_ms;
    } else if (e.kind == EventKind::ArtifactEnd) {
      if (depth == 0) throw Error(ErrorKind::Timeline, "artifact_end at " + std::to_string(e.t_ms) + " ms without start");
      if (--depth == 0) spans.push_back({open, e.t_ms});
    }
  }
  if (depth != 0) throw Error(ErrorKind::Timeline, "artifact_start without matching artifact_end");
  return spans;
}

std::vector<bool> artifact_mask(std::span<const double> ts, const EventTimeline& timeline) {
  std::vector<bool> mask(ts.size(), false);
  for (const auto& sp : artifact_spans(timeline)) {
    auto lo = std::lower_bound(ts.begin(), ts.end(), sp.start_ms);
    auto hi = std::lower_bound(ts.begin(), ts.end(), sp.end_ms);
    for (auto it = lo; it != hi; ++it) mask[static_cast<std::size_t>(it - ts.begin())] = true;
  }
  return mask;
}

EegRecording exclude_artifacts(const EegRecording& rec, const EventTimeline& timeline) {
  EegRecording out = rec;
  const auto m = artifact_mask(rec.timestamps_ms, timeline);
  if (out.mask.empty()) out.mask.assign(rec.size(), false);
  for (std::size_t i = 0; i < m.size(); ++i) out.mask[i] = out.mask[i] || m[i];
  if (std::none_of(out.mask.begin(), out.mask.end(), [](bool b) { return b; })) out.mask.clear();
  return out;
}

std::ptrdiff_t sample_index(std::span<const double> ts, double sample_rate, double t_ms) {
  if (ts.empty()) return 0;
  return static_cast<std::ptrdiff_t>(std::llround((t_ms - ts.front()) * sample_rate / 1000.0));
}

EpochResult epoch_eeg(const EegRecording& rec, const EventTimeline& timeline, const EpochOptions& opt) {
  rec.validate();
  EpochResult res;
  const auto len = static_cast<std::size_t>(std::llround((opt.end_s - opt.start_s) * rec.sample_rate));
  const auto n = static_cast<std::ptrdiff_t>(rec.size());
  for (const auto& e : timeline.events) {
    if (e.kind != EventKind::MusicOn) continue;
    const auto start = sample_index(rec.timestamps_ms, rec.sample_rate, e.t_ms + opt.start_s * 1000.0);
    if (start < 0 || start + static_cast<std::ptrdiff_t>(len) > n) {
      res.skipped.push_back({e.trial_id, "incomplete"});
      continue;
    }
    const auto lo = static_cast<std::size_t>(start);
    if (!rec.mask.empty() &&
        std::any_of(rec.mask.begin() + start, rec.mask.begin() + start + static_cast<std::ptrdiff_t>(len),
                    [](bool b) { return b; })) {
      res.skipped.push_back({e.trial_id, "artifact"});
      continue;
    }
    EegEpoch ep;
    ep.trial_id = e.trial_id;
    ep.onset_ms = e.t_ms;
    bool ok = true;
    for (std::size_t c = 0; c < kEegChannels; ++c) {
      const auto& ch = rec.channels[c];
      ep.data[c].assign(ch.begin() + static_cast<std::ptrdiff_t>(lo), ch.begin() + static_cast<std::ptrdiff_t>(lo + len));
      double base = 0.0;
      if (opt.baseline == BaselineMode::EpochMean) {
        base = dsp::mean(ep.data[c]);
      } else {
        const auto pre = static_cast<std::ptrdiff_t>(std::llround(opt.prestimulus_s * rec.sample_rate));
        const auto onset = sample_index(rec.timestamps_ms, rec.sample_rate, e.t_ms);
        if (onset - pre < 0 || onset > n) {
          ok = false;
          break;
        }
        base = dsp::mean(std::span<const double>(ch).subspan(static_cast<std::size_t>(onset - pre),
                                                             static_cast<std::size_t>(pre)));
      }
      for (auto& v : ep.data[c]) v -= base;
    }
    if (!ok) {
      res.skipped.push_back({e.trial_id, "no_prestimulus"});
      continue;
    }
    res.epochs.push_back(std::move(ep));
  }
  return res;
}

EegRecording filter_eeg(const EegRecording& rec, double lo, double hi) {
  rec.validate();
  EegRecording out = rec;
  for (std::size_t c = 0; c < kEegChannels; ++c) out.channels[c] = bandpass(rec.channels[c], lo, hi, rec.sample_rate);
  return out;
}

// ---- fNIRS -----------------------------------------------------------------

OpticalDensity intensity_to_od(const FnirsRecording& rec, std::optional<TimeSpan> window) {
  rec.validate();
  OpticalDensity od;
  od.timestamps_ms = rec.timestamps_ms;
  od.sample_rate = rec.sample_rate;
  std::size_t lo = 0, hi = rec.size();
  if (window) {
    const auto& ts = rec.timestamps_ms;
    lo = static_cast<std::size_t>(std::lower_bound(ts.begin(), ts.end(), window->start_ms) - ts.begin());
    hi = static_cast<std::size_t>(std::lower_bound(ts.begin(), ts.end(), window->end_ms) - ts.begin());
  }
  if (hi <= lo) throw Error(ErrorKind::Input, "I0 window contains no samples");
  for (std::size_t c = 0; c < kFnirsChannels; ++c) {
    for (std::size_t w = 0; w < kWavelengths; ++w) {
      const auto& v = rec.intensity[c][w];
      double i0 = 0.0;
      for (std::size_t i = lo; i < hi; ++i) i0 += v[i];
      i0 /= static_cast<double>(hi - lo);
      auto& out = od.od[c][w];
      out.resize(v.size());
      for (std::size_t i = 0; i < v.size(); ++i) out[i] = -std::log(v[i] / i0);
    }
  }
  return od;
}

PpgSeries extract_ppg(const OpticalDensity& od, PpgSource source, double lo, double hi) {
  PpgSeries p;
  p.timestamps_ms = od.timestamps_ms;
  p.sample_rate = od.sample_rate;
  for (std::size_t c = 0; c < kFnirsChannels; ++c) {
    std::vector<double> x;
    switch (source) {
      case PpgSource::Wavelength850: x = od.od[c][1]; break;
      case PpgSource::Wavelength735: x = od.od[c][0]; break;
      case PpgSource::Average:
        x.resize(od.od[c][0].size());
        for (std::size_t i = 0; i < x.size(); ++i) x[i] = 0.5 * (od.od[c][0][i] + od.od[c][1][i]);
        break;
    }
    p.channels[c] = bandpass(x, lo, hi, od.sample_rate);
  }
  return p;
}

std::array<double, kWavelengths> mbll_forward(double dhbo_um, double dhbr_um, const OpticalConstants& c) {
  std::array<double, kWavelengths> od{};
  for (std::size_t w = 0; w < kWavelengths; ++w)
    od[w] = (c.extinction[0][w] * dhbo_um + c.extinction[1][w] * dhbr_um) * 1e-3 * c.separation_cm * c.dpf[w];
  return od;
}

HemodynamicSeries mbll(const OpticalDensity& od, const OpticalConstants& c) {
  c.validate();
  // Rows: wavelength; columns: chromophore; entries scaled by path length,
  // in 1/uM so the solution comes out in micromolar.
  const double m00 = c.extinction[0][0] * c.separation_cm * c.dpf[0] * 1e-3;
  const double m01 = c.extinction[1][0] * c.separation_cm * c.dpf[0] * 1e-3;
  const double m10 = c.extinction[0][1] * c.separation_cm * c.dpf[1] * 1e-3;
  const double m11 = c.extinction[1][1] * c.separation_cm * c.dpf[1] * 1e-3;
  const double det = m00 * m11 - m01 * m10;

  HemodynamicSeries hs;
  hs.timestamps_ms = od.timestamps_ms;
  hs.sample_rate = od.sample_rate;
  for (std::size_t ch = 0; ch < kFnirsChannels; ++ch) {
    const auto& a = od.od[ch][0];
    const auto& b = od.od[ch][1];
    if (a.size() != b.size() || a.size() != od.size())
      throw Error(ErrorKind::Schema, "optical density channel " + std::to_string(ch + 1) + " lacks a wavelength");
    hs.hbo[ch].resize(a.size());
    hs.hbr[ch].resize(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) {
      hs.hbo[ch][i] = (m11 * a[i] - m01 * b[i]) / det;
      hs.hbr[ch][i] = (m00 * b[i] - m10 * a[i]) / det;
    }
  }
  hs.recompute_hbt();
  return hs;
}

BaselineCorrection fnirs_baseline_correct(const HemodynamicSeries& series, const EventTimeline& timeline,
                                          double baseline_s) {
  BaselineCorrection out{series, {}};
  const auto& ts = series.timestamps_ms;
  const auto n = static_cast<std::ptrdiff_t>(series.size());
  const auto pre = static_cast<std::ptrdiff_t>(std::llround(baseline_s * series.sample_rate));
  for (const auto& trial : timeline.trials()) {
    const double on = *timeline.music_on(trial);
    const auto off_t = timeline.music_off(trial);
    const auto onset = sample_index(ts, series.sample_rate, on);
    const auto end = std::min(n, off_t ? sample_index(ts, series.sample_rate, *off_t) : n);
    if (onset - pre < 0 || onset >= n) {
      out.flagged.push_back({trial, "insufficient_baseline"});
      continue;
    }
    auto correct = [&](const std::vector<double>& src, std::vector<double>& dst) {
      double base = 0.0;
      for (auto i = onset - pre; i < onset; ++i) base += src[static_cast<std::size_t>(i)];
      base /= static_cast<double>(pre);
      for (auto i = onset; i < end; ++i) dst[static_cast<std::size_t>(i)] = src[static_cast<std::size_t>(i)] - base;
    };
    for (std::size_t c = 0; c < kFnirsChannels; ++c) {
      correct(series.hbo[c], out.series.hbo[c]);
      correct(series.hbr[c], out.series.hbr[c]);
    }
  }
  out.series.recompute_hbt();
  return out;
}

HemodynamicSeries systemic_filter(const HemodynamicSeries& series, double lo, double hi) {
  HemodynamicSeries out = series;
  for (std::size_t c = 0; c < kFnirsChannels; ++c) {
    out.hbo[c] = bandpass(series.hbo[c], lo, hi, series.sample_rate);
    out.hbr[c] = bandpass(series.hbr[c], lo, hi, series.sample_rate);
  }
  out.recompute_hbt();
  return out;
}

}  // namespace meetbrain::sigproc
