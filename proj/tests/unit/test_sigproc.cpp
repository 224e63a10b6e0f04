#include <doctest.h>

#include <complex>
#include <functional>
#include <numeric>
#include <random>

#include "meetbrain/error.hpp"
#include "meetbrain/sigproc.hpp"
#include "synth.hpp"

using namespace meetbrain;
using namespace meetbrain::sigproc;

namespace {

EegRecording eeg_recording(double seconds, double value = 0.0) {
  EegRecording r;
  const auto n = static_cast<std::size_t>(seconds * kEegRate);
  for (std::size_t i = 0; i < n; ++i) r.timestamps_ms.push_back(static_cast<double>(i) * 4.0);
  r.channels = {std::vector<double>(n, value), std::vector<double>(n, value)};
  return r;
}

EventTimeline trial_at(double on_ms, double off_ms, const std::string& id = "s1b1t1") {
  EventTimeline t;
  t.events = {{on_ms, EventKind::MusicOn, id}, {off_ms, EventKind::MusicOff, id}};
  return t;
}

double rms(std::span<const double> x) {
  double s = 0.0;
  for (double v : x) s += v * v;
  return std::sqrt(s / static_cast<double>(x.size()));
}

std::complex<double> sos_response(const Sos& sos, double f, double fs) {
  const auto z = std::polar(1.0, -2.0 * std::numbers::pi * f / fs);
  std::complex<double> h = 1.0;
  for (const auto& s : sos)
    h *= (s.b[0] + s.b[1] * z + s.b[2] * z * z) / (s.a[0] + s.a[1] * z + s.a[2] * z * z);
  return h;
}

// Closed-form magnitude of an order-n Butterworth band-pass after bilinear
// transformation with prewarped edges.
double butter_bandpass_magnitude(double f, double lo, double hi, double fs, int n) {
  auto warp = [&](double x) { return 2.0 * fs * std::tan(std::numbers::pi * x / fs); };
  const double w = warp(f), w1 = warp(lo), w2 = warp(hi);
  const double x = (w * w - w1 * w2) / (w * (w2 - w1));
  return 1.0 / std::sqrt(1.0 + std::pow(x, 2 * n));
}

}  // namespace

TEST_CASE("Butterworth design matches the analytic magnitude") {
  for (auto [lo, hi, fs] : {std::tuple{0.1, 40.0, 250.0}, {0.5, 4.0, 25.0}, {0.01, 0.1, 25.0}, {8.0, 13.0, 250.0}}) {
    const auto sos = design_butter_bandpass(lo, hi, fs, 4);
    CHECK(sos.size() == 4);
    for (double f : {lo * 0.3, lo, std::sqrt(lo * hi), hi, std::min(hi * 1.7, fs * 0.45)}) {
      CAPTURE(f);
      CHECK(std::abs(sos_response(sos, f, fs)) == doctest::Approx(butter_bandpass_magnitude(f, lo, hi, fs, 4)).epsilon(1e-7));
    }
  }
  CHECK_THROWS_AS(bandpass(std::vector<double>(100, 0.0), 5, 4, 25), Error);
  CHECK_THROWS_AS(bandpass(std::vector<double>(100, 0.0), 1, 13, 25), Error);
}

TEST_CASE("bandpass passes, rejects and keeps zero phase") {
  const auto x = synth::sine(10, 250, 250 * 20);
  const auto y = bandpass(x, 0.1, 40, 250);
  REQUIRE(y.size() == x.size());
  const std::span<const double> mid(y.data() + 1250, 2500);
  CHECK(std::abs(rms(mid) * std::sqrt(2.0) - 1.0) < 0.05);

  const auto drift = synth::sine(0.05, 25, 25 * 600);
  const auto pd = bandpass(drift, 0.5, 4, 25);
  CHECK(20 * std::log10(rms(std::span<const double>(pd).subspan(2500, 10000)) / rms(drift)) <= -20);

  const auto zero = bandpass(std::vector<double>(500, 0.0), 0.5, 4, 25);
  for (double v : zero) CHECK(v == 0.0);

  // Zero lag at the band centre: cross-correlation peaks at 0.
  const double fc = std::sqrt(0.5 * 4.0);
  const auto s = synth::sine(fc, 25, 25 * 120);
  const auto f = bandpass(s, 0.5, 4, 25);
  int best = 99;
  double best_v = -1e300;
  for (int lag = -10; lag <= 10; ++lag) {
    double acc = 0.0;
    for (std::size_t i = 500; i + 500 < s.size(); ++i) acc += s[i] * f[static_cast<std::size_t>(static_cast<int>(i) + lag)];
    if (acc > best_v) best_v = acc, best = lag;
  }
  CHECK(best == 0);
}

TEST_CASE("filtfilt of a step keeps the steady state") {
  std::vector<double> x(2000, 3.0);
  const auto sos = design_butter_bandpass(0, 10, 250, 4);
  const auto y = sos_filtfilt(sos, x, 24);
  for (double v : y) CHECK(v == doctest::Approx(3.0).epsilon(1e-9));
}

TEST_CASE("artifact spans and exclusion") {
  auto rec = eeg_recording(10, 1.0);
  EventTimeline none;
  const auto same = exclude_artifacts(rec, none);
  CHECK(same.mask.empty());

  EventTimeline t;
  t.events = {{1000, EventKind::ArtifactStart, ""}, {2000, EventKind::ArtifactEnd, ""}};
  const auto masked = exclude_artifacts(rec, t);
  REQUIRE(masked.mask.size() == rec.size());
  CHECK_FALSE(masked.mask[249]);
  CHECK(masked.mask[250]);
  CHECK(masked.mask[499]);
  CHECK_FALSE(masked.mask[500]);

  EventTimeline bad;
  bad.events = {{1000, EventKind::ArtifactStart, ""}};
  CHECK_THROWS_AS(artifact_spans(bad), Error);
}

TEST_CASE("epoching windows, baselines and skips") {
  auto rec = eeg_recording(60, 5.0);
  auto r = epoch_eeg(rec, trial_at(0, 60000));
  REQUIRE(r.epochs.size() == 1);
  CHECK(r.epochs[0].data[0].size() == 7500);
  for (double v : r.epochs[0].data[1]) CHECK(v == 0.0);

  // Channel equal to time in seconds: the epoch starts at 25 s.
  for (std::size_t i = 0; i < rec.size(); ++i) rec.channels[0][i] = static_cast<double>(i) / kEegRate;
  EpochOptions raw;
  raw.baseline = BaselineMode::PreStimulus;
  raw.prestimulus_s = 1.0;
  auto shifted = rec;
  auto res = epoch_eeg(shifted, trial_at(2000, 62000), raw);
  REQUIRE(res.epochs.size() == 1);
  CHECK(res.epochs[0].data[0][0] == doctest::Approx(27.0 - 1.498));

  r = epoch_eeg(rec, trial_at(40000, 100000));
  CHECK(r.epochs.empty());
  REQUIRE(r.skipped.size() == 1);
  CHECK(r.skipped[0].reason == "incomplete");

  res = epoch_eeg(rec, trial_at(500, 60500), raw);
  REQUIRE(res.skipped.size() == 1);
  CHECK(res.skipped[0].reason == "no_prestimulus");

  EventTimeline art = trial_at(0, 60000);
  art.events.insert(art.events.begin() + 1, {{30000, EventKind::ArtifactStart, ""}, {31000, EventKind::ArtifactEnd, ""}});
  r = epoch_eeg(exclude_artifacts(rec, art), art);
  REQUIRE(r.skipped.size() == 1);
  CHECK(r.skipped[0].reason == "artifact");

  EventTimeline outside = trial_at(0, 60000);
  outside.events.push_back({58000, EventKind::ArtifactStart, ""});
  outside.events.push_back({59000, EventKind::ArtifactEnd, ""});
  CHECK(epoch_eeg(exclude_artifacts(rec, outside), outside).epochs.size() == 1);

  const auto a = epoch_eeg(rec, trial_at(0, 60000));
  const auto b = epoch_eeg(rec, trial_at(0, 60000));
  CHECK(a.epochs[0].data == b.epochs[0].data);
}

TEST_CASE("event timeline JSON lines round trip and validation") {
  EventTimeline t;
  t.events = {{0, EventKind::BlockStart, ""}, {5000, EventKind::MusicOn, "s1b1t1"}, {65000, EventKind::MusicOff, "s1b1t1"}};
  const auto back = EventTimeline::from_jsonl(t.to_jsonl());
  CHECK(back.events == t.events);
  CHECK(back.music_on("s1b1t1") == 5000.0);
  CHECK_FALSE(back.music_on("nope"));
  try {
    EventTimeline::from_jsonl("{\"t_ms\":10,\"kind\":\"music_on\",\"trial_id\":\"a\"}\n{\"t_ms\":5,\"kind\":\"music_off\",\"trial_id\":\"a\"}\n")
        .validate();
    FAIL("unsorted timeline accepted");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::Timeline);
  }
  CHECK_THROWS_AS(EventTimeline::from_jsonl("{\"t_ms\":1,\"kind\":\"dance\",\"trial_id\":\"\"}\n"), Error);
}

namespace {

FnirsRecording fnirs_from_od(const std::vector<double>& od, double i0 = 1000.0) {
  FnirsRecording r;
  for (std::size_t i = 0; i < od.size(); ++i) r.timestamps_ms.push_back(static_cast<double>(i) * 40.0);
  for (auto& ch : r.intensity)
    for (auto& w : ch) {
      w.resize(od.size());
      for (std::size_t i = 0; i < od.size(); ++i) w[i] = i0 * std::exp(-od[i]);
    }
  return r;
}

}  // namespace

TEST_CASE("optical density") {
  const auto flat = intensity_to_od(fnirs_from_od(std::vector<double>(100, 0.0)));
  for (double v : flat.od[3][1]) CHECK(v == 0.0);

  std::vector<double> od(200, 0.0);
  for (std::size_t i = 100; i < 200; ++i) od[i] = 1.0;
  const auto one = intensity_to_od(fnirs_from_od(od), TimeSpan{0, 4000});
  CHECK(one.od[0][0][150] == doctest::Approx(1.0));

  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(-0.2, 0.2);
  // Reference window [0, 2 s) holds zero OD, so I0 is exact.
  std::vector<double> truth(300, 0.0);
  for (std::size_t i = 50; i < truth.size(); ++i) truth[i] = u(rng);
  const auto rt = intensity_to_od(fnirs_from_od(truth), TimeSpan{0, 2000});
  for (std::size_t i = 0; i < truth.size(); ++i) CHECK(std::abs(rt.od[5][0][i] - truth[i]) < 1e-12);

  auto bad = fnirs_from_od(std::vector<double>(50, 0.0));
  bad.intensity[2][1][17] = 0.0;
  try {
    intensity_to_od(bad);
    FAIL("nonpositive intensity accepted");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::Data);
    const std::string msg = e.what();
    CHECK(msg.find("17") != std::string::npos);
    CHECK(msg.find("850") != std::string::npos);
  }
}

TEST_CASE("PPG extraction keeps the pulse and drops drift") {
  const std::size_t n = 25 * 300;
  const auto pulse = synth::sine(1.2, 25, n, 0.01);
  const auto drift = synth::sine(0.05, 25, n, 0.05);
  OpticalDensity od;
  od.timestamps_ms.resize(n);
  for (std::size_t i = 0; i < n; ++i) od.timestamps_ms[i] = static_cast<double>(i) * 40.0;
  for (auto& ch : od.od)
    for (auto& w : ch) {
      w.resize(n);
      for (std::size_t i = 0; i < n; ++i) w[i] = pulse[i] + drift[i];
    }
  const auto ppg = extract_ppg(od);
  std::vector<double> resid(n);
  for (std::size_t i = 0; i < n; ++i) resid[i] = ppg.channels[0][i] - pulse[i];
  const std::span<const double> mid_r(resid.data() + 1000, n - 2000);
  CHECK(20 * std::log10(rms(mid_r) / rms(drift)) <= -20);

  for (auto& ch : od.od)
    for (auto& w : ch) std::fill(w.begin(), w.end(), 0.0);
  const auto zero = extract_ppg(od);
  for (double v : zero.channels[7]) CHECK(v == 0.0);
}

TEST_CASE("MBLL inversion") {
  const OpticalConstants c;
  const auto od = mbll_forward(1.0, -0.5, c);
  OpticalDensity s;
  s.timestamps_ms = {0, 40};
  for (auto& ch : s.od) ch = {std::vector<double>{0.0, od[0]}, std::vector<double>{0.0, od[1]}};
  const auto h = mbll(s, c);
  CHECK(h.hbo[0][0] == 0.0);
  CHECK(h.hbr[0][0] == 0.0);
  CHECK(std::abs(h.hbo[4][1] - 1.0) < 1e-9);
  CHECK(std::abs(h.hbr[4][1] + 0.5) < 1e-9);
  CHECK(h.hbt[4][1] == doctest::Approx(0.5));

  OpticalConstants singular;
  singular.extinction = {{{1.0, 2.0}, {2.0, 4.0}}};
  CHECK_THROWS_AS(singular.validate(), Error);
  CHECK_THROWS_AS(mbll(s, singular), Error);
  const auto back = OpticalConstants::from_json(c.to_json());
  CHECK(back.extinction == c.extinction);
  CHECK(back.dpf == c.dpf);
}

namespace {

HemodynamicSeries hemo(std::size_t n, const std::function<double(std::size_t)>& f) {
  HemodynamicSeries h;
  for (std::size_t i = 0; i < n; ++i) h.timestamps_ms.push_back(static_cast<double>(i) * 40.0);
  for (std::size_t c = 0; c < kFnirsChannels; ++c) {
    h.hbo[c].resize(n);
    h.hbr[c].resize(n);
    for (std::size_t i = 0; i < n; ++i) h.hbo[c][i] = h.hbr[c][i] = f(i);
  }
  h.recompute_hbt();
  return h;
}

}  // namespace

TEST_CASE("fNIRS baseline correction") {
  const auto t = trial_at(10000, 20000);
  auto r = fnirs_baseline_correct(hemo(1000, [](std::size_t) { return 2.5; }), t);
  for (std::size_t i = 250; i < 500; ++i) CHECK(r.series.hbo[0][i] == doctest::Approx(0.0));

  r = fnirs_baseline_correct(hemo(1000, [](std::size_t i) { return i >= 250 ? 1.7 : 0.3; }), t);
  for (std::size_t i = 250; i < 500; ++i) CHECK(r.series.hbr[2][i] == doctest::Approx(1.4));

  r = fnirs_baseline_correct(hemo(1000, [](std::size_t i) { return 0.01 * static_cast<double>(i); }), t);
  double base = 0.0;
  for (std::size_t i = 125; i < 250; ++i) base += 0.01 * static_cast<double>(i);
  base /= 125.0;
  CHECK(r.series.hbo[1][300] == doctest::Approx(3.0 - base));
  CHECK(r.series.hbt[1][300] == doctest::Approx(2 * (3.0 - base)));

  r = fnirs_baseline_correct(hemo(1000, [](std::size_t) { return 1.0; }), trial_at(2000, 6000));
  REQUIRE(r.flagged.size() == 1);
  CHECK(r.flagged[0].reason == "insufficient_baseline");
}

TEST_CASE("systemic filter band") {
  const std::size_t n = 25 * 1200;
  const auto cardiac = synth::sine(1.0, 25, n);
  const auto slow = synth::sine(0.05, 25, n);
  auto h1 = hemo(n, [&](std::size_t i) { return cardiac[i]; });
  auto h2 = hemo(n, [&](std::size_t i) { return slow[i]; });
  const auto f1 = systemic_filter(h1);
  const auto f2 = systemic_filter(h2);
  const auto mid = [&](const std::vector<double>& v) { return std::span<const double>(v).subspan(n / 4, n / 2); };
  CHECK(20 * std::log10(rms(mid(f1.hbo[0])) / rms(mid(cardiac))) <= -20);
  CHECK(std::abs(20 * std::log10(rms(mid(f2.hbo[0])) / rms(mid(slow)))) <= 3);
  const auto z = systemic_filter(hemo(2000, [](std::size_t) { return 0.0; }));
  for (double v : z.hbt[3]) CHECK(v == 0.0);
}

TEST_CASE("recording validation") {
  auto rec = eeg_recording(2);
  rec.sample_rate = 500;
  CHECK_THROWS_AS(rec.validate(), Error);
  auto r2 = eeg_recording(2);
  r2.channels[1].pop_back();
  CHECK_THROWS_AS(r2.validate(), Error);
}
