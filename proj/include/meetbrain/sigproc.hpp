#pragma once

#include <array>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

namespace meetbrain::sigproc {

inline constexpr double kEegRate = 250.0;
inline constexpr double kFnirsRate = 25.0;
inline constexpr std::size_t kEegChannels = 2;  // Fp1, Fp2 referenced to A1
inline constexpr std::size_t kFnirsChannels = 8;
inline constexpr std::size_t kWavelengths = 2;
inline constexpr std::array<int, kWavelengths> kWavelengthNm{735, 850};

// ---- streams ---------------------------------------------------------------

struct EegRecording {
  std::vector<double> timestamps_ms;
  std::array<std::vector<double>, kEegChannels> channels;  // microvolts
  double sample_rate = kEegRate;
  std::vector<bool> mask;  // true = excluded; empty means nothing masked

  std::size_t size() const { return timestamps_ms.size(); }
  void validate() const;
};

using FnirsChannelPair = std::array<std::vector<double>, kWavelengths>;  // [735, 850]

struct FnirsRecording {
  std::vector<double> timestamps_ms;
  std::array<FnirsChannelPair, kFnirsChannels> intensity;  // raw, strictly positive
  double sample_rate = kFnirsRate;

  std::size_t size() const { return timestamps_ms.size(); }
  void validate() const;
};

enum class EventKind {
  TrialPrep,
  MusicOn,
  MusicOff,
  RatingOpen,
  Rest,
  BlockStart,
  ArtifactStart,
  ArtifactEnd,
  Arithmetic,
  SessionEnd,
};
const char* to_string(EventKind k);
EventKind event_kind_from_string(const std::string& s);

struct Event {
  double t_ms = 0.0;
  EventKind kind = EventKind::TrialPrep;
  std::string trial_id;
  bool operator==(const Event&) const = default;
};

struct EventTimeline {
  std::vector<Event> events;

  // Sorted by time (stable), artifacts paired and well nested.
  void validate() const;
  std::optional<double> music_on(const std::string& trial_id) const;
  std::optional<double> music_off(const std::string& trial_id) const;
  // trial ids in order of their music_on events
  std::vector<std::string> trials() const;

  std::string to_jsonl() const;
  static EventTimeline from_jsonl(const std::string& text);
};

struct OpticalDensity {
  std::vector<double> timestamps_ms;
  std::array<FnirsChannelPair, kFnirsChannels> od;
  double sample_rate = kFnirsRate;
  std::size_t size() const { return timestamps_ms.size(); }
};

struct PpgSeries {
  std::vector<double> timestamps_ms;
  std::array<std::vector<double>, kFnirsChannels> channels;
  double sample_rate = kFnirsRate;
  std::size_t size() const { return timestamps_ms.size(); }
};

// Concentration changes in micromolar.
struct HemodynamicSeries {
  std::vector<double> timestamps_ms;
  std::array<std::vector<double>, kFnirsChannels> hbo, hbr, hbt;
  double sample_rate = kFnirsRate;
  std::size_t size() const { return timestamps_ms.size(); }
  void recompute_hbt();
};

enum class Chromophore { HbO = 0, HbR = 1 };

struct OpticalConstants {
  // extinction[chromophore][wavelength] in 1/(mM*cm)
  std::array<std::array<double, kWavelengths>, 2> extinction{{{0.45, 1.06}, {1.10, 0.69}}};
  std::array<double, kWavelengths> dpf{6.0, 6.0};
  double separation_cm = 3.0;

  void validate() const;  // Error(Config) when the 2x2 system is singular
  nlohmann::json to_json() const;
  static OpticalConstants from_json(const nlohmann::json& j);
};

// ---- filtering -------------------------------------------------------------

struct Biquad {
  std::array<double, 3> b{};
  std::array<double, 3> a{1.0, 0.0, 0.0};
};
using Sos = std::vector<Biquad>;

// Butterworth band-pass from an order-`order` low-pass prototype (lo == 0
// gives a low-pass). Unit gain at the band center.
Sos design_butter_bandpass(double lo, double hi, double fs, int order = 4);
std::vector<double> sos_filter(const Sos& sos, std::span<const double> x);
// Forward-backward filtering with odd reflection padding and steady-state
// initial conditions; output length equals input length.
std::vector<double> sos_filtfilt(const Sos& sos, std::span<const double> x, std::size_t padlen);

// Zero-phase 4th-order Butterworth band-pass. Requires 0 <= lo < hi < fs/2.
std::vector<double> bandpass(std::span<const double> x, double lo, double hi, double fs);

// ---- EEG -------------------------------------------------------------------

struct TimeSpan {
  double start_ms = 0.0;
  double end_ms = 0.0;  // exclusive
};

// Artifact intervals from start/end markers; Error(Timeline) when unpaired.
std::vector<TimeSpan> artifact_spans(const EventTimeline& timeline);
std::vector<bool> artifact_mask(std::span<const double> timestamps_ms, const EventTimeline& timeline);
EegRecording exclude_artifacts(const EegRecording& rec, const EventTimeline& timeline);

enum class BaselineMode { EpochMean, PreStimulus };

struct EpochOptions {
  double start_s = 25.0;  // relative to music onset
  double end_s = 55.0;
  BaselineMode baseline = BaselineMode::EpochMean;
  double prestimulus_s = 1.0;  // only for BaselineMode::PreStimulus
};

struct EegEpoch {
  std::string trial_id;
  double onset_ms = 0.0;
  std::array<std::vector<double>, kEegChannels> data;
};

struct SkippedTrial {
  std::string trial_id;
  std::string reason;  // "incomplete" | "artifact" | "no_prestimulus"
};

struct EpochResult {
  std::vector<EegEpoch> epochs;
  std::vector<SkippedTrial> skipped;
};

EpochResult epoch_eeg(const EegRecording& rec, const EventTimeline& timeline, const EpochOptions& opt = {});

// Zero-phase band-pass of both channels, mask preserved.
EegRecording filter_eeg(const EegRecording& rec, double lo = 0.1, double hi = 40.0);

// ---- fNIRS / PPG -----------------------------------------------------------

// dOD = -ln(I / I0) with I0 the mean over [window.start, window.end), or the
// whole recording when no window is given.
OpticalDensity intensity_to_od(const FnirsRecording& rec, std::optional<TimeSpan> i0_window = std::nullopt);

enum class PpgSource { Wavelength850, Wavelength735, Average };
PpgSeries extract_ppg(const OpticalDensity& od, PpgSource source = PpgSource::Wavelength850, double lo = 0.5,
                      double hi = 4.0);

// Per-sample 2x2 inversion of the modified Beer-Lambert law.
HemodynamicSeries mbll(const OpticalDensity& od, const OpticalConstants& constants);
// dOD at both wavelengths for concentration changes in micromolar.
std::array<double, kWavelengths> mbll_forward(double dhbo_um, double dhbr_um, const OpticalConstants& c);

struct BaselineCorrection {
  HemodynamicSeries series;
  std::vector<SkippedTrial> flagged;
};
// Subtracts the mean of [onset - baseline_s, onset) from each trial's task
// span [music_on, music_off).
BaselineCorrection fnirs_baseline_correct(const HemodynamicSeries& series, const EventTimeline& timeline,
                                          double baseline_s = 5.0);

// 0.01-0.1 Hz band-pass per channel and chromophore; hbt recomputed.
HemodynamicSeries systemic_filter(const HemodynamicSeries& series, double lo = 0.01, double hi = 0.1);

// Index of the sample nearest to t_ms assuming uniform sampling.
std::ptrdiff_t sample_index(std::span<const double> timestamps_ms, double sample_rate, double t_ms);

}  // namespace meetbrain::sigproc
