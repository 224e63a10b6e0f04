#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "meetbrain/analysis.hpp"
#include "meetbrain/quadrant.hpp"
#include "meetbrain/screening.hpp"
#include "meetbrain/sigproc.hpp"

namespace meetbrain::session {

// ---- plan ------------------------------------------------------------------

struct SessionPlan {
  std::string participant_id;
  int sessions = 2;
  int blocks_per_session = 4;
  int trials_per_block = 5;
  std::vector<Quadrant> block_quadrants;             // sessions * blocks_per_session, session-major
  std::vector<std::vector<std::string>> trial_clips;  // per block

  int block_count() const { return sessions * blocks_per_session; }
  int trial_count() const { return block_count() * trials_per_block; }
  // Error(Planning) when the shape or the repetition rule is violated.
  void validate() const;
  nlohmann::json to_json() const;
  static SessionPlan from_json(const nlohmann::json& j);
};

std::string block_id(int session, int block);  // 1-based: "s1b2"
std::string trial_id(int session, int block, int trial);  // "s1b2t3"

SessionPlan build_plan(const std::string& participant_id, const screening::ScreeningReport& library,
                       std::uint64_t seed);

// ---- timing ----------------------------------------------------------------

struct Timing {
  double preparation_ms = 5000.0;
  double playback_ms = 60000.0;
  double rating_timeout_ms = 30000.0;
  double rest_ms = 15000.0;
  int arithmetic_problems = 3;

  nlohmann::json to_json() const;
  static Timing from_json(const nlohmann::json& j);
};

struct ArithmeticProblem {
  int a = 0;
  int b = 0;
  char op = '+';
  int answer() const { return op == '+' ? a + b : a - b; }
  std::string text() const;
  bool operator==(const ArithmeticProblem&) const = default;
};

// ---- state machine ----------------------------------------------------------

enum class Phase { Idle, Preparation, Playback, Rating, Rest, Arithmetic, Finished };
const char* to_string(Phase p);
bool legal_transition(Phase from, Phase to);

struct TrialRecord {
  std::string trial_id;
  std::string clip_id;
  Quadrant music_quadrant = Quadrant::HAHV;
  int session = 0;  // 1-based
  int block = 0;    // 1-based within the session
  double t_prep = 0.0;
  double t_music_on = 0.0;
  double t_music_off = 0.0;
  std::optional<double> t_rating;  // rating receipt
  double t_rest = 0.0;             // end of the rest period
  std::optional<analysis::RatingTriple> rating;
  std::optional<analysis::TrialLabel> label;
  bool complete = false;  // the rest period has elapsed

  bool operator==(const TrialRecord&) const = default;
};

struct ArithmeticRecord {
  std::string block_id;
  std::vector<ArithmeticProblem> problems;
  std::vector<int> answers;
  double t_open = 0.0;
  double t_submit = 0.0;
  bool operator==(const ArithmeticRecord&) const = default;
};

struct SessionState {
  Phase phase = Phase::Idle;
  int session = 0;  // 0-based indices into the plan
  int block = 0;
  int trial = 0;
  std::optional<double> phase_deadline;  // absent for untimed phases
  std::size_t collected_ratings = 0;
  double now = 0.0;
};

struct Transition {
  Phase from;
  Phase to;
  double t_ms;
};

class SessionMachine {
 public:
  SessionMachine(SessionPlan plan, Timing timing = {}, std::uint64_t seed = 0);

  // Every call takes the current clock reading; the clock must not go back.
  void advance(double now);
  void start(double now);  // idle -> preparation
  const TrialRecord& record_rating(double now, const std::string& trial_id, const analysis::RatingTriple& rating);
  void submit_arithmetic(double now, const std::string& block_id, const std::vector<int>& answers);
  void close(double now);  // marks the session closed for export

  const SessionPlan& plan() const { return plan_; }
  const Timing& timing() const { return timing_; }
  std::uint64_t seed() const { return seed_; }
  const SessionState& state() const { return state_; }
  bool closed() const { return closed_; }
  const sigproc::EventTimeline& timeline() const { return timeline_; }
  const std::vector<TrialRecord>& trials() const { return trials_; }
  const std::vector<ArithmeticRecord>& arithmetic() const { return arithmetic_; }
  const std::vector<Transition>& transitions() const { return transitions_; }
  // Problems of the open interlude, empty outside the arithmetic phase.
  std::vector<ArithmeticProblem> current_problems() const;
  std::optional<std::string> current_trial_id() const;
  std::optional<std::string> current_clip_id() const;
  // Start time of each plan session that has begun, 0-based.
  const std::vector<double>& session_starts() const { return session_starts_; }

  nlohmann::json state_json() const;

 private:
  void check_clock(double now);
  void enter(Phase to, double t);
  void emit(sigproc::EventKind kind, double t, const std::string& trial);
  void begin_trial(double t);
  void finish_rest(double t);
  int block_index() const { return state_.session * plan_.blocks_per_session + state_.block; }
  TrialRecord& current_record();

  SessionPlan plan_;
  Timing timing_;
  std::uint64_t seed_;
  SessionState state_;
  bool closed_ = false;
  bool clock_started_ = false;
  sigproc::EventTimeline timeline_;
  std::vector<TrialRecord> trials_;
  std::vector<ArithmeticRecord> arithmetic_;
  std::vector<Transition> transitions_;
  std::vector<double> session_starts_;
};

std::vector<ArithmeticProblem> make_problems(std::uint64_t seed, int block_index, int count);

// ---- ingestion -------------------------------------------------------------

enum class Stream { Eeg, Fnirs };
const char* to_string(Stream s);
Stream stream_from_string(const std::string& s);

struct IngestAck {
  std::size_t accepted = 0;
  std::size_t total = 0;
  std::size_t discontinuities = 0;  // gaps longer than two sample periods in this chunk
};

// Append-only sample buffer for one stream. Chunks must carry the stream's
// CSV header and timestamps increasing past the previous chunk.
class StreamBuffer {
 public:
  explicit StreamBuffer(Stream stream);
  IngestAck ingest(std::string_view csv_chunk);
  Stream stream() const { return stream_; }
  std::size_t rows() const { return columns_.empty() ? 0 : columns_.front().size(); }
  const std::vector<std::vector<double>>& columns() const { return columns_; }
  std::size_t discontinuities() const { return discontinuities_; }

  sigproc::EegRecording eeg(double from_ms, double to_ms) const;
  sigproc::FnirsRecording fnirs(double from_ms, double to_ms) const;

 private:
  Stream stream_;
  std::vector<std::vector<double>> columns_;
  std::size_t discontinuities_ = 0;
};

// ---- bundles ---------------------------------------------------------------

struct ClipInfo {
  std::string clip_id;
  Quadrant quadrant = Quadrant::HAHV;
  bool operator==(const ClipInfo&) const = default;
};

struct SessionBundle {
  std::string participant_id;
  int session = 1;
  nlohmann::json manifest;
  sigproc::EventTimeline events;
  sigproc::EegRecording eeg;
  sigproc::FnirsRecording fnirs;
  std::vector<TrialRecord> trials;
  std::vector<ClipInfo> clips;
};

std::string format_ratings_csv(const std::vector<TrialRecord>& trials);
std::vector<TrialRecord> parse_ratings_csv(std::string_view text);

// Writes participant/<id>/session<k>/ under root for every session that has
// begun; returns the session directories. Error(Conflict) unless the machine
// is finished or closed.
std::vector<std::filesystem::path> export_dataset(const SessionMachine& machine, const sigproc::EegRecording& eeg,
                                                  const sigproc::FnirsRecording& fnirs,
                                                  const std::filesystem::path& root);
// Bundles in memory, one per begun session.
std::vector<SessionBundle> make_bundles(const SessionMachine& machine, const sigproc::EegRecording& eeg,
                                        const sigproc::FnirsRecording& fnirs);
void write_bundle(const SessionBundle& bundle, const std::filesystem::path& root);
SessionBundle load_bundle(const std::filesystem::path& session_dir);
// All session directories below root, sorted.
std::vector<std::filesystem::path> find_bundles(const std::filesystem::path& root);

// ---- simulation ------------------------------------------------------------

struct SimulationProfile {
  double eeg_noise_uv = 5.0;
  double alpha_uv = 12.0;      // 10 Hz component for high valence
  double beta_uv = 8.0;        // 20 Hz component for high arousal
  double hbo_response_um = 0.6;  // task HbO change for high valence
  double cardiac_low_hz = 1.0;
  double cardiac_high_hz = 1.4;  // high arousal
  double cardiac_od = 0.004;
  double mayer_od = 0.003;
  double optical_noise_od = 0.0005;
  double fallback_probability = 0.1;  // chance of a score of exactly 5
  double rating_delay_s = 6.0;
  double arithmetic_delay_s = 20.0;
  double inter_session_gap_s = 120.0;
  double subject_gain_spread = 0.3;

  nlohmann::json to_json() const;
  static SimulationProfile from_json(const nlohmann::json& j);
};

struct SimulatedParticipant {
  SessionMachine machine;
  sigproc::EegRecording eeg;
  sigproc::FnirsRecording fnirs;
};

// Drives the state machine with a simulated clock and synthesizes device
// streams whose components depend on each trial's derived label.
SimulatedParticipant simulate_device(const SessionPlan& plan, const SimulationProfile& profile, std::uint64_t seed,
                                     const Timing& timing = {},
                                     const sigproc::OpticalConstants& constants = {});

// Library of `per_quadrant` synthetic clip ids per quadrant.
screening::ScreeningReport synthetic_library(int per_quadrant);

}  // namespace meetbrain::session
