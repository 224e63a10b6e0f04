#include "meetbrain/session.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <set>

#include "meetbrain/error.hpp"

namespace meetbrain::session {

namespace {

class Rng {
 public:
  explicit Rng(std::uint64_t seed) : gen_(seed) {}
  std::uint64_t below(std::uint64_t n) {
    const auto max = std::numeric_limits<std::uint64_t>::max();
    const std::uint64_t limit = max - max % n;
    std::uint64_t v;
    do v = gen_(); while (v >= limit);
    return v % n;
  }
  template <class T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) std::swap(v[i - 1], v[below(i)]);
  }

 private:
  std::mt19937_64 gen_;
};

}  // namespace

std::string block_id(int session, int block) { return "s" + std::to_string(session) + "b" + std::to_string(block); }

std::string trial_id(int session, int block, int trial) { return block_id(session, block) + "t" + std::to_string(trial); }

void SessionPlan::validate() const {
  if (participant_id.empty()) throw Error(ErrorKind::Planning, "participant id is empty");
  if (sessions < 1 || blocks_per_session < 1 || trials_per_block < 1)
    throw Error(ErrorKind::Planning, "plan dimensions must be positive");
  if (static_cast<int>(block_quadrants.size()) != block_count() || static_cast<int>(trial_clips.size()) != block_count())
    throw Error(ErrorKind::Planning, "plan must list " + std::to_string(block_count()) + " blocks");
  std::map<Quadrant, int> per_quadrant;
  std::map<std::string, int> plays;
  std::map<std::string, Quadrant> clip_quadrant;
  for (int b = 0; b < block_count(); ++b) {
    ++per_quadrant[block_quadrants[b]];
    const auto& clips = trial_clips[b];
    if (static_cast<int>(clips.size()) != trials_per_block)
      throw Error(ErrorKind::Planning, "block " + std::to_string(b + 1) + " does not have " +
                                           std::to_string(trials_per_block) + " trials");
    if (std::set<std::string>(clips.begin(), clips.end()).size() != clips.size())
      throw Error(ErrorKind::Planning, "block " + std::to_string(b + 1) + " repeats a clip");
    for (const auto& c : clips) {
      ++plays[c];
      auto [it, inserted] = clip_quadrant.emplace(c, block_quadrants[b]);
      if (!inserted && it->second != block_quadrants[b])
        throw Error(ErrorKind::Planning, "clip " + c + " is scheduled in blocks of different quadrants");
    }
  }
  if (block_count() % 4 == 0)
    for (auto q : kAllQuadrants)
      if (per_quadrant[q] != block_count() / 4)
        throw Error(ErrorKind::Planning, std::string(to_string(q)) + " must fill " + std::to_string(block_count() / 4) +
                                             " blocks");
  for (const auto& [clip, n] : plays)
    if (n != sessions)
      throw Error(ErrorKind::Planning, "clip " + clip + " is played " + std::to_string(n) + " times, expected " +
                                           std::to_string(sessions));
}

nlohmann::json SessionPlan::to_json() const {
  nlohmann::ordered_json j;
  j["participant_id"] = participant_id;
  j["sessions"] = sessions;
  j["blocks_per_session"] = blocks_per_session;
  j["trials_per_block"] = trials_per_block;
  j["block_quadrants"] = nlohmann::json::array();
  for (auto q : block_quadrants) j["block_quadrants"].push_back(std::string(to_string(q)));
  j["trial_clips"] = trial_clips;
  return j;
}

SessionPlan SessionPlan::from_json(const nlohmann::json& j) {
  SessionPlan p;
  try {
    p.participant_id = j.at("participant_id").get<std::string>();
    p.sessions = j.at("sessions").get<int>();
    p.blocks_per_session = j.at("blocks_per_session").get<int>();
    p.trials_per_block = j.at("trials_per_block").get<int>();
    for (const auto& q : j.at("block_quadrants")) p.block_quadrants.push_back(quadrant_from_string(q.get<std::string>()));
    p.trial_clips = j.at("trial_clips").get<std::vector<std::vector<std::string>>>();
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::Planning, std::string("malformed plan: ") + e.what());
  }
  p.validate();
  return p;
}

SessionPlan build_plan(const std::string& participant_id, const screening::ScreeningReport& library,
                       std::uint64_t seed) {
  SessionPlan plan;
  plan.participant_id = participant_id;
  Rng rng(seed);
  std::map<Quadrant, std::vector<std::string>> chosen;
  for (auto q : kAllQuadrants) {
    auto it = library.selected.find(q);
    std::vector<std::string> pool = it == library.selected.end() ? std::vector<std::string>{} : it->second;
    std::sort(pool.begin(), pool.end());
    if (static_cast<int>(pool.size()) < plan.trials_per_block)
      throw Error(ErrorKind::Planning, std::string(to_string(q)) + " has " + std::to_string(pool.size()) +
                                           " selected clips; " + std::to_string(plan.trials_per_block) + " needed");
    rng.shuffle(pool);
    pool.resize(static_cast<std::size_t>(plan.trials_per_block));
    chosen[q] = pool;
  }
  for (int s = 0; s < plan.sessions; ++s) {
    std::vector<Quadrant> order(kAllQuadrants.begin(), kAllQuadrants.end());
    rng.shuffle(order);
    for (auto q : order) {
      auto clips = chosen[q];
      rng.shuffle(clips);
      plan.block_quadrants.push_back(q);
      plan.trial_clips.push_back(std::move(clips));
    }
  }
  plan.validate();
  return plan;
}

nlohmann::json Timing::to_json() const {
  return {{"preparation_ms", preparation_ms},
          {"playback_ms", playback_ms},
          {"rating_timeout_ms", rating_timeout_ms},
          {"rest_ms", rest_ms},
          {"arithmetic_problems", arithmetic_problems}};
}

Timing Timing::from_json(const nlohmann::json& j) {
  Timing t;
  t.preparation_ms = j.at("preparation_ms").get<double>();
  t.playback_ms = j.at("playback_ms").get<double>();
  t.rating_timeout_ms = j.at("rating_timeout_ms").get<double>();
  t.rest_ms = j.at("rest_ms").get<double>();
  t.arithmetic_problems = j.at("arithmetic_problems").get<int>();
  if (!(t.preparation_ms > 0 && t.playback_ms > 0 && t.rating_timeout_ms > 0 && t.rest_ms > 0) ||
      t.arithmetic_problems < 1)
    throw Error(ErrorKind::Config, "phase durations and problem count must be positive");
  return t;
}

std::string ArithmeticProblem::text() const {
  return std::to_string(a) + " " + op + " " + std::to_string(b) + " = ?";
}

std::vector<ArithmeticProblem> make_problems(std::uint64_t seed, int block_index, int count) {
  Rng rng(seed ^ (0x9E3779B97F4A7C15ULL * static_cast<std::uint64_t>(block_index + 1)));
  std::vector<ArithmeticProblem> out;
  for (int i = 0; i < count; ++i) {
    ArithmeticProblem p;
    p.a = static_cast<int>(rng.below(10));
    p.b = static_cast<int>(rng.below(10));
    p.op = rng.below(2) ? '-' : '+';
    if (p.op == '-' && p.a < p.b) std::swap(p.a, p.b);
    out.push_back(p);
  }
  return out;
}

// ---- machine ---------------------------------------------------------------

const char* to_string(Phase p) {
  switch (p) {
    case Phase::Idle: return "idle";
    case Phase::Preparation: return "preparation";
    case Phase::Playback: return "playback";
    case Phase::Rating: return "rating";
    case Phase::Rest: return "rest";
    case Phase::Arithmetic: return "arithmetic";
    case Phase::Finished: return "finished";
  }
  return "?";
}

bool legal_transition(Phase from, Phase to) {
  switch (from) {
    case Phase::Idle: return to == Phase::Preparation;
    case Phase::Preparation: return to == Phase::Playback;
    case Phase::Playback: return to == Phase::Rating;
    case Phase::Rating: return to == Phase::Rest;
    case Phase::Rest:
      return to == Phase::Preparation || to == Phase::Arithmetic || to == Phase::Idle || to == Phase::Finished;
    case Phase::Arithmetic: return to == Phase::Preparation;
    case Phase::Finished: return false;
  }
  return false;
}

SessionMachine::SessionMachine(SessionPlan plan, Timing timing, std::uint64_t seed)
    : plan_(std::move(plan)), timing_(timing), seed_(seed) {
  plan_.validate();
}

void SessionMachine::check_clock(double now) {
  if (!std::isfinite(now)) throw Error(ErrorKind::Consistency, "clock reading is not finite");
  if (clock_started_ && now < state_.now)
    throw Error(ErrorKind::Consistency, "clock went backwards from " + std::to_string(state_.now) + " to " +
                                            std::to_string(now) + " ms");
  clock_started_ = true;
  state_.now = now;
}

void SessionMachine::enter(Phase to, double t) {
  if (!legal_transition(state_.phase, to))
    throw Error(ErrorKind::Consistency,
                std::string("illegal transition ") + to_string(state_.phase) + " -> " + to_string(to));
  transitions_.push_back({state_.phase, to, t});
  state_.phase = to;
  state_.phase_deadline.reset();
}

void SessionMachine::emit(sigproc::EventKind kind, double t, const std::string& trial) {
  timeline_.events.push_back({t, kind, trial});
}

TrialRecord& SessionMachine::current_record() { return trials_.back(); }

std::optional<std::string> SessionMachine::current_trial_id() const {
  switch (state_.phase) {
    case Phase::Preparation:
    case Phase::Playback:
    case Phase::Rating:
    case Phase::Rest: return trials_.back().trial_id;
    default: return std::nullopt;
  }
}

std::optional<std::string> SessionMachine::current_clip_id() const {
  if (!current_trial_id()) return std::nullopt;
  return trials_.back().clip_id;
}

std::vector<ArithmeticProblem> SessionMachine::current_problems() const {
  if (state_.phase != Phase::Arithmetic) return {};
  return arithmetic_.back().problems;
}

void SessionMachine::begin_trial(double t) {
  enter(Phase::Preparation, t);
  TrialRecord r;
  r.session = state_.session + 1;
  r.block = state_.block + 1;
  r.trial_id = trial_id(r.session, r.block, state_.trial + 1);
  r.clip_id = plan_.trial_clips[static_cast<std::size_t>(block_index())][static_cast<std::size_t>(state_.trial)];
  r.music_quadrant = plan_.block_quadrants[static_cast<std::size_t>(block_index())];
  r.t_prep = t;
  trials_.push_back(r);
  emit(sigproc::EventKind::TrialPrep, t, r.trial_id);
  state_.phase_deadline = t + timing_.preparation_ms;
}

void SessionMachine::finish_rest(double t) {
  auto& rec = current_record();
  rec.t_rest = t;
  rec.complete = true;
  if (state_.trial + 1 < plan_.trials_per_block) {
    ++state_.trial;
    begin_trial(t);
    return;
  }
  if (state_.block + 1 < plan_.blocks_per_session) {
    enter(Phase::Arithmetic, t);
    ArithmeticRecord a;
    a.block_id = block_id(state_.session + 1, state_.block + 1);
    a.problems = make_problems(seed_, block_index(), timing_.arithmetic_problems);
    a.t_open = t;
    arithmetic_.push_back(std::move(a));
    emit(sigproc::EventKind::Arithmetic, t, arithmetic_.back().block_id);
    return;
  }
  const auto session_name = "s" + std::to_string(state_.session + 1);
  if (state_.session + 1 < plan_.sessions) {
    enter(Phase::Idle, t);
    ++state_.session;
    state_.block = 0;
    state_.trial = 0;
  } else {
    enter(Phase::Finished, t);
  }
  emit(sigproc::EventKind::SessionEnd, t, session_name);
}

void SessionMachine::advance(double now) {
  check_clock(now);
  while (state_.phase_deadline && *state_.phase_deadline <= now) {
    const double t = *state_.phase_deadline;
    switch (state_.phase) {
      case Phase::Preparation: {
        enter(Phase::Playback, t);
        current_record().t_music_on = t;
        emit(sigproc::EventKind::MusicOn, t, current_record().trial_id);
        state_.phase_deadline = t + timing_.playback_ms;
        break;
      }
      case Phase::Playback: {
        enter(Phase::Rating, t);
        current_record().t_music_off = t;
        emit(sigproc::EventKind::MusicOff, t, current_record().trial_id);
        emit(sigproc::EventKind::RatingOpen, t, current_record().trial_id);
        state_.phase_deadline = t + timing_.rating_timeout_ms;
        break;
      }
      case Phase::Rating: {  // timed out: the trial stays unrated
        enter(Phase::Rest, t);
        emit(sigproc::EventKind::Rest, t, current_record().trial_id);
        state_.phase_deadline = t + timing_.rest_ms;
        break;
      }
      case Phase::Rest: finish_rest(t); break;
      default: throw Error(ErrorKind::Consistency, std::string("deadline set in phase ") + to_string(state_.phase));
    }
  }
}

void SessionMachine::start(double now) {
  advance(now);
  if (closed_) throw Error(ErrorKind::Conflict, "session is closed");
  if (state_.phase != Phase::Idle)
    throw Error(ErrorKind::Conflict, std::string("cannot start while in phase ") + to_string(state_.phase));
  session_starts_.push_back(now);
  const auto id = block_id(state_.session + 1, 1);
  begin_trial(now);
  // BlockStart precedes the first TrialPrep at the same instant.
  timeline_.events.insert(timeline_.events.end() - 1, {now, sigproc::EventKind::BlockStart, id});
}

const TrialRecord& SessionMachine::record_rating(double now, const std::string& id,
                                                 const analysis::RatingTriple& rating) {
  rating.validate();
  advance(now);
  if (closed_) throw Error(ErrorKind::Conflict, "session is closed");
  for (const auto& r : trials_)
    if (r.trial_id == id && r.rating) throw Error(ErrorKind::Conflict, "trial " + id + " is already rated");
  if (state_.phase != Phase::Rating || trials_.back().trial_id != id)
    throw Error(ErrorKind::OutOfWindow, "rating window for trial " + id + " is not open (phase " +
                                            to_string(state_.phase) + ")");
  auto& rec = current_record();
  rec.rating = rating;
  rec.t_rating = now;
  rec.label = analysis::derive_label(rating, rec.music_quadrant);
  ++state_.collected_ratings;
  enter(Phase::Rest, now);
  emit(sigproc::EventKind::Rest, now, rec.trial_id);
  state_.phase_deadline = now + timing_.rest_ms;
  return rec;
}

void SessionMachine::submit_arithmetic(double now, const std::string& id, const std::vector<int>& answers) {
  advance(now);
  if (closed_) throw Error(ErrorKind::Conflict, "session is closed");
  if (state_.phase != Phase::Arithmetic || arithmetic_.back().block_id != id)
    throw Error(ErrorKind::OutOfWindow, "no arithmetic interlude open for block " + id);
  auto& a = arithmetic_.back();
  if (answers.size() != a.problems.size())
    throw Error(ErrorKind::Validation, "expected " + std::to_string(a.problems.size()) + " answers, got " +
                                           std::to_string(answers.size()));
  a.answers = answers;
  a.t_submit = now;
  ++state_.block;
  state_.trial = 0;
  begin_trial(now);
  timeline_.events.insert(timeline_.events.end() - 1,
                          {now, sigproc::EventKind::BlockStart, block_id(state_.session + 1, state_.block + 1)});
}

void SessionMachine::close(double now) {
  advance(now);
  if (closed_) return;
  closed_ = true;
  if (state_.phase != Phase::Finished && state_.phase != Phase::Idle)
    emit(sigproc::EventKind::SessionEnd, now, "s" + std::to_string(state_.session + 1));
  state_.phase_deadline.reset();
}

nlohmann::json SessionMachine::state_json() const {
  nlohmann::ordered_json j;
  j["participant_id"] = plan_.participant_id;
  j["phase"] = to_string(state_.phase);
  j["session"] = state_.session + 1;
  j["block"] = state_.block + 1;
  j["trial"] = state_.trial + 1;
  j["now_ms"] = state_.now;
  if (state_.phase_deadline) {
    j["phase_deadline_ms"] = *state_.phase_deadline;
    j["remaining_ms"] = std::max(0.0, *state_.phase_deadline - state_.now);
  } else {
    j["phase_deadline_ms"] = nullptr;
    j["remaining_ms"] = nullptr;
  }
  const auto tid = current_trial_id();
  j["trial_id"] = tid ? nlohmann::json(*tid) : nlohmann::json(nullptr);
  const auto cid = current_clip_id();
  j["clip_id"] = cid ? nlohmann::json(*cid) : nlohmann::json(nullptr);
  j["music_quadrant"] = tid ? nlohmann::json(std::string(to_string(trials_.back().music_quadrant)))
                            : nlohmann::json(nullptr);
  j["collected_ratings"] = state_.collected_ratings;
  j["closed"] = closed_;
  if (state_.phase == Phase::Arithmetic) {
    j["block_id"] = arithmetic_.back().block_id;
    j["problems"] = nlohmann::json::array();
    for (const auto& p : arithmetic_.back().problems) j["problems"].push_back(p.text());
  }
  return j;
}

}  // namespace meetbrain::session
