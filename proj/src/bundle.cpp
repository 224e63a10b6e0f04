#include <algorithm>
#include <cmath>

#include "meetbrain/csv.hpp"
#include "meetbrain/error.hpp"
#include "meetbrain/log.hpp"
#include "meetbrain/recordings.hpp"
#include "meetbrain/session.hpp"

namespace meetbrain::session {

namespace fs = std::filesystem;

const char* to_string(Stream s) { return s == Stream::Eeg ? "eeg" : "fnirs"; }

Stream stream_from_string(const std::string& s) {
  if (s == "eeg") return Stream::Eeg;
  if (s == "fnirs") return Stream::Fnirs;
  throw Error(ErrorKind::NotFound, "unknown stream '" + s + "'");
}

// ---- ingestion -------------------------------------------------------------

StreamBuffer::StreamBuffer(Stream stream) : stream_(stream) {
  columns_.resize(stream == Stream::Eeg ? 1 + sigproc::kEegChannels
                                        : 1 + sigproc::kFnirsChannels * sigproc::kWavelengths);
}

IngestAck StreamBuffer::ingest(std::string_view chunk) {
  const bool eeg = stream_ == Stream::Eeg;
  const auto t = csv::parse_numeric(chunk, columns_.size());
  std::string header;
  for (std::size_t i = 0; i < t.header.size(); ++i) header += (i ? "," : "") + t.header[i];
  if (header != (eeg ? recordings::eeg_header() : recordings::fnirs_header()))
    throw Error(ErrorKind::Schema, std::string(to_string(stream_)) + " chunk header mismatch");
  const auto& ts = t.columns[0];
  const double period = 1000.0 / (eeg ? sigproc::kEegRate : sigproc::kFnirsRate);
  double prev = rows() ? columns_[0].back() : -INFINITY;
  IngestAck ack;
  for (std::size_t i = 0; i < ts.size(); ++i) {
    if (!(ts[i] > prev))
      throw Error(ErrorKind::Data, std::string(to_string(stream_)) + " chunk timestamps not increasing at row " +
                                       std::to_string(i + 1) + "; chunk rejected");
    if (std::isfinite(prev) && ts[i] - prev > 2.0 * period) ++ack.discontinuities;
    prev = ts[i];
  }
  if (!eeg)
    for (std::size_t c = 1; c < t.columns.size(); ++c)
      for (double v : t.columns[c])
        if (!(v > 0.0)) throw Error(ErrorKind::Data, "fNIRS chunk contains a nonpositive intensity; chunk rejected");
  for (std::size_t c = 0; c < columns_.size(); ++c)
    columns_[c].insert(columns_[c].end(), t.columns[c].begin(), t.columns[c].end());
  discontinuities_ += ack.discontinuities;
  if (ack.discontinuities)
    log::warn("stream discontinuity", {{"stream", to_string(stream_)}, {"gaps", ack.discontinuities}});
  ack.accepted = ts.size();
  ack.total = rows();
  return ack;
}

namespace {

std::pair<std::size_t, std::size_t> span_rows(const std::vector<double>& ts, double from, double to) {
  const auto lo = std::lower_bound(ts.begin(), ts.end(), from) - ts.begin();
  const auto hi = std::lower_bound(ts.begin(), ts.end(), to) - ts.begin();
  return {static_cast<std::size_t>(lo), static_cast<std::size_t>(std::max(lo, hi))};
}

std::vector<double> slice(const std::vector<double>& v, std::pair<std::size_t, std::size_t> r) {
  return {v.begin() + static_cast<std::ptrdiff_t>(r.first), v.begin() + static_cast<std::ptrdiff_t>(r.second)};
}

sigproc::EegRecording slice_eeg(const sigproc::EegRecording& rec, double from, double to) {
  const auto r = span_rows(rec.timestamps_ms, from, to);
  sigproc::EegRecording out;
  out.sample_rate = rec.sample_rate;
  out.timestamps_ms = slice(rec.timestamps_ms, r);
  for (std::size_t c = 0; c < sigproc::kEegChannels; ++c) out.channels[c] = slice(rec.channels[c], r);
  return out;
}

sigproc::FnirsRecording slice_fnirs(const sigproc::FnirsRecording& rec, double from, double to) {
  const auto r = span_rows(rec.timestamps_ms, from, to);
  sigproc::FnirsRecording out;
  out.sample_rate = rec.sample_rate;
  out.timestamps_ms = slice(rec.timestamps_ms, r);
  for (std::size_t c = 0; c < sigproc::kFnirsChannels; ++c)
    for (std::size_t w = 0; w < sigproc::kWavelengths; ++w) out.intensity[c][w] = slice(rec.intensity[c][w], r);
  return out;
}

}  // namespace

sigproc::EegRecording StreamBuffer::eeg(double from_ms, double to_ms) const {
  if (stream_ != Stream::Eeg) throw Error(ErrorKind::Input, "not an EEG stream");
  sigproc::EegRecording rec;
  rec.timestamps_ms = columns_[0];
  for (std::size_t c = 0; c < sigproc::kEegChannels; ++c) rec.channels[c] = columns_[1 + c];
  return slice_eeg(rec, from_ms, to_ms);
}

sigproc::FnirsRecording StreamBuffer::fnirs(double from_ms, double to_ms) const {
  if (stream_ != Stream::Fnirs) throw Error(ErrorKind::Input, "not an fNIRS stream");
  sigproc::FnirsRecording rec;
  rec.timestamps_ms = columns_[0];
  for (std::size_t c = 0; c < sigproc::kFnirsChannels; ++c)
    for (std::size_t w = 0; w < sigproc::kWavelengths; ++w) rec.intensity[c][w] = columns_[1 + 2 * c + w];
  return slice_fnirs(rec, from_ms, to_ms);
}

// ---- ratings.csv -------------------------------------------------------------

namespace {

constexpr const char* kRatingsHeader =
    "trial_id,clip_id,music_quadrant,session,block,t_prep,t_music_on,t_music_off,t_rating,t_rest,complete,"
    "valence,arousal,liking,label,label_source";

}  // namespace

std::string format_ratings_csv(const std::vector<TrialRecord>& trials) {
  std::string out = kRatingsHeader;
  out += '\n';
  for (const auto& r : trials) {
    out += csv::quote(r.trial_id) + ',' + csv::quote(r.clip_id) + ',' + std::string(to_string(r.music_quadrant)) + ',' +
           std::to_string(r.session) + ',' + std::to_string(r.block) + ',';
    for (double t : {r.t_prep, r.t_music_on, r.t_music_off}) {
      csv::append_number(out, t);
      out += ',';
    }
    if (r.t_rating) csv::append_number(out, *r.t_rating);
    out += ',';
    csv::append_number(out, r.t_rest);
    out += r.complete ? ",1," : ",0,";
    if (r.rating)
      out += std::to_string(r.rating->valence) + ',' + std::to_string(r.rating->arousal) + ',' +
             std::to_string(r.rating->liking) + ',';
    else
      out += ",,,";
    if (r.label) out += std::string(to_string(r.label->quadrant)) + ',' + analysis::to_string(r.label->source);
    else out += ',';
    out += '\n';
  }
  return out;
}

std::vector<TrialRecord> parse_ratings_csv(std::string_view text) {
  const auto t = csv::parse(text);
  std::string header;
  for (std::size_t i = 0; i < t.header.size(); ++i) header += (i ? "," : "") + t.header[i];
  if (header != kRatingsHeader) throw Error(ErrorKind::Schema, "ratings.csv header mismatch");
  std::vector<TrialRecord> out;
  for (std::size_t i = 0; i < t.rows.size(); ++i) {
    const auto& f = t.rows[i];
    const auto line = i + 2;
    TrialRecord r;
    r.trial_id = f[0];
    r.clip_id = f[1];
    r.music_quadrant = quadrant_from_string(f[2]);
    r.session = csv::to_int(f[3], line);
    r.block = csv::to_int(f[4], line);
    r.t_prep = csv::to_double(f[5], line);
    r.t_music_on = csv::to_double(f[6], line);
    r.t_music_off = csv::to_double(f[7], line);
    if (!f[8].empty()) r.t_rating = csv::to_double(f[8], line);
    r.t_rest = csv::to_double(f[9], line);
    r.complete = f[10] == "1";
    if (!f[11].empty()) {
      r.rating = analysis::RatingTriple{csv::to_int(f[11], line), csv::to_int(f[12], line), csv::to_int(f[13], line)};
      r.rating->validate();
    }
    if (!f[14].empty()) {
      analysis::TrialLabel l;
      l.quadrant = quadrant_from_string(f[14]);
      l.valence_high = high_valence(l.quadrant);
      l.arousal_high = high_arousal(l.quadrant);
      l.source = analysis::label_source_from_string(f[15]);
      r.label = l;
    }
    out.push_back(std::move(r));
  }
  return out;
}

// ---- bundles -------------------------------------------------------------------

std::vector<SessionBundle> make_bundles(const SessionMachine& machine, const sigproc::EegRecording& eeg,
                                        const sigproc::FnirsRecording& fnirs) {
  const auto& starts = machine.session_starts();
  const auto& plan = machine.plan();
  const auto& events = machine.timeline().events;
  // Signal boundary before session k: the last event of the previous
  // session, so the idle gap stays with the session it precedes and the
  // first trial keeps its pre-stimulus baseline.
  auto signal_cut = [&](std::size_t k) {
    double cut = starts[k];
    for (const auto& e : events)
      if (e.t_ms < starts[k]) cut = e.t_ms;
    return cut;
  };
  std::vector<SessionBundle> out;
  for (std::size_t k = 0; k < starts.size(); ++k) {
    // Events belong to the session that began most recently; the first
    // session also owns anything recorded before it started.
    const double from = k == 0 ? -INFINITY : starts[k];
    const double to = k + 1 < starts.size() ? starts[k + 1] : INFINITY;
    const double sig_from = k == 0 ? -INFINITY : signal_cut(k);
    const double sig_to = k + 1 < starts.size() ? signal_cut(k + 1) : INFINITY;
    SessionBundle b;
    b.participant_id = plan.participant_id;
    b.session = static_cast<int>(k) + 1;
    for (const auto& e : events)
      if (e.t_ms >= from && e.t_ms < to) b.events.events.push_back(e);
    b.eeg = slice_eeg(eeg, sig_from, sig_to);
    b.fnirs = slice_fnirs(fnirs, sig_from, sig_to);
    std::vector<std::string> unrated, incomplete;
    for (const auto& r : machine.trials()) {
      if (r.session != b.session) continue;
      b.trials.push_back(r);
      if (!r.complete) incomplete.push_back(r.trial_id);
      else if (!r.rating) unrated.push_back(r.trial_id);
    }
    std::map<std::string, Quadrant> clips;
    for (int blk = 0; blk < plan.blocks_per_session; ++blk) {
      const auto idx = static_cast<std::size_t>(static_cast<int>(k) * plan.blocks_per_session + blk);
      for (const auto& c : plan.trial_clips[idx]) clips[c] = plan.block_quadrants[idx];
    }
    for (const auto& [id, q] : clips) b.clips.push_back({id, q});

    const int planned = plan.blocks_per_session * plan.trials_per_block;
    nlohmann::ordered_json m;
    m["participant_id"] = plan.participant_id;
    m["session"] = b.session;
    m["planned_trials"] = planned;
    m["recorded_trials"] = b.trials.size();
    m["incomplete"] = static_cast<int>(b.trials.size()) < planned || !incomplete.empty();
    m["incomplete_trials"] = incomplete;
    m["unrated_trials"] = unrated;
    m["closed_early"] = machine.closed() && machine.state().phase != Phase::Finished;
    m["eeg_rate_hz"] = eeg.sample_rate;
    m["fnirs_rate_hz"] = fnirs.sample_rate;
    m["eeg_samples"] = b.eeg.size();
    m["fnirs_samples"] = b.fnirs.size();
    m["timing"] = machine.timing().to_json();
    m["plan_seed"] = machine.seed();
    m["arithmetic"] = nlohmann::json::array();
    for (const auto& a : machine.arithmetic()) {
      if (a.block_id.rfind("s" + std::to_string(b.session) + "b", 0) != 0) continue;
      nlohmann::ordered_json aj;
      aj["block_id"] = a.block_id;
      aj["problems"] = nlohmann::json::array();
      for (const auto& p : a.problems) aj["problems"].push_back(p.text());
      aj["answers"] = a.answers;
      aj["t_open"] = a.t_open;
      aj["t_submit"] = a.answers.empty() ? nlohmann::json(nullptr) : nlohmann::json(a.t_submit);
      m["arithmetic"].push_back(aj);
    }
    b.manifest = m;
    out.push_back(std::move(b));
  }
  return out;
}

fs::path bundle_dir(const fs::path& root, const std::string& participant, int session) {
  return root / "participant" / participant / ("session" + std::to_string(session));
}

void write_bundle(const SessionBundle& b, const fs::path& root) {
  const auto dir = bundle_dir(root, b.participant_id, b.session);
  fs::create_directories(dir);
  csv::write_file(dir / "manifest.json", b.manifest.dump(2) + "\n");
  recordings::save_events(dir / "events.jsonl", b.events);
  recordings::save_eeg(dir / "eeg.csv", b.eeg);
  recordings::save_fnirs(dir / "fnirs.csv", b.fnirs);
  csv::write_file(dir / "ratings.csv", format_ratings_csv(b.trials));
  nlohmann::ordered_json clips = nlohmann::json::array();
  for (const auto& c : b.clips) clips.push_back({{"clip_id", c.clip_id}, {"quadrant", std::string(to_string(c.quadrant))}});
  csv::write_file(dir / "clips.json", clips.dump(2) + "\n");
}

std::vector<fs::path> export_dataset(const SessionMachine& machine, const sigproc::EegRecording& eeg,
                                     const sigproc::FnirsRecording& fnirs, const fs::path& root) {
  if (!machine.closed() && machine.state().phase != Phase::Finished)
    throw Error(ErrorKind::Conflict, "session must be finished or closed before export");
  std::vector<fs::path> dirs;
  for (const auto& b : make_bundles(machine, eeg, fnirs)) {
    write_bundle(b, root);
    dirs.push_back(bundle_dir(root, b.participant_id, b.session));
  }
  return dirs;
}

SessionBundle load_bundle(const fs::path& dir) {
  SessionBundle b;
  try {
    b.manifest = nlohmann::json::parse(csv::read_file(dir / "manifest.json"));
    b.participant_id = b.manifest.at("participant_id").get<std::string>();
    b.session = b.manifest.at("session").get<int>();
    for (const auto& c : nlohmann::json::parse(csv::read_file(dir / "clips.json")))
      b.clips.push_back({c.at("clip_id").get<std::string>(), quadrant_from_string(c.at("quadrant").get<std::string>())});
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::Schema, "bundle " + dir.string() + ": " + e.what());
  }
  b.events = recordings::load_events(dir / "events.jsonl");
  b.eeg = recordings::load_eeg(dir / "eeg.csv");
  b.fnirs = recordings::load_fnirs(dir / "fnirs.csv");
  b.trials = parse_ratings_csv(csv::read_file(dir / "ratings.csv"));
  return b;
}

std::vector<fs::path> find_bundles(const fs::path& root) {
  std::vector<fs::path> out;
  const auto base = root / "participant";
  if (!fs::is_directory(base)) throw Error(ErrorKind::NotFound, "no participant directory under " + root.string());
  for (const auto& p : fs::directory_iterator(base)) {
    if (!p.is_directory()) continue;
    for (const auto& s : fs::directory_iterator(p.path()))
      if (s.is_directory() && fs::exists(s.path() / "manifest.json")) out.push_back(s.path());
  }
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace meetbrain::session
