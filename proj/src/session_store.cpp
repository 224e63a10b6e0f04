#include "meetbrain/session_store.hpp"

#include <chrono>
#include <regex>

#include "meetbrain/csv.hpp"
#include "meetbrain/error.hpp"
#include "meetbrain/log.hpp"
#include "meetbrain/recordings.hpp"

namespace meetbrain::session {

namespace fs = std::filesystem;

double SystemClock::now_ms() const {
  using namespace std::chrono;
  return static_cast<double>(duration_cast<milliseconds>(system_clock::now().time_since_epoch()).count());
}

struct SessionManager::Live {
  Live(SessionPlan plan, Timing timing, std::uint64_t seed) : machine(std::move(plan), timing, seed) {}

  std::mutex mu;  // guards machine and journal
  SessionMachine machine;
  std::ofstream journal;
  std::mutex eeg_mu, fnirs_mu;
  StreamBuffer eeg{Stream::Eeg};
  StreamBuffer fnirs{Stream::Fnirs};
  std::ofstream eeg_file, fnirs_file;
  std::shared_ptr<const nlohmann::json> snapshot;

  void publish() { std::atomic_store(&snapshot, std::make_shared<const nlohmann::json>(machine.state_json())); }
};

namespace {

void check_id(const std::string& id) {
  static const std::regex ok("[A-Za-z0-9_.-]{1,64}");
  if (!std::regex_match(id, ok) || id == "." || id == "..")
    throw Error(ErrorKind::Validation, "participant id must match [A-Za-z0-9_.-]{1,64}");
}

void append_line(std::ofstream& out, const nlohmann::json& j) {
  out << j.dump() << '\n';
  out.flush();
  if (!out) throw Error(ErrorKind::Data, "journal write failed");
}

// Data rows of a chunk, without its header line.
std::string_view body_of(std::string_view chunk) {
  const auto nl = chunk.find('\n');
  return nl == std::string_view::npos ? std::string_view{} : chunk.substr(nl + 1);
}

}  // namespace

SessionManager::SessionManager(fs::path state_dir, const Clock& clock, Timing timing, std::uint64_t seed)
    : dir_(std::move(state_dir)), clock_(clock), timing_(timing), seed_(seed) {
  fs::create_directories(dir_);
  recover();
}

SessionManager::~SessionManager() = default;

void SessionManager::recover() {
  std::vector<fs::path> dirs;
  for (const auto& e : fs::directory_iterator(dir_))
    if (e.is_directory() && fs::exists(e.path() / "journal.jsonl")) dirs.push_back(e.path());
  std::sort(dirs.begin(), dirs.end());
  for (const auto& d : dirs) {
    const auto text = csv::read_file(d / "journal.jsonl");
    std::unique_ptr<Live> live;
    std::size_t lineno = 0;
    std::size_t pos = 0;
    while (pos < text.size()) {
      auto nl = text.find('\n', pos);
      if (nl == std::string::npos) break;  // a torn final line is dropped
      const auto line = text.substr(pos, nl - pos);
      pos = nl + 1;
      ++lineno;
      const auto j = nlohmann::json::parse(line);
      const auto cmd = j.at("cmd").get<std::string>();
      const double now = j.value("now", 0.0);
      if (cmd == "create") {
        live = std::make_unique<Live>(SessionPlan::from_json(j.at("plan")), Timing::from_json(j.at("timing")),
                                      j.at("seed").get<std::uint64_t>());
        continue;
      }
      if (!live) throw Error(ErrorKind::Consistency, "journal " + d.string() + " does not begin with create");
      if (cmd == "start") live->machine.start(now);
      else if (cmd == "rating")
        live->machine.record_rating(now, j.at("trial_id").get<std::string>(),
                                    {j.at("valence").get<int>(), j.at("arousal").get<int>(), j.at("liking").get<int>()});
      else if (cmd == "arithmetic")
        live->machine.submit_arithmetic(now, j.at("block_id").get<std::string>(), j.at("answers").get<std::vector<int>>());
      else if (cmd == "close") live->machine.close(now);
      else throw Error(ErrorKind::Consistency, "journal " + d.string() + " line " + std::to_string(lineno) +
                                                   ": unknown command " + cmd);
    }
    if (!live) continue;
    for (auto [stream, name] : {std::pair{Stream::Eeg, "eeg.csv"}, {Stream::Fnirs, "fnirs.csv"}}) {
      const auto p = d / name;
      if (!fs::exists(p)) continue;
      const auto data = csv::read_file(p);
      auto& buf = stream == Stream::Eeg ? live->eeg : live->fnirs;
      if (body_of(data).find_first_not_of(" \r\n") != std::string_view::npos) buf.ingest(data);
    }
    live->journal.open(d / "journal.jsonl", std::ios::app);
    live->eeg_file.open(d / "eeg.csv", std::ios::app);
    live->fnirs_file.open(d / "fnirs.csv", std::ios::app);
    live->publish();
    const auto id = d.filename().string();
    log::info("recovered session", {{"id", id}, {"phase", to_string(live->machine.state().phase)}});
    sessions_.emplace(id, std::move(live));
  }
}

SessionManager::Live& SessionManager::find(const std::string& id) const {
  std::shared_lock lock(map_mu_);
  auto it = sessions_.find(id);
  if (it == sessions_.end()) throw Error(ErrorKind::NotFound, "no session '" + id + "'");
  return *it->second;
}

std::string SessionManager::create(const SessionPlan& plan) {
  plan.validate();
  const auto id = plan.participant_id;
  check_id(id);
  std::unique_lock lock(map_mu_);
  if (sessions_.count(id)) throw Error(ErrorKind::Conflict, "session '" + id + "' already exists");
  const auto d = dir_ / id;
  if (fs::exists(d / "journal.jsonl")) throw Error(ErrorKind::Conflict, "state for '" + id + "' already on disk");
  fs::create_directories(d);
  auto live = std::make_unique<Live>(plan, timing_, seed_);
  live->journal.open(d / "journal.jsonl", std::ios::trunc);
  append_line(live->journal, {{"cmd", "create"}, {"plan", plan.to_json()}, {"timing", timing_.to_json()}, {"seed", seed_}});
  live->eeg_file.open(d / "eeg.csv", std::ios::trunc);
  live->eeg_file << recordings::eeg_header() << '\n' << std::flush;
  live->fnirs_file.open(d / "fnirs.csv", std::ios::trunc);
  live->fnirs_file << recordings::fnirs_header() << '\n' << std::flush;
  live->publish();
  sessions_.emplace(id, std::move(live));
  return id;
}

template <class Fn>
auto SessionManager::command(const std::string& id, const nlohmann::json& entry, Fn&& fn) {
  auto& s = find(id);
  std::lock_guard lock(s.mu);
  const double now = clock_.now_ms();
  auto j = entry;
  j["now"] = now;
  struct Publish {
    Live& s;
    ~Publish() { s.publish(); }
  } publish{s};
  if constexpr (std::is_void_v<decltype(fn(s.machine, now))>) {
    fn(s.machine, now);
    append_line(s.journal, j);
  } else {
    auto r = fn(s.machine, now);
    append_line(s.journal, j);
    return r;
  }
}

void SessionManager::start(const std::string& id) {
  command(id, {{"cmd", "start"}}, [](SessionMachine& m, double now) { m.start(now); });
}

TrialRecord SessionManager::record_rating(const std::string& id, const std::string& trial,
                                          const analysis::RatingTriple& r) {
  return command(id, {{"cmd", "rating"}, {"trial_id", trial}, {"valence", r.valence}, {"arousal", r.arousal},
                      {"liking", r.liking}},
                 [&](SessionMachine& m, double now) { return m.record_rating(now, trial, r); });
}

void SessionManager::submit_arithmetic(const std::string& id, const std::string& block, const std::vector<int>& answers) {
  command(id, {{"cmd", "arithmetic"}, {"block_id", block}, {"answers", answers}},
          [&](SessionMachine& m, double now) { m.submit_arithmetic(now, block, answers); });
}

void SessionManager::close(const std::string& id) {
  command(id, {{"cmd", "close"}}, [](SessionMachine& m, double now) { m.close(now); });
}

IngestAck SessionManager::ingest(const std::string& id, Stream stream, std::string_view chunk) {
  auto& s = find(id);
  {
    std::lock_guard lock(s.mu);
    const auto phase = s.machine.state().phase;
    if (s.machine.closed() || phase == Phase::Finished)
      throw Error(ErrorKind::Conflict, "session '" + id + "' no longer accepts samples");
  }
  std::lock_guard lock(stream == Stream::Eeg ? s.eeg_mu : s.fnirs_mu);
  auto& buf = stream == Stream::Eeg ? s.eeg : s.fnirs;
  auto ack = buf.ingest(chunk);
  auto& file = stream == Stream::Eeg ? s.eeg_file : s.fnirs_file;
  auto body = body_of(chunk);
  file << body;
  if (!body.empty() && body.back() != '\n') file << '\n';
  file.flush();
  return ack;
}

std::vector<fs::path> SessionManager::export_session(const std::string& id, const fs::path& root) {
  auto& s = find(id);
  std::scoped_lock lock(s.mu, s.eeg_mu, s.fnirs_mu);
  s.machine.advance(std::max(clock_.now_ms(), s.machine.state().now));
  return export_dataset(s.machine, s.eeg.eeg(-INFINITY, INFINITY), s.fnirs.fnirs(-INFINITY, INFINITY), root);
}

void SessionManager::tick() {
  std::vector<Live*> all;
  {
    std::shared_lock lock(map_mu_);
    for (auto& [_, s] : sessions_) all.push_back(s.get());
  }
  for (auto* s : all) {
    std::lock_guard lock(s->mu);
    s->machine.advance(std::max(clock_.now_ms(), s->machine.state().now));
    s->publish();
  }
}

std::shared_ptr<const nlohmann::json> SessionManager::state(const std::string& id) const {
  return std::atomic_load(&find(id).snapshot);
}

std::vector<std::string> SessionManager::ids() const {
  std::shared_lock lock(map_mu_);
  std::vector<std::string> out;
  for (const auto& [id, _] : sessions_) out.push_back(id);
  return out;
}

SessionMachine SessionManager::machine(const std::string& id) const {
  auto& s = find(id);
  std::lock_guard lock(s.mu);
  return s.machine;
}

}  // namespace meetbrain::session
