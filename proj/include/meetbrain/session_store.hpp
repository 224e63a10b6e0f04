#pragma once

#include <atomic>
#include <filesystem>
#include <fstream>
#include <map>
#include <memory>
#include <mutex>
#include <shared_mutex>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "meetbrain/session.hpp"

namespace meetbrain::session {

class Clock {
 public:
  virtual ~Clock() = default;
  virtual double now_ms() const = 0;
};

// Wall-clock milliseconds since the Unix epoch.
class SystemClock final : public Clock {
 public:
  double now_ms() const override;
};

class ManualClock final : public Clock {
 public:
  explicit ManualClock(double start_ms = 0.0) : now_(start_ms) {}
  double now_ms() const override { return now_.load(); }
  void set(double t) { now_.store(t); }
  void advance(double dt) { now_.store(now_.load() + dt); }

 private:
  std::atomic<double> now_;
};

// Owns the live sessions. Each session's commands are serialized under its
// own mutex and journaled as JSON lines before returning; sample ingestion
// takes a separate per-stream lock. state() reads a published snapshot.
class SessionManager {
 public:
  SessionManager(std::filesystem::path state_dir, const Clock& clock, Timing timing = {}, std::uint64_t seed = 0);
  ~SessionManager();

  std::string create(const SessionPlan& plan);  // id = participant id
  void start(const std::string& id);
  TrialRecord record_rating(const std::string& id, const std::string& trial_id, const analysis::RatingTriple& rating);
  void submit_arithmetic(const std::string& id, const std::string& block_id, const std::vector<int>& answers);
  void close(const std::string& id);
  IngestAck ingest(const std::string& id, Stream stream, std::string_view csv_chunk);
  std::vector<std::filesystem::path> export_session(const std::string& id, const std::filesystem::path& root);

  // Advances every session to the current clock and republishes snapshots.
  void tick();
  std::shared_ptr<const nlohmann::json> state(const std::string& id) const;
  std::vector<std::string> ids() const;
  // Copy of the machine for inspection.
  SessionMachine machine(const std::string& id) const;
  const std::filesystem::path& state_dir() const { return dir_; }

 private:
  struct Live;
  Live& find(const std::string& id) const;
  void recover();
  template <class Fn>
  auto command(const std::string& id, const nlohmann::json& entry, Fn&& fn);

  std::filesystem::path dir_;
  const Clock& clock_;
  Timing timing_;
  std::uint64_t seed_;
  mutable std::shared_mutex map_mu_;
  std::map<std::string, std::unique_ptr<Live>> sessions_;
};

}  // namespace meetbrain::session
