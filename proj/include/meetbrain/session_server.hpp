#pragma once

#include <atomic>
#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <thread>

#include "meetbrain/error.hpp"
#include "meetbrain/screening.hpp"
#include "meetbrain/session_store.hpp"

namespace meetbrain::session {

struct ServerOptions {
  std::filesystem::path clip_dir;    // <clip_id>.wav files served to the client
  std::filesystem::path export_dir;  // bundle root for POST .../export
  std::optional<screening::ScreeningReport> library;  // enables plan-less session creation
  std::uint64_t plan_seed = 0;
  int tick_ms = 50;
};

// HTTP JSON front end over a SessionManager. Errors are returned as
// {"error": {"kind", "message"}} with a matching status code.
class SessionServer {
 public:
  SessionServer(SessionManager& manager, ServerOptions options);
  ~SessionServer();
  SessionServer(const SessionServer&) = delete;
  SessionServer& operator=(const SessionServer&) = delete;

  // Binds and serves on a background thread; returns the bound port.
  int start(const std::string& host, int port);
  // Blocks serving on the calling thread.
  bool listen(const std::string& host, int port);
  void stop();

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

int http_status(ErrorKind kind);

}  // namespace meetbrain::session
