#include "meetbrain/session_server.hpp"

#include <httplib.h>

#include <chrono>
#include <regex>

#include "meetbrain/csv.hpp"
#include "meetbrain/error.hpp"
#include "meetbrain/log.hpp"

namespace meetbrain::session {

int http_status(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::NotFound: return 404;
    case ErrorKind::Conflict:
    case ErrorKind::OutOfWindow: return 409;
    case ErrorKind::Validation:
    case ErrorKind::Input:
    case ErrorKind::Schema:
    case ErrorKind::Data:
    case ErrorKind::Planning:
    case ErrorKind::Usage:
    case ErrorKind::Config: return 400;
    default: return 500;
  }
}

struct SessionServer::Impl {
  SessionManager& manager;
  ServerOptions options;
  httplib::Server http;
  std::thread serve_thread;
  std::jthread ticker;

  Impl(SessionManager& m, ServerOptions o) : manager(m), options(std::move(o)) {}

  static void reply(httplib::Response& res, int status, const nlohmann::json& body) {
    res.status = status;
    res.set_content(body.dump(), "application/json");
  }

  template <class Fn>
  static httplib::Server::Handler guarded(Fn fn) {
    return [fn](const httplib::Request& req, httplib::Response& res) {
      try {
        fn(req, res);
      } catch (const Error& e) {
        reply(res, http_status(e.kind()), {{"error", {{"kind", to_string(e.kind())}, {"message", e.what()}}}});
      } catch (const nlohmann::json::exception& e) {
        reply(res, 400, {{"error", {{"kind", "validation"}, {"message", e.what()}}}});
      } catch (const std::exception& e) {
        reply(res, 500, {{"error", {{"kind", "internal"}, {"message", e.what()}}}});
      }
    };
  }

  static nlohmann::json body_json(const httplib::Request& req) {
    if (req.body.empty()) return nlohmann::json::object();
    return nlohmann::json::parse(req.body);
  }

  void routes() {
    http.Post("/api/session", guarded([this](const httplib::Request& req, httplib::Response& res) {
      const auto body = body_json(req);
      SessionPlan plan;
      if (body.contains("plan")) {
        plan = SessionPlan::from_json(body.at("plan"));
      } else {
        if (!options.library) throw Error(ErrorKind::Validation, "request needs a plan; the server has no clip library");
        plan = build_plan(body.at("participant_id").get<std::string>(), *options.library,
                          body.value("seed", options.plan_seed));
      }
      const auto id = manager.create(plan);
      reply(res, 201, {{"id", id}, {"plan", plan.to_json()}});
    }));
    http.Post("/api/session/:id/start", guarded([this](const httplib::Request& req, httplib::Response& res) {
      const auto& id = req.path_params.at("id");
      manager.start(id);
      reply(res, 200, *manager.state(id));
    }));
    http.Get("/api/session/:id/state", guarded([this](const httplib::Request& req, httplib::Response& res) {
      reply(res, 200, *manager.state(req.path_params.at("id")));
    }));
    http.Post("/api/session/:id/rating", guarded([this](const httplib::Request& req, httplib::Response& res) {
      const auto body = body_json(req);
      const analysis::RatingTriple r{body.at("valence").get<int>(), body.at("arousal").get<int>(),
                                     body.at("liking").get<int>()};
      const auto rec = manager.record_rating(req.path_params.at("id"), body.at("trial_id").get<std::string>(), r);
      reply(res, 200, {{"trial_id", rec.trial_id},
                       {"label", std::string(to_string(rec.label->quadrant))},
                       {"label_source", analysis::to_string(rec.label->source)}});
    }));
    http.Post("/api/session/:id/arithmetic", guarded([this](const httplib::Request& req, httplib::Response& res) {
      const auto body = body_json(req);
      manager.submit_arithmetic(req.path_params.at("id"), body.at("block_id").get<std::string>(),
                                body.at("answers").get<std::vector<int>>());
      reply(res, 200, *manager.state(req.path_params.at("id")));
    }));
    http.Post("/api/session/:id/samples/:stream", guarded([this](const httplib::Request& req, httplib::Response& res) {
      const auto ack = manager.ingest(req.path_params.at("id"), stream_from_string(req.path_params.at("stream")), req.body);
      reply(res, 200, {{"accepted", ack.accepted}, {"total", ack.total}, {"discontinuities", ack.discontinuities}});
    }));
    http.Post("/api/session/:id/close", guarded([this](const httplib::Request& req, httplib::Response& res) {
      manager.close(req.path_params.at("id"));
      reply(res, 200, *manager.state(req.path_params.at("id")));
    }));
    http.Post("/api/session/:id/export", guarded([this](const httplib::Request& req, httplib::Response& res) {
      const auto dirs = manager.export_session(req.path_params.at("id"), options.export_dir);
      nlohmann::json paths = nlohmann::json::array();
      for (const auto& d : dirs) paths.push_back(d.string());
      reply(res, 200, {{"bundles", paths}});
    }));
    http.Get("/api/clip/:clip_id/audio", guarded([this](const httplib::Request& req, httplib::Response& res) {
      static const std::regex ok("[A-Za-z0-9_.-]{1,128}");
      const auto& clip = req.path_params.at("clip_id");
      if (!std::regex_match(clip, ok) || clip.find("..") != std::string::npos)
        throw Error(ErrorKind::Validation, "invalid clip id");
      const auto path = options.clip_dir / (clip + ".wav");
      if (!std::filesystem::exists(path)) throw Error(ErrorKind::NotFound, "no audio for clip '" + clip + "'");
      res.status = 200;
      res.set_content(csv::read_file(path), "audio/wav");
    }));
  }

  void start_ticker() {
    ticker = std::jthread([this](std::stop_token st) {
      while (!st.stop_requested()) {
        try {
          manager.tick();
        } catch (const std::exception& e) {
          log::warn("session tick failed", {{"error", e.what()}});
        }
        std::this_thread::sleep_for(std::chrono::milliseconds(options.tick_ms));
      }
    });
  }
};

SessionServer::SessionServer(SessionManager& manager, ServerOptions options)
    : impl_(std::make_unique<Impl>(manager, std::move(options))) {
  impl_->routes();
}

SessionServer::~SessionServer() { stop(); }

int SessionServer::start(const std::string& host, int port) {
  const int bound = port == 0 ? impl_->http.bind_to_any_port(host) : (impl_->http.bind_to_port(host, port) ? port : -1);
  if (bound < 0) throw Error(ErrorKind::Transport, "cannot bind " + host + ":" + std::to_string(port));
  impl_->start_ticker();
  impl_->serve_thread = std::thread([this] { impl_->http.listen_after_bind(); });
  impl_->http.wait_until_ready();
  return bound;
}

bool SessionServer::listen(const std::string& host, int port) {
  impl_->start_ticker();
  return impl_->http.listen(host, port);
}

void SessionServer::stop() {
  if (!impl_) return;
  impl_->http.stop();
  if (impl_->serve_thread.joinable()) impl_->serve_thread.join();
  if (impl_->ticker.joinable()) {
    impl_->ticker.request_stop();
    impl_->ticker.join();
  }
}

}  // namespace meetbrain::session
