#include <doctest.h>

#include <filesystem>

#include <httplib.h>

#include "meetbrain/audio.hpp"
#include "meetbrain/recordings.hpp"
#include "meetbrain/session_server.hpp"
#include "synth.hpp"

using namespace meetbrain;
using namespace meetbrain::session;
namespace fs = std::filesystem;
using json = nlohmann::json;

namespace {

struct Fixture {
  fs::path root;
  ManualClock clock{0};
  std::unique_ptr<SessionManager> manager;
  std::unique_ptr<SessionServer> server;
  std::unique_ptr<httplib::Client> client;

  explicit Fixture(bool with_library = false) {
    root = fs::temp_directory_path() / "meetbrain_http";
    fs::remove_all(root);
    fs::create_directories(root / "clips");
    AudioClip c{synth::sine(440, 8000, 8000, 0.3), 8000};
    write_wav(root / "clips" / "HAHV-01.wav", c);
    manager = std::make_unique<SessionManager>(root / "state", clock);
    ServerOptions opt;
    opt.clip_dir = root / "clips";
    opt.export_dir = root / "export";
    opt.tick_ms = 5;
    if (with_library) opt.library = synth::library(5);
    server = std::make_unique<SessionServer>(*manager, opt);
    const int port = server->start("127.0.0.1", 0);
    client = std::make_unique<httplib::Client>("127.0.0.1", port);
  }
  ~Fixture() { server->stop(); }

  httplib::Result post(const std::string& path, const json& body) {
    return client->Post(path, body.dump(), "application/json");
  }
  json state(const std::string& id) { return json::parse(client->Get("/api/session/" + id + "/state")->body); }
};

}  // namespace

TEST_CASE("HTTP session lifecycle") {
  Fixture f;
  const auto plan = build_plan("P01", synth::library(5), 1);
  auto res = f.post("/api/session", {{"plan", plan.to_json()}});
  REQUIRE(res);
  CHECK(res->status == 201);
  CHECK(json::parse(res->body)["id"] == "P01");
  CHECK(f.post("/api/session", {{"plan", plan.to_json()}})->status == 409);

  CHECK(f.post("/api/session/P01/start", json::object())->status == 200);
  auto s = f.state("P01");
  CHECK(s["phase"] == "preparation");
  CHECK(s["remaining_ms"] == 5000.0);

  res = f.post("/api/session/P01/rating", {{"trial_id", "s1b1t1"}, {"valence", 7}, {"arousal", 8}, {"liking", 6}});
  CHECK(res->status == 409);
  CHECK(json::parse(res->body)["error"]["kind"] == "out_of_window");

  f.clock.set(65000);
  f.manager->tick();
  CHECK(f.state("P01")["phase"] == "rating");
  res = f.post("/api/session/P01/rating", {{"trial_id", "s1b1t1"}, {"valence", 0}, {"arousal", 8}, {"liking", 6}});
  CHECK(res->status == 400);
  res = f.post("/api/session/P01/rating", {{"trial_id", "s1b1t1"}, {"valence", 7}, {"arousal", 8}, {"liking", 6}});
  REQUIRE(res->status == 200);
  CHECK(json::parse(res->body)["label"] == "HAHV");
  CHECK(f.post("/api/session/P01/rating", {{"trial_id", "s1b1t1"}, {"valence", 7}, {"arousal", 8}, {"liking", 6}})->status == 409);
  CHECK(f.state("P01")["phase"] == "rest");

  std::string chunk = recordings::eeg_header() + "\n";
  for (int i = 0; i < 250; ++i) chunk += std::to_string(i * 4) + ",1,2\n";
  res = f.client->Post("/api/session/P01/samples/eeg", chunk, "text/csv");
  REQUIRE(res->status == 200);
  CHECK(json::parse(res->body)["accepted"] == 250);
  res = f.client->Post("/api/session/P01/samples/eeg", "timestamp_ms,a,b,c\n5000,1,2,3\n", "text/csv");
  CHECK(res->status == 400);
  CHECK(json::parse(res->body)["error"]["kind"] == "schema");
  CHECK(f.client->Post("/api/session/P01/samples/ecg", chunk, "text/csv")->status == 404);

  CHECK(f.post("/api/session/P01/export", json::object())->status == 409);
  CHECK(f.post("/api/session/P01/close", json::object())->status == 200);
  res = f.post("/api/session/P01/export", json::object());
  REQUIRE(res->status == 200);
  const auto bundles = json::parse(res->body)["bundles"];
  REQUIRE(bundles.size() == 1);
  CHECK(fs::exists(fs::path(bundles[0].get<std::string>()) / "ratings.csv"));

  CHECK(f.client->Get("/api/session/nobody/state")->status == 404);
}

TEST_CASE("HTTP arithmetic interlude and clip audio") {
  Fixture f(true);
  auto res = f.post("/api/session", {{"participant_id", "P02"}, {"seed", 3}});
  REQUIRE(res->status == 201);
  f.post("/api/session/P02/start", json::object());
  f.clock.set(5 * 110000.0);
  f.manager->tick();
  const auto s = f.state("P02");
  REQUIRE(s["phase"] == "arithmetic");
  CHECK(s["problems"].size() == 3);
  CHECK(f.post("/api/session/P02/arithmetic", {{"block_id", "s1b2"}, {"answers", {1, 2, 3}}})->status == 409);
  CHECK(f.post("/api/session/P02/arithmetic", {{"block_id", "s1b1"}, {"answers", {1, 2, 3}}})->status == 200);
  CHECK(f.state("P02")["phase"] == "preparation");

  res = f.client->Get("/api/clip/HAHV-01/audio");
  REQUIRE(res->status == 200);
  CHECK(res->get_header_value("Content-Type") == "audio/wav");
  const std::vector<std::uint8_t> bytes(res->body.begin(), res->body.end());
  CHECK(decode_wav(bytes).samples.size() == 8000);
  CHECK(f.client->Get("/api/clip/HAHV-99/audio")->status == 404);
  CHECK(f.client->Get("/api/clip/..%2Fsecret/audio")->status >= 400);
}

TEST_CASE("error kinds map to status codes") {
  CHECK(http_status(ErrorKind::NotFound) == 404);
  CHECK(http_status(ErrorKind::Conflict) == 409);
  CHECK(http_status(ErrorKind::OutOfWindow) == 409);
  CHECK(http_status(ErrorKind::Validation) == 400);
  CHECK(http_status(ErrorKind::Consistency) == 500);
}
