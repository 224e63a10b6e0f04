#include <doctest.h>

#include <algorithm>
#include <filesystem>
#include <set>
#include <thread>

#include <httplib.h>

#include "meetbrain/error.hpp"
#include "meetbrain/promptgen.hpp"
#include "synth.hpp"

using namespace meetbrain;
using namespace meetbrain::promptgen;
namespace fs = std::filesystem;

namespace {

PromptLexicon single_word_lexicon() {
  SlotWords w;
  w[0] = {"happy"};
  w[1] = {"energetic"};
  w[2] = {"drum beats"};
  w[3] = {"exciting"};
  w[4] = {"party"};
  return PromptLexicon({{Quadrant::HAHV, w}});
}

fs::path temp_dir(const std::string& name) {
  auto d = fs::temp_directory_path() / ("meetbrain_test_" + name);
  fs::remove_all(d);
  fs::create_directories(d);
  return d;
}

AudioClip short_clip(double seconds) {
  AudioClip c;
  c.sample_rate = 8000;
  c.samples = synth::sine(330, 8000, static_cast<std::size_t>(seconds * 8000), 0.5);
  return c;
}

}  // namespace

TEST_CASE("singleton lexicon yields the single spec") {
  const auto specs = enumerate_prompts(single_word_lexicon(), Quadrant::HAHV, 1, 3);
  REQUIRE(specs.size() == 1);
  CHECK(specs[0].rendered ==
        "A happy and energetic piece with drum beats, carrying a exciting mood, fit for a party.");
  const auto repeated = enumerate_prompts(single_word_lexicon(), Quadrant::HAHV, 3, 3);
  CHECK(repeated.size() == 3);
  CHECK(repeated[2].slot_choices == repeated[0].slot_choices);
}

TEST_CASE("default lexicon produces 236 balanced, distinct, provenance-checked prompts") {
  const auto lex = PromptLexicon::builtin();
  lex.validate();
  std::size_t total = 0;
  for (auto q : kAllQuadrants) {
    const auto specs = enumerate_prompts(lex, q, 59, 7);
    CHECK(specs.size() == 59);
    total += specs.size();
    std::set<std::array<std::string, kSlotCount>> seen;
    for (const auto& s : specs) {
      CHECK(s.quadrant == q);
      CHECK(seen.insert(s.slot_choices).second);
      for (std::size_t k = 0; k < kSlotCount; ++k) {
        const auto& words = lex.words(q, kAllSlots[k]);
        CHECK(std::find(words.begin(), words.end(), s.slot_choices[k]) != words.end());
        CHECK(s.rendered.find(s.slot_choices[k]) != std::string::npos);
      }
      CHECK(s.rendered.find('{') == std::string::npos);
    }
  }
  CHECK(total == 236);
}

TEST_CASE("enumeration is deterministic and seed dependent") {
  const auto lex = PromptLexicon::builtin();
  const auto a = enumerate_prompts(lex, Quadrant::LALV, 20, 42);
  const auto b = enumerate_prompts(lex, Quadrant::LALV, 20, 42);
  const auto c = enumerate_prompts(lex, Quadrant::LALV, 20, 43);
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(a[i].rendered == b[i].rendered);
    CHECK(a[i].id() == b[i].id());
  }
  bool differs = false;
  for (std::size_t i = 0; i < a.size(); ++i) differs |= a[i].rendered != c[i].rendered;
  CHECK(differs);
}

TEST_CASE("render_prompt and template validation") {
  PromptSpec s;
  s.slot_choices = {"X", "X", "X", "X", "X"};
  const auto r = render_prompt(s);
  std::size_t count = 0;
  for (auto pos = r.find('X'); pos != std::string::npos; pos = r.find('X', pos + 1)) ++count;
  CHECK(count == 5);
  CHECK_THROWS_AS(validate_template("A {valence_adjective} piece"), Error);
  CHECK_THROWS_AS(validate_template("{valence_adjective} {valence_adjective} {arousal_adjective} "
                                    "{instrumentation} {emotional_tone} {context}"),
                  Error);
  validate_template("{context}: {valence_adjective} {arousal_adjective} {instrumentation} {emotional_tone}");
}

TEST_CASE("lexicon validation names the empty slot") {
  SlotWords w;
  w[0] = {"happy"};
  w[1] = {"energetic"};
  w[2] = {};
  w[3] = {"exciting"};
  w[4] = {"party"};
  const PromptLexicon lex({{Quadrant::HAHV, w}});
  try {
    enumerate_prompts(lex, Quadrant::HAHV, 1, 0);
    FAIL("expected a config error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::Config);
    CHECK(std::string(e.what()).find("instrumentation") != std::string::npos);
    CHECK(std::string(e.what()).find("HAHV") != std::string::npos);
  }
  auto j = PromptLexicon::builtin().to_json();
  j["HALV"]["valence_adjectives"].push_back("happy");
  CHECK_THROWS_AS(PromptLexicon::from_json(j).validate(), Error);
}

TEST_CASE("stub client resolves registered prompts and trims to duration") {
  const auto dir = temp_dir("stub");
  StubGenerationClient stub(dir);
  stub.register_clip("a calm piece", short_clip(40));
  const auto clip = request_generation("a calm piece", 30, stub);
  CHECK(clip.duration_s() == doctest::Approx(30.0).epsilon(1e-3));
  try {
    request_generation("unknown", 30, stub);
    FAIL("expected not found");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::NotFound);
  }
  CHECK_THROWS_AS(request_generation("a calm piece", 0, stub), Error);

  stub.register_clip("second", short_clip(2));
  const auto batch = request_generation_batch({"a calm piece", "second"}, 30, stub, 2);
  REQUIRE(batch.size() == 2);
  CHECK(batch[1].duration_s() == doctest::Approx(2.0));
}

TEST_CASE("HTTP client posts JSON and decodes WAV") {
  httplib::Server srv;
  std::string seen_prompt;
  srv.Post("/generate", [&](const httplib::Request& req, httplib::Response& res) {
    const auto j = nlohmann::json::parse(req.body);
    seen_prompt = j.at("prompt");
    const auto bytes = encode_wav(short_clip(j.at("duration_s").get<double>()));
    res.set_content(std::string(bytes.begin(), bytes.end()), "audio/wav");
  });
  srv.Post("/down", [](const httplib::Request&, httplib::Response& res) { res.status = 503; });
  const int port = srv.bind_to_any_port("127.0.0.1");
  std::thread t([&] { srv.listen_after_bind(); });
  srv.wait_until_ready();

  HttpGenerationClient client("http://127.0.0.1:" + std::to_string(port));
  const auto clip = request_generation("bright piano", 1.5, client);
  CHECK(seen_prompt == "bright piano");
  CHECK(clip.duration_s() == doctest::Approx(1.5));

  HttpGenerationClient down("http://127.0.0.1:" + std::to_string(port), "/down");
  try {
    request_generation("x", 1, down);
    FAIL("expected transport error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::Transport);
    CHECK(e.retryable());
  }
  srv.stop();
  t.join();
}
