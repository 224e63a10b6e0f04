#include <doctest.h>

#include <random>

#include "meetbrain/error.hpp"
#include "meetbrain/screening.hpp"
#include "synth.hpp"

using namespace meetbrain;
using namespace meetbrain::screening;

namespace {

AudioClip tone(double seconds, double fs = 8000.0) {
  AudioClip c;
  c.sample_rate = fs;
  c.samples = synth::sine(440.0, fs, static_cast<std::size_t>(seconds * fs), 0.3);
  return c;
}

}  // namespace

TEST_CASE("select_clip boundary examples") {
  CHECK(select_clip({"c", 9, 9, 1}, Quadrant::HAHV));
  CHECK(select_clip({"c", 7, 7, 1}, Quadrant::HAHV));
  CHECK_FALSE(select_clip({"c", 6.9, 7, 10}, Quadrant::HAHV));
  CHECK_FALSE(select_clip({"c", 5, 5, 1}, Quadrant::LAHV));
  CHECK(select_clip({"c", 4.4, 1, 5}, Quadrant::LALV));
  CHECK_FALSE(select_clip({"c", 4.5, 1, 2}, Quadrant::LALV));
  CHECK(select_clip({"c", 3, 7, 1}, Quadrant::HALV));
  CHECK_FALSE(select_clip({"c", 4.9, 1, 10}, Quadrant::LAHV));
  CHECK(select_clip({"c", 5, 1, 1}, Quadrant::LAHV));
  CHECK_FALSE(select_clip({"c", 9, 5.1, 10}, Quadrant::LAHV));
}

TEST_CASE("select_clip matches integer brute force on non-grid means") {
  // Means of three integer ratings: v = kv/3.
  for (int kv = 3; kv <= 27; ++kv)
    for (int ka = 3; ka <= 27; ++ka) {
      const ClipScore s{"c", kv / 3.0, ka / 3.0, 3};
      auto d2 = [&](int cv, int ca) { return (kv - 3 * cv) * (kv - 3 * cv) + (ka - 3 * ca) * (ka - 3 * ca); };
      CHECK(select_clip(s, Quadrant::HAHV) == (d2(9, 9) <= 72));
      CHECK(select_clip(s, Quadrant::HALV) == (d2(1, 9) <= 72));
      CHECK(select_clip(s, Quadrant::LALV) == (25 * d2(1, 1) <= 289 * 9));
      CHECK(select_clip(s, Quadrant::LAHV) == (d2(9, 1) <= 225 && kv >= 15 && ka <= 15));
    }
}

TEST_CASE("aggregate_scores averages per clip") {
  const std::vector<EvaluatorRating> r{{"e1", "a", 9, 9}, {"e2", "a", 7, 8}, {"e1", "b", 2, 3}};
  const auto s = aggregate_scores(r);
  REQUIRE(s.size() == 2);
  CHECK(s[0].clip_id == "a");
  CHECK(s[0].v == 8.0);
  CHECK(s[0].a == 8.5);
  CHECK(s[0].n_raters == 2);
  CHECK(s[1].n_raters == 1);
  CHECK_THROWS_AS(aggregate_scores(r, {"a", "b", "missing"}), Error);
}

TEST_CASE("technical screen flags spikes and silence") {
  CHECK(technical_screen(tone(5)).pass);

  auto spiky = tone(5);
  for (auto& v : spiky.samples) v *= 0.01;
  spiky.samples[20000] = 1.0;
  const auto r1 = technical_screen(spiky);
  CHECK_FALSE(r1.pass);
  CHECK(r1.reason == "abrupt_noise");

  auto gap = tone(10);
  for (std::size_t i = 8000; i < 8000 * 5; ++i) gap.samples[i] = 0.0;
  const auto r2 = technical_screen(gap);
  CHECK_FALSE(r2.pass);
  CHECK(r2.reason == "extended_silence");

  auto short_gap = tone(10);
  for (std::size_t i = 8000; i < 8000 * 3; ++i) short_gap.samples[i] = 0.0;
  CHECK(technical_screen(short_gap).pass);
}

TEST_CASE("screen_library conserves counts and sorts output") {
  std::vector<ClipRecord> clips{{"z1", Quadrant::HAHV, "", tone(4)},
                                {"a1", Quadrant::LALV, "", tone(4)},
                                {"m1", Quadrant::LAHV, "", tone(4)},
                                {"bad", Quadrant::HALV, "", AudioClip{std::vector<double>(32000, 0.0), 8000.0}}};
  const std::vector<EvaluatorRating> ratings{
      {"e1", "z1", 8, 8}, {"e1", "a1", 2, 2}, {"e1", "m1", 5, 5}, {"e1", "bad", 1, 9}};
  const auto rep = screen_library(clips, ratings, {}, 2);
  CHECK(rep.retained_technical == std::vector<std::string>{"a1", "m1", "z1"});
  CHECK(rep.selected.at(Quadrant::HAHV) == std::vector<std::string>{"z1"});
  CHECK(rep.selected.at(Quadrant::LALV) == std::vector<std::string>{"a1"});
  std::size_t selected = 0, rejected_retained = 0;
  for (const auto& [q, ids] : rep.selected) selected += ids.size();
  for (const auto& [id, reason] : rep.rejected)
    if (reason != "extended_silence" && reason != "abrupt_noise") ++rejected_retained;
  CHECK(selected + rejected_retained == rep.retained_technical.size());
  const auto back = ScreeningReport::from_json(rep.to_json());
  CHECK(back.selected == rep.selected);
  CHECK(back.rejected == rep.rejected);
}

TEST_CASE("ratings CSV parsing") {
  const auto r = parse_ratings_csv("evaluator_id,clip_id,valence,arousal\ne1,c1,3,9\n");
  REQUIRE(r.size() == 1);
  CHECK(r[0].arousal == 9);
  CHECK_THROWS_AS(parse_ratings_csv("evaluator_id,clip_id,valence,arousal\ne1,c1,0,9\n"), Error);
  CHECK_THROWS_AS(parse_ratings_csv("evaluator,clip_id,valence,arousal\ne1,c1,3,9\n"), Error);
}
