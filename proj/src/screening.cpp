#include "meetbrain/screening.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "meetbrain/csv.hpp"
#include "meetbrain/error.hpp"
#include "meetbrain/parallel.hpp"

namespace meetbrain::screening {

TechnicalResult technical_screen(const AudioClip& audio, const TechnicalThresholds& t) {
  if (audio.samples.empty() || audio.sample_rate <= 0)
    throw Error(ErrorKind::Input, "technical screen needs non-empty audio");

  const auto frame = std::max<std::size_t>(1, static_cast<std::size_t>(std::lround(t.frame_s * audio.sample_rate)));
  const std::size_t n_frames = (audio.samples.size() + frame - 1) / frame;
  std::vector<double> peaks(n_frames), rms(n_frames);
  for (std::size_t f = 0; f < n_frames; ++f) {
    const std::size_t lo = f * frame, hi = std::min(audio.samples.size(), lo + frame);
    double pk = 0.0, ss = 0.0;
    for (std::size_t i = lo; i < hi; ++i) {
      pk = std::max(pk, std::abs(audio.samples[i]));
      ss += audio.samples[i] * audio.samples[i];
    }
    peaks[f] = pk;
    rms[f] = std::sqrt(ss / static_cast<double>(hi - lo));
  }

  // 95th percentile by nearest rank.
  std::vector<double> sorted = peaks;
  std::sort(sorted.begin(), sorted.end());
  const auto rank = static_cast<std::size_t>(std::ceil(0.95 * static_cast<double>(n_frames)));
  const double p95 = sorted[std::clamp<std::size_t>(rank, 1, n_frames) - 1];
  if (p95 > 0.0) {
    for (double pk : peaks)
      if (pk > t.spike_threshold * p95) return {false, "abrupt_noise"};
  }

  const double floor_lin = std::pow(10.0, t.silence_rms_db / 20.0);
  const double frame_dur = static_cast<double>(frame) / audio.sample_rate;
  double run = 0.0;
  for (double r : rms) {
    run = r < floor_lin ? run + frame_dur : 0.0;
    if (run > t.silence_max_s + 1e-9) return {false, "extended_silence"};
  }
  return {true, ""};
}

std::vector<ClipScore> aggregate_scores(const std::vector<EvaluatorRating>& ratings) {
  struct Acc {
    double v = 0, a = 0;
    int n = 0;
  };
  std::map<std::string, Acc> acc;
  for (const auto& r : ratings) {
    if (r.valence < 1 || r.valence > 9 || r.arousal < 1 || r.arousal > 9)
      throw Error(ErrorKind::Validation, "rating for clip " + r.clip_id + " by " + r.evaluator_id +
                                             " is outside 1..9");
    auto& x = acc[r.clip_id];
    x.v += r.valence;
    x.a += r.arousal;
    ++x.n;
  }
  std::vector<ClipScore> out;
  out.reserve(acc.size());
  for (auto& [id, x] : acc) out.push_back({id, x.v / x.n, x.a / x.n, x.n});
  return out;
}

std::vector<ClipScore> aggregate_scores(const std::vector<EvaluatorRating>& ratings,
                                        const std::vector<std::string>& expected) {
  auto scores = aggregate_scores(ratings);
  std::vector<std::string> missing;
  for (const auto& id : expected) {
    const bool found = std::any_of(scores.begin(), scores.end(), [&](auto& s) { return s.clip_id == id; });
    if (!found) missing.push_back(id);
  }
  if (!missing.empty()) {
    std::string msg = "clips without ratings:";
    for (auto& id : missing) msg += " " + id;
    throw Error(ErrorKind::Data, msg);
  }
  return scores;
}

namespace {

// Mean ratings are k/n for integer k; recover k so the disc tests run in exact
// integer arithmetic (4.4 - 1 is not 3.4 in binary floating point).
std::optional<std::pair<long long, long long>> exact_sums(const ClipScore& s) {
  if (s.n_raters < 1) return std::nullopt;
  const double n = s.n_raters;
  const double kv = std::round(s.v * n), ka = std::round(s.a * n);
  if (std::abs(s.v * n - kv) > 1e-6 || std::abs(s.a * n - ka) > 1e-6) return std::nullopt;
  return std::pair{static_cast<long long>(kv), static_cast<long long>(ka)};
}

}  // namespace

bool select_clip(const ClipScore& s, Quadrant intended) {
  if (auto sums = exact_sums(s)) {
    const long long n = s.n_raters, kv = sums->first, ka = sums->second;
    auto d2 = [&](long long cv, long long ca) {
      return (kv - cv * n) * (kv - cv * n) + (ka - ca * n) * (ka - ca * n);
    };
    switch (intended) {
      case Quadrant::HAHV: return d2(9, 9) <= 8 * n * n;
      case Quadrant::HALV: return d2(1, 9) <= 8 * n * n;
      case Quadrant::LALV: return 25 * d2(1, 1) <= 289 * n * n;  // radius 17/5
      case Quadrant::LAHV: return d2(9, 1) <= 25 * n * n && kv >= 5 * n && ka <= 5 * n;
    }
    return false;
  }
  auto d2 = [&](double cv, double ca) { return (s.v - cv) * (s.v - cv) + (s.a - ca) * (s.a - ca); };
  switch (intended) {
    case Quadrant::HAHV: return d2(9, 9) <= kHighArousalRadiusSq;
    case Quadrant::HALV: return d2(1, 9) <= kHighArousalRadiusSq;
    case Quadrant::LALV: return std::sqrt(d2(1, 1)) <= kLalvRadius;
    case Quadrant::LAHV: return std::sqrt(d2(9, 1)) <= kLahvRadius && s.v >= 5.0 && s.a <= 5.0;
  }
  return false;
}

nlohmann::json ScreeningReport::to_json() const {
  nlohmann::json sel = nlohmann::json::object();
  for (auto q : kAllQuadrants) {
    auto it = selected.find(q);
    sel[std::string(to_string(q))] = it == selected.end() ? std::vector<std::string>{} : it->second;
  }
  nlohmann::json rej = nlohmann::json::array();
  for (auto& [id, reason] : rejected) rej.push_back({{"clip_id", id}, {"reason", reason}});
  nlohmann::json sc = nlohmann::json::object();
  for (auto& [id, s] : scores) sc[id] = {{"v", s.v}, {"a", s.a}, {"n_raters", s.n_raters}};
  return {{"retained_technical", retained_technical}, {"selected", sel}, {"rejected", rej}, {"scores", sc}};
}

ScreeningReport ScreeningReport::from_json(const nlohmann::json& j) {
  ScreeningReport r;
  r.retained_technical = j.value("retained_technical", std::vector<std::string>{});
  for (auto& [k, v] : j.at("selected").items()) r.selected[quadrant_from_string(k)] = v.get<std::vector<std::string>>();
  if (j.contains("rejected"))
    for (auto& e : j["rejected"]) r.rejected.emplace_back(e.at("clip_id"), e.at("reason"));
  if (j.contains("scores"))
    for (auto& [id, s] : j["scores"].items()) r.scores[id] = {id, s.at("v"), s.at("a"), s.at("n_raters")};
  return r;
}

ScreeningReport screen_library(const std::vector<ClipRecord>& clips,
                               const std::vector<EvaluatorRating>& ratings,
                               const TechnicalThresholds& thresholds, unsigned jobs) {
  std::vector<TechnicalResult> tech(clips.size());
  parallel_for(clips.size(), jobs, [&](std::size_t i) {
    if (clips[i].audio) tech[i] = technical_screen(*clips[i].audio, thresholds);
  });

  ScreeningReport report;
  for (auto q : kAllQuadrants) report.selected[q] = {};
  std::vector<std::string> retained;
  for (std::size_t i = 0; i < clips.size(); ++i) {
    if (tech[i].pass)
      retained.push_back(clips[i].clip_id);
    else
      report.rejected.emplace_back(clips[i].clip_id, tech[i].reason);
  }

  // Ratings for technically rejected clips are ignored.
  std::vector<EvaluatorRating> relevant;
  for (const auto& r : ratings)
    if (std::find(retained.begin(), retained.end(), r.clip_id) != retained.end()) relevant.push_back(r);
  const auto scores = aggregate_scores(relevant, retained);
  for (const auto& s : scores) report.scores[s.clip_id] = s;

  for (const auto& c : clips) {
    if (std::find(retained.begin(), retained.end(), c.clip_id) == retained.end()) continue;
    if (select_clip(report.scores.at(c.clip_id), c.quadrant))
      report.selected[c.quadrant].push_back(c.clip_id);
    else
      report.rejected.emplace_back(c.clip_id, "outside_selection_region");
  }

  std::sort(retained.begin(), retained.end());
  report.retained_technical = std::move(retained);
  for (auto& [q, ids] : report.selected) std::sort(ids.begin(), ids.end());
  std::sort(report.rejected.begin(), report.rejected.end());
  return report;
}

std::vector<EvaluatorRating> parse_ratings_csv(const std::string& text) {
  const auto table = csv::parse(text);
  const auto ie = table.column("evaluator_id"), ic = table.column("clip_id");
  const auto iv = table.column("valence"), ia = table.column("arousal");
  std::vector<EvaluatorRating> out;
  out.reserve(table.rows.size());
  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    const auto& row = table.rows[r];
    out.push_back({row[ie], row[ic], csv::to_int(row[iv], r), csv::to_int(row[ia], r)});
    const auto& e = out.back();
    if (e.valence < 1 || e.valence > 9 || e.arousal < 1 || e.arousal > 9)
      throw Error(ErrorKind::Validation, "rating out of range 1-9 at row " + std::to_string(r + 1) + " (clip " +
                                             e.clip_id + ")");
  }
  return out;
}

std::vector<EvaluatorRating> load_ratings_csv(const std::string& path) {
  return parse_ratings_csv(csv::read_file(path));
}

}  // namespace meetbrain::screening
