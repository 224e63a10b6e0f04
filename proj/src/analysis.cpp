#include "meetbrain/analysis.hpp"

#include <algorithm>
#include <cmath>

#include "meetbrain/csv.hpp"
#include "meetbrain/dsp.hpp"
#include "meetbrain/error.hpp"
#include "meetbrain/log.hpp"

namespace meetbrain::analysis {

void RatingTriple::validate() const {
  for (auto [name, v] : {std::pair{"valence", valence}, {"arousal", arousal}, {"liking", liking}})
    if (v < 1 || v > 9)
      throw Error(ErrorKind::Validation, std::string(name) + " score " + std::to_string(v) + " is outside 1..9");
}

const char* to_string(LabelSource s) {
  switch (s) {
    case LabelSource::SelfReport: return "self_report";
    case LabelSource::MusicFallbackValence: return "music_fallback_valence";
    case LabelSource::MusicFallbackArousal: return "music_fallback_arousal";
    case LabelSource::MusicFallbackBoth: return "music_fallback_both";
  }
  return "?";
}

LabelSource label_source_from_string(const std::string& s) {
  for (auto v : {LabelSource::SelfReport, LabelSource::MusicFallbackValence, LabelSource::MusicFallbackArousal,
                 LabelSource::MusicFallbackBoth})
    if (s == to_string(v)) return v;
  throw Error(ErrorKind::Input, "unknown label source '" + s + "'");
}

TrialLabel derive_label(const RatingTriple& rating, Quadrant music) {
  TrialLabel l;
  const bool v_fallback = rating.valence == kRatingThreshold;
  const bool a_fallback = rating.arousal == kRatingThreshold;
  l.valence_high = v_fallback ? high_valence(music) : rating.valence > kRatingThreshold;
  l.arousal_high = a_fallback ? high_arousal(music) : rating.arousal > kRatingThreshold;
  l.quadrant = make_quadrant(l.arousal_high, l.valence_high);
  if (v_fallback && a_fallback)
    l.source = LabelSource::MusicFallbackBoth;
  else if (v_fallback)
    l.source = LabelSource::MusicFallbackValence;
  else if (a_fallback)
    l.source = LabelSource::MusicFallbackArousal;
  return l;
}

// ---- band power ------------------------------------------------------------

nlohmann::json BandEdges::to_json() const {
  nlohmann::ordered_json j;
  for (std::size_t b = 0; b < kBandCount; ++b) j["bands_hz"][kBandNames[b]] = {bands[b][0], bands[b][1]};
  j["full_band_hz"] = {full[0], full[1]};
  j["sub_epoch_s"] = sub_epoch_s;
  j["welch_segment_s"] = segment_s;
  j["welch_overlap"] = overlap;
  return j;
}

BandEdges BandEdges::from_json(const nlohmann::json& j) {
  BandEdges e;
  for (std::size_t b = 0; b < kBandCount; ++b) {
    const auto& v = j.at("bands_hz").at(kBandNames[b]);
    e.bands[b] = {v.at(0).get<double>(), v.at(1).get<double>()};
  }
  e.full = {j.at("full_band_hz").at(0).get<double>(), j.at("full_band_hz").at(1).get<double>()};
  e.sub_epoch_s = j.at("sub_epoch_s").get<double>();
  e.segment_s = j.at("welch_segment_s").get<double>();
  e.overlap = j.at("welch_overlap").get<double>();
  for (const auto& b : e.bands)
    if (!(b[0] < b[1])) throw Error(ErrorKind::Config, "band edges must satisfy lo < hi");
  if (!(e.overlap >= 0.0 && e.overlap < 1.0)) throw Error(ErrorKind::Config, "Welch overlap must be in [0, 1)");
  if (!(e.segment_s > 0.0 && e.segment_s <= e.sub_epoch_s))
    throw Error(ErrorKind::Config, "Welch segment must be positive and fit in a sub-epoch");
  return e;
}

namespace {

double integrate(const dsp::Psd& psd, double lo, double hi, bool include_hi) {
  const double df = psd.freqs.size() > 1 ? psd.freqs[1] - psd.freqs[0] : 0.0;
  const double tol = 1e-9 * std::max(1.0, hi);
  double s = 0.0;
  for (std::size_t k = 0; k < psd.freqs.size(); ++k) {
    const double f = psd.freqs[k];
    if (f >= lo - tol && (f < hi - tol || (include_hi && f <= hi + tol))) s += psd.density[k] * df;
  }
  return s;
}

}  // namespace

ChannelBandPowers relative_band_power_per_channel(const sigproc::EegEpoch& epoch, double fs, const BandEdges& edges) {
  const auto sub = static_cast<std::size_t>(std::llround(edges.sub_epoch_s * fs));
  const auto seg = static_cast<std::size_t>(std::llround(edges.segment_s * fs));
  const auto ovl = static_cast<std::size_t>(std::llround(edges.overlap * static_cast<double>(seg)));
  const std::size_t n = epoch.data[0].size();
  if (epoch.data[1].size() != n) throw Error(ErrorKind::Input, "EEG epoch channels differ in length");
  if (n < sub) throw Error(ErrorKind::Input, "EEG epoch '" + epoch.trial_id + "' is shorter than one sub-epoch");
  const std::size_t count = n / sub;

  ChannelBandPowers out{};
  for (std::size_t c = 0; c < sigproc::kEegChannels; ++c) {
    for (std::size_t e = 0; e < count; ++e) {
      const auto psd = dsp::welch(std::span<const double>(epoch.data[c]).subspan(e * sub, sub), fs, seg, ovl);
      const double total = integrate(psd, edges.full[0], edges.full[1], true);
      for (std::size_t b = 0; b < kBandCount; ++b) {
        const double p = integrate(psd, edges.bands[b][0], edges.bands[b][1], b + 1 == kBandCount);
        out[c][b] += total > 0.0 ? p / total : 0.0;
      }
    }
    for (auto& v : out[c]) v /= static_cast<double>(count);
  }
  return out;
}

BandPowers relative_band_power(const sigproc::EegEpoch& epoch, double fs, const BandEdges& edges) {
  const auto per = relative_band_power_per_channel(epoch, fs, edges);
  BandPowers out{};
  for (std::size_t b = 0; b < kBandCount; ++b) {
    for (const auto& ch : per) out[b] += ch[b];
    out[b] /= static_cast<double>(per.size());
  }
  return out;
}

// ---- fNIRS -----------------------------------------------------------------

std::string fnirs_feature_name(std::size_t index) {
  static constexpr std::array<const char*, 3> hb{"hbo", "hbr", "hbt"};
  static constexpr std::array<const char*, 2> st{"mean", "var"};
  return "ch" + std::to_string(index / 6 + 1) + "_" + hb[(index % 6) / 2] + "_" + st[index % 2];
}

FnirsFeatures fnirs_features(const sigproc::HemodynamicSeries& series, double start_ms, double end_ms,
                             double window_s) {
  const auto& ts = series.timestamps_ms;
  const auto want = static_cast<std::ptrdiff_t>(std::llround(window_s * series.sample_rate));
  auto end = std::min(sigproc::sample_index(ts, series.sample_rate, end_ms), static_cast<std::ptrdiff_t>(ts.size()));
  const auto begin = end - want;
  const auto first = sigproc::sample_index(ts, series.sample_rate, start_ms);
  if (begin < 0 || begin < first || want <= 0)
    throw Error(ErrorKind::Data, "fewer than " + csv::format_number(window_s) + " s of processed fNIRS data");
  FnirsFeatures f{};
  for (std::size_t c = 0; c < sigproc::kFnirsChannels; ++c) {
    const std::array<const std::vector<double>*, 3> src{&series.hbo[c], &series.hbr[c], &series.hbt[c]};
    for (std::size_t h = 0; h < 3; ++h) {
      const auto w = std::span<const double>(*src[h]).subspan(static_cast<std::size_t>(begin),
                                                              static_cast<std::size_t>(want));
      f[fnirs_feature_index(c, HbKind(h), Statistic::Mean)] = dsp::mean(w);
      f[fnirs_feature_index(c, HbKind(h), Statistic::Variance)] = dsp::population_variance(w);
    }
  }
  return f;
}

// ---- ratings ---------------------------------------------------------------

namespace {

constexpr std::array<const char*, 3> kRatingNames{"valence", "arousal", "liking"};

int rating_value(const RatingTriple& r, std::size_t k) { return k == 0 ? r.valence : k == 1 ? r.arousal : r.liking; }

nlohmann::json pearson_json(const CorrelationCell& c) {
  if (!c.result) return {{"r", nullptr}, {"p", nullptr}, {"error", c.error}};
  return {{"r", c.result->r}, {"p", c.result->p}, {"n", c.result->n}};
}

CorrelationCell correlate(std::span<const double> x, std::span<const double> y) {
  CorrelationCell cell;
  try {
    cell.result = stats::pearson(x, y);
  } catch (const Error& e) {
    cell.error = e.what();
  }
  return cell;
}

}  // namespace

RatingReport rating_report(const std::vector<RatedTrial>& trials) {
  if (trials.empty()) throw Error(ErrorKind::Input, "rating report needs at least one trial");
  RatingReport rep;
  std::array<std::vector<double>, 3> all;
  for (auto q : kAllQuadrants) {
    std::array<std::vector<double>, 3> vals;
    RatingReport::QuadrantSummary s;
    for (const auto& t : trials) {
      if (t.music != q) continue;
      for (std::size_t k = 0; k < 3; ++k) vals[k].push_back(rating_value(t.rating, k));
      ++s.label_histogram[index_of(derive_label(t.rating, t.music).quadrant)];
    }
    if (vals[0].empty()) {
      rep.missing_quadrants.push_back(q);
      log::warn("no rated trials for music quadrant", {{"quadrant", to_string(q)}});
      continue;
    }
    s.n = vals[0].size();
    s.valence = stats::quartiles(vals[0]);
    s.arousal = stats::quartiles(vals[1]);
    s.liking = stats::quartiles(vals[2]);
    rep.quadrants[q] = s;
  }
  for (const auto& t : trials)
    for (std::size_t k = 0; k < 3; ++k) all[k].push_back(rating_value(t.rating, k));
  for (std::size_t i = 0; i < 3; ++i)
    for (std::size_t j = 0; j < 3; ++j) rep.correlations[i][j] = correlate(all[i], all[j]);
  return rep;
}

nlohmann::json RatingReport::to_json() const {
  nlohmann::ordered_json j;
  j["quadrants"] = nlohmann::ordered_json::object();
  for (const auto& [q, s] : quadrants) {
    nlohmann::ordered_json e;
    e["n"] = s.n;
    e["valence_quartiles"] = s.valence;
    e["arousal_quartiles"] = s.arousal;
    e["liking_quartiles"] = s.liking;
    for (auto l : kAllQuadrants) e["label_histogram"][std::string(to_string(l))] = s.label_histogram[index_of(l)];
    j["quadrants"][std::string(to_string(q))] = e;
  }
  j["missing_quadrants"] = nlohmann::json::array();
  for (auto q : missing_quadrants) j["missing_quadrants"].push_back(to_string(q));
  for (std::size_t a = 0; a < 3; ++a)
    for (std::size_t b = 0; b < 3; ++b)
      j["correlations"][kRatingNames[a]][kRatingNames[b]] = pearson_json(correlations[a][b]);
  return j;
}

// ---- feature table ---------------------------------------------------------

std::vector<std::string> feature_header() {
  std::vector<std::string> h{"trial_id", "subject", "quadrant"};
  for (auto b : kBandNames) h.emplace_back(b);
  for (std::size_t i = 1; i <= kFnirsFeatureCount; ++i) h.push_back("fnirs_" + std::to_string(i));
  for (auto k : kRatingNames) h.emplace_back(k);
  h.emplace_back("label");
  for (const char* ch : {"fp1", "fp2"})
    for (auto b : kBandNames) h.push_back(std::string("eeg_") + ch + "_" + b);
  for (std::size_t i = 1; i <= 18; ++i) h.push_back("ppg_" + std::to_string(i));
  return h;
}

std::string format_feature_csv(const std::vector<FeatureRow>& rows) {
  std::string out;
  const auto header = feature_header();
  for (std::size_t i = 0; i < header.size(); ++i) {
    if (i) out += ',';
    out += header[i];
  }
  out += '\n';
  auto num = [&](double v) {
    out += ',';
    csv::append_number(out, v);
  };
  for (const auto& r : rows) {
    out += csv::quote(r.trial_id);
    out += ',';
    out += csv::quote(r.subject);
    out += ',';
    out += to_string(r.music);
    for (double v : r.bands) num(v);
    for (double v : r.fnirs) num(v);
    for (std::size_t k = 0; k < 3; ++k) out += ',' + std::to_string(rating_value(r.rating, k));
    out += ',';
    out += to_string(r.label.quadrant);
    for (const auto& ch : r.eeg_channels)
      for (double v : ch) num(v);
    for (double v : r.ppg) num(v);
    out += '\n';
  }
  return out;
}

std::vector<FeatureRow> parse_feature_csv(std::string_view text) {
  const auto t = csv::parse(text);
  const auto header = feature_header();
  if (t.header != header) throw Error(ErrorKind::Schema, "feature CSV header does not match the expected columns");
  std::vector<FeatureRow> rows;
  rows.reserve(t.rows.size());
  for (std::size_t i = 0; i < t.rows.size(); ++i) {
    const auto& f = t.rows[i];
    const std::size_t line = i + 2;
    FeatureRow r;
    std::size_t k = 0;
    r.trial_id = f[k++];
    r.subject = f[k++];
    r.music = quadrant_from_string(f[k++]);
    for (auto& v : r.bands) v = csv::to_double(f[k++], line);
    for (auto& v : r.fnirs) v = csv::to_double(f[k++], line);
    r.rating.valence = csv::to_int(f[k++], line);
    r.rating.arousal = csv::to_int(f[k++], line);
    r.rating.liking = csv::to_int(f[k++], line);
    r.rating.validate();
    const auto label = quadrant_from_string(f[k++]);
    r.label = derive_label(r.rating, r.music);
    if (r.label.quadrant != label)
      throw Error(ErrorKind::Data, "row " + std::to_string(line) + ": label " + f[k - 1] +
                                       " disagrees with the ratings and music quadrant");
    for (auto& ch : r.eeg_channels)
      for (auto& v : ch) v = csv::to_double(f[k++], line);
    for (auto& v : r.ppg) v = csv::to_double(f[k++], line);
    rows.push_back(std::move(r));
  }
  return rows;
}

std::vector<FeatureRow> load_feature_csv(const std::filesystem::path& path) {
  return parse_feature_csv(csv::read_file(path));
}

// ---- stats report ----------------------------------------------------------

nlohmann::json stats_report(const std::vector<FeatureRow>& rows, double alpha) {
  nlohmann::ordered_json j;
  if (rows.empty()) throw Error(ErrorKind::Input, "no feature rows");

  std::vector<RatedTrial> rated;
  for (const auto& r : rows) rated.push_back({r.trial_id, r.music, r.rating});
  const auto rr = rating_report(rated);
  j["ratings"] = rr.to_json();

  // Band power by derived label.
  std::vector<Quadrant> present;
  for (auto q : kAllQuadrants)
    if (std::any_of(rows.begin(), rows.end(), [&](const FeatureRow& r) { return r.label.quadrant == q; }))
      present.push_back(q);
  j["band_power"]["groups"] = nlohmann::json::array();
  for (auto q : present) j["band_power"]["groups"].push_back(to_string(q));
  for (std::size_t b = 0; b < kBandCount; ++b) {
    std::vector<std::vector<double>> groups;
    for (auto q : present) {
      groups.emplace_back();
      for (const auto& r : rows)
        if (r.label.quadrant == q) groups.back().push_back(r.bands[b]);
    }
    nlohmann::ordered_json e;
    for (std::size_t g = 0; g < present.size(); ++g)
      e["mean"][std::string(to_string(present[g]))] = stats::sample_mean(groups[g]);
    try {
      const auto a = stats::one_way_anova(groups);
      e["anova"] = {{"f", std::isfinite(a.f) ? nlohmann::json(a.f) : nlohmann::json("inf")},
                    {"p", a.p},
                    {"df_between", a.df_between},
                    {"df_within", a.df_within}};
      e["tukey"] = nlohmann::json::array();
      for (const auto& p : stats::tukey_hsd(groups, alpha))
        e["tukey"].push_back({{"a", to_string(present[p.i])},
                              {"b", to_string(present[p.j])},
                              {"diff", p.diff},
                              {"q", std::isfinite(p.q) ? nlohmann::json(p.q) : nlohmann::json("inf")},
                              {"p", p.p},
                              {"significant", p.significant}});
    } catch (const Error& err) {
      e["anova"] = {{"error", err.what()}};
    }
    j["band_power"]["bands"][kBandNames[b]] = e;
  }

  // fNIRS features against each rating dimension.
  std::array<std::vector<double>, 3> ratings;
  for (const auto& r : rows)
    for (std::size_t k = 0; k < 3; ++k) ratings[k].push_back(rating_value(r.rating, k));
  for (std::size_t i = 0; i < kFnirsFeatureCount; ++i) {
    std::vector<double> x;
    for (const auto& r : rows) x.push_back(r.fnirs[i]);
    nlohmann::ordered_json e;
    for (std::size_t k = 0; k < 3; ++k) e[kRatingNames[k]] = pearson_json(correlate(x, ratings[k]));
    j["fnirs_correlations"][fnirs_feature_name(i)] = e;
  }
  return j;
}

}  // namespace meetbrain::analysis
