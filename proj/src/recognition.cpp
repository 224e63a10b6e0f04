#include "meetbrain/recognition.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <random>
#include <set>

#include "meetbrain/csv.hpp"
#include "meetbrain/dsp.hpp"
#include "meetbrain/error.hpp"
#include "meetbrain/log.hpp"
#include "meetbrain/parallel.hpp"

namespace meetbrain::recognition {

const char* to_string(Combo c) {
  switch (c) {
    case Combo::Eeg: return "EEG";
    case Combo::Ppg: return "PPG";
    case Combo::Hb: return "Hb";
    case Combo::EegPpg: return "EEG+PPG";
    case Combo::EegHb: return "EEG+Hb";
    case Combo::EegPpgHb: return "EEG+PPG+Hb";
  }
  return "?";
}

Combo combo_from_string(const std::string& s) {
  for (auto c : kAllCombos)
    if (s == to_string(c)) return c;
  throw Error(ErrorKind::Config, "unknown modality combination '" + s + "'");
}

const char* to_string(Target t) { return t == Target::Valence ? "valence" : "arousal"; }

Target target_from_string(const std::string& s) {
  if (s == "valence") return Target::Valence;
  if (s == "arousal") return Target::Arousal;
  throw Error(ErrorKind::Config, "unknown target '" + s + "'");
}

const char* to_string(Protocol p) { return p == Protocol::Loso ? "loso" : "intra_subject"; }

Protocol protocol_from_string(const std::string& s) {
  if (s == "loso") return Protocol::Loso;
  if (s == "intra_subject") return Protocol::IntraSubject;
  throw Error(ErrorKind::Config, "unknown protocol '" + s + "'");
}

std::vector<double> TrialFeatures::vector(Combo combo) const {
  const bool use_eeg = combo == Combo::Eeg || combo == Combo::EegPpg || combo == Combo::EegHb || combo == Combo::EegPpgHb;
  const bool use_ppg = combo == Combo::Ppg || combo == Combo::EegPpg || combo == Combo::EegPpgHb;
  const bool use_hb = combo == Combo::Hb || combo == Combo::EegHb || combo == Combo::EegPpgHb;
  std::vector<double> v;
  if (use_eeg) v.insert(v.end(), eeg.begin(), eeg.end());
  if (use_ppg) v.insert(v.end(), ppg.begin(), ppg.end());
  if (use_hb) v.insert(v.end(), hb.begin(), hb.end());
  return v;
}

TrialFeatures from_feature_row(const analysis::FeatureRow& row) {
  TrialFeatures t;
  t.trial_id = row.trial_id;
  t.subject = row.subject;
  for (std::size_t c = 0; c < sigproc::kEegChannels; ++c)
    for (std::size_t b = 0; b < analysis::kBandCount; ++b) t.eeg[c * analysis::kBandCount + b] = row.eeg_channels[c][b];
  t.ppg = row.ppg;
  t.hb = row.fnirs;
  t.valence_high = row.label.valence_high;
  t.arousal_high = row.label.arousal_high;
  return t;
}

std::vector<TrialFeatures> from_feature_rows(const std::vector<analysis::FeatureRow>& rows) {
  std::vector<TrialFeatures> out;
  out.reserve(rows.size());
  for (const auto& r : rows) out.push_back(from_feature_row(r));
  return out;
}

// ---- PPG -------------------------------------------------------------------

std::vector<std::size_t> detect_peaks(std::span<const double> x, double fs, double refractory_s) {
  std::vector<std::size_t> peaks;
  const double min_gap = refractory_s * fs;
  for (std::size_t i = 1; i + 1 < x.size(); ++i) {
    if (!(x[i] > 0.0 && x[i] > x[i - 1] && x[i] >= x[i + 1])) continue;
    if (!peaks.empty() && static_cast<double>(i - peaks.back()) < min_gap) {
      if (x[i] > x[peaks.back()]) peaks.back() = i;
      continue;
    }
    peaks.push_back(i);
  }
  return peaks;
}

PpgFeatures ppg_features(const sigproc::PpgSeries& ppg, double start_ms, double end_ms, double window_s,
                         double refractory_s) {
  const auto& ts = ppg.timestamps_ms;
  const auto want = static_cast<std::ptrdiff_t>(std::llround(window_s * ppg.sample_rate));
  const auto end = std::min(sigproc::sample_index(ts, ppg.sample_rate, end_ms), static_cast<std::ptrdiff_t>(ts.size()));
  const auto begin = end - want;
  if (want <= 0 || begin < 0 || begin < sigproc::sample_index(ts, ppg.sample_rate, start_ms))
    throw Error(ErrorKind::Data, "fewer than " + csv::format_number(window_s) + " s of PPG data");
  const auto lo = static_cast<std::size_t>(begin), len = static_cast<std::size_t>(want);

  PpgFeatures f;
  std::vector<double> avg(len, 0.0);
  for (std::size_t c = 0; c < sigproc::kFnirsChannels; ++c) {
    const auto w = std::span<const double>(ppg.channels[c]).subspan(lo, len);
    f.values[2 * c] = dsp::mean(w);
    f.values[2 * c + 1] = dsp::population_variance(w);
    for (std::size_t i = 0; i < len; ++i) avg[i] += w[i] / static_cast<double>(sigproc::kFnirsChannels);
  }
  const auto peaks = detect_peaks(avg, ppg.sample_rate, refractory_s);
  if (peaks.size() < 2) {
    f.hr_undefined = true;
    return f;
  }
  std::vector<double> hr;
  for (std::size_t i = 1; i < peaks.size(); ++i)
    hr.push_back(60.0 * ppg.sample_rate / static_cast<double>(peaks[i] - peaks[i - 1]));
  f.values[16] = dsp::mean(hr);
  f.values[17] = std::sqrt(dsp::population_variance(hr));
  return f;
}

// ---- model -----------------------------------------------------------------

nlohmann::json Hyperparameters::to_json() const {
  return {{"lambda", lambda}, {"learning_rate", learning_rate}, {"iterations", iterations}, {"folds", folds},
          {"seed", seed}};
}

Hyperparameters Hyperparameters::from_json(const nlohmann::json& j) {
  Hyperparameters h;
  h.lambda = j.at("lambda").get<double>();
  h.learning_rate = j.at("learning_rate").get<double>();
  h.iterations = j.at("iterations").get<int>();
  h.folds = j.at("folds").get<int>();
  h.seed = j.at("seed").get<std::uint64_t>();
  if (h.lambda < 0 || !(h.learning_rate > 0) || h.iterations < 1 || h.folds < 2)
    throw Error(ErrorKind::Config, "invalid classifier hyperparameters");
  return h;
}

Standardizer Standardizer::fit(const std::vector<std::vector<double>>& x) {
  Standardizer s;
  if (x.empty()) return s;
  const std::size_t d = x.front().size();
  s.mean.assign(d, 0.0);
  s.sd.assign(d, 0.0);
  const double n = static_cast<double>(x.size());
  for (const auto& row : x)
    for (std::size_t j = 0; j < d; ++j) s.mean[j] += row[j];
  for (auto& m : s.mean) m /= n;
  for (const auto& row : x)
    for (std::size_t j = 0; j < d; ++j) s.sd[j] += (row[j] - s.mean[j]) * (row[j] - s.mean[j]);
  for (auto& v : s.sd) v = std::sqrt(v / n);
  return s;
}

std::vector<double> Standardizer::apply(const std::vector<double>& x) const {
  if (x.size() != mean.size()) throw Error(ErrorKind::Input, "feature dimension does not match the model");
  std::vector<double> z(x.size());
  for (std::size_t j = 0; j < x.size(); ++j) z[j] = sd[j] > 0.0 ? (x[j] - mean[j]) / sd[j] : 0.0;
  return z;
}

namespace {

double sigmoid(double t) {
  if (t >= 0) return 1.0 / (1.0 + std::exp(-t));
  const double e = std::exp(t);
  return e / (1.0 + e);
}

double pop_sd(const std::vector<double>& v) { return v.empty() ? 0.0 : std::sqrt(dsp::population_variance(v)); }

}  // namespace

double Model::probability(const std::vector<double>& x) const {
  const auto z = scaler.apply(x);
  double t = bias;
  for (std::size_t j = 0; j < z.size(); ++j) t += weights[j] * z[j];
  return sigmoid(t);
}

Model fit_logistic(const std::vector<std::vector<double>>& x, const std::vector<bool>& y, const Hyperparameters& h) {
  if (x.size() != y.size()) throw Error(ErrorKind::Input, "feature and label counts differ");
  if (x.size() < 2) throw Error(ErrorKind::DegenerateModel, "training needs at least two examples");
  const auto positives = std::count(y.begin(), y.end(), true);
  if (positives == 0 || positives == static_cast<std::ptrdiff_t>(y.size()))
    throw Error(ErrorKind::DegenerateModel, "training set contains a single class");

  Model m;
  m.scaler = Standardizer::fit(x);
  std::vector<std::vector<double>> z;
  z.reserve(x.size());
  for (const auto& row : x) z.push_back(m.scaler.apply(row));
  const std::size_t d = m.scaler.mean.size();
  const double n = static_cast<double>(z.size());
  m.weights.assign(d, 0.0);
  std::vector<double> grad(d);
  for (int it = 0; it < h.iterations; ++it) {
    std::fill(grad.begin(), grad.end(), 0.0);
    double gb = 0.0;
    for (std::size_t i = 0; i < z.size(); ++i) {
      double t = m.bias;
      for (std::size_t j = 0; j < d; ++j) t += m.weights[j] * z[i][j];
      const double err = sigmoid(t) - (y[i] ? 1.0 : 0.0);
      for (std::size_t j = 0; j < d; ++j) grad[j] += err * z[i][j];
      gb += err;
    }
    for (std::size_t j = 0; j < d; ++j) m.weights[j] -= h.learning_rate * (grad[j] / n + h.lambda * m.weights[j]);
    m.bias -= h.learning_rate * gb / n;
  }
  return m;
}

Model train_classifier(const std::vector<TrialFeatures>& train, Combo combo, Target target, const Hyperparameters& h) {
  std::vector<std::vector<double>> x;
  std::vector<bool> y;
  for (const auto& t : train) {
    x.push_back(t.vector(combo));
    y.push_back(t.target(target));
  }
  return fit_logistic(x, y, h);
}

double accuracy(const std::vector<bool>& predictions, const std::vector<bool>& labels) {
  if (predictions.size() != labels.size()) throw Error(ErrorKind::Input, "prediction and label counts differ");
  if (labels.empty()) throw Error(ErrorKind::Input, "accuracy of an empty set");
  std::size_t ok = 0;
  for (std::size_t i = 0; i < labels.size(); ++i) ok += predictions[i] == labels[i];
  return static_cast<double>(ok) / static_cast<double>(labels.size());
}

double macro_f1(const std::vector<bool>& predictions, const std::vector<bool>& labels) {
  if (predictions.size() != labels.size()) throw Error(ErrorKind::Input, "prediction and label counts differ");
  if (labels.empty()) throw Error(ErrorKind::Input, "macro F1 of an empty set");
  double sum = 0.0;
  for (bool cls : {false, true}) {
    std::size_t tp = 0, fp = 0, fn = 0;
    for (std::size_t i = 0; i < labels.size(); ++i) {
      if (predictions[i] == cls && labels[i] == cls) ++tp;
      else if (predictions[i] == cls) ++fp;
      else if (labels[i] == cls) ++fn;
    }
    if (tp + fp + fn == 0) {
      log::debug("class absent from predictions and labels; F1 counted as 0", {{"class", cls ? "high" : "low"}});
      continue;
    }
    sum += 2.0 * static_cast<double>(tp) / static_cast<double>(2 * tp + fp + fn);
  }
  return sum / 2.0;
}

// ---- cross-validation --------------------------------------------------------

nlohmann::json CvResult::to_json() const {
  nlohmann::ordered_json j;
  j["acc_mean"] = acc_mean;
  j["acc_sd"] = acc_sd;
  j["mf1_mean"] = mf1_mean;
  j["mf1_sd"] = mf1_sd;
  j["units"] = nlohmann::json::array();
  for (const auto& u : units)
    j["units"].push_back(
        {{"name", u.name}, {"acc", u.acc}, {"mf1", u.mf1}, {"folds", u.folds}, {"test_trials", u.test_trials}});
  j["excluded"] = excluded;
  return j;
}

namespace {

void summarize(CvResult& r) {
  std::vector<double> acc, mf1;
  for (const auto& u : r.units) {
    acc.push_back(u.acc);
    mf1.push_back(u.mf1);
  }
  if (acc.empty()) throw Error(ErrorKind::Input, "cross-validation produced no evaluable units");
  r.acc_mean = dsp::mean(acc);
  r.mf1_mean = dsp::mean(mf1);
  r.acc_sd = pop_sd(acc);
  r.mf1_sd = pop_sd(mf1);
}

std::map<std::string, std::vector<std::size_t>> by_subject(const std::vector<TrialFeatures>& data) {
  std::map<std::string, std::vector<std::size_t>> m;
  for (std::size_t i = 0; i < data.size(); ++i) m[data[i].subject].push_back(i);
  return m;
}

std::pair<double, double> evaluate(const std::vector<TrialFeatures>& data, const std::vector<std::size_t>& train,
                                   const std::vector<std::size_t>& test, Combo combo, Target target,
                                   const Hyperparameters& h) {
  std::vector<TrialFeatures> tr;
  tr.reserve(train.size());
  for (auto i : train) tr.push_back(data[i]);
  const auto model = train_classifier(tr, combo, target, h);
  std::vector<bool> pred, truth;
  for (auto i : test) {
    pred.push_back(model.predict(data[i].vector(combo)));
    truth.push_back(data[i].target(target));
  }
  return {accuracy(pred, truth), macro_f1(pred, truth)};
}

std::uint64_t fnv1a(const std::string& s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

}  // namespace

CvResult loso_cv(const std::vector<TrialFeatures>& data, Combo combo, Target target, const Hyperparameters& h,
                 unsigned jobs) {
  const auto subjects = by_subject(data);
  if (subjects.size() < 2) throw Error(ErrorKind::Input, "leave-one-subject-out needs at least two subjects");
  std::vector<std::string> names;
  for (const auto& [s, _] : subjects) names.push_back(s);
  CvResult r;
  r.units.resize(names.size());
  parallel_for(names.size(), jobs, [&](std::size_t f) {
    std::vector<std::size_t> train, test = subjects.at(names[f]);
    for (const auto& [s, idx] : subjects)
      if (s != names[f]) train.insert(train.end(), idx.begin(), idx.end());
    const auto [acc, mf1] = evaluate(data, train, test, combo, target, h);
    r.units[f] = {names[f], acc, mf1, 1, test.size()};
  });
  summarize(r);
  return r;
}

std::vector<int> stratified_folds(const std::vector<bool>& labels, int k, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  auto below = [&](std::uint64_t n) {
    const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() - std::numeric_limits<std::uint64_t>::max() % n;
    std::uint64_t v;
    do v = rng(); while (v >= limit);
    return v % n;
  };
  std::vector<int> fold(labels.size(), 0);
  int next = 0;
  for (bool cls : {false, true}) {
    std::vector<std::size_t> idx;
    for (std::size_t i = 0; i < labels.size(); ++i)
      if (labels[i] == cls) idx.push_back(i);
    for (std::size_t i = idx.size(); i > 1; --i) std::swap(idx[i - 1], idx[below(i)]);
    for (auto i : idx) {
      fold[i] = next;
      next = (next + 1) % k;
    }
  }
  return fold;
}

CvResult kfold_cv(const std::vector<TrialFeatures>& data, Combo combo, Target target, const Hyperparameters& h,
                  unsigned jobs) {
  if (data.empty()) throw Error(ErrorKind::Input, "empty dataset");
  const auto subjects = by_subject(data);
  struct Plan {
    std::string subject;
    std::vector<std::size_t> idx;
    std::vector<int> fold;
    int k = 0;
  };
  std::vector<Plan> plans;
  CvResult r;
  for (const auto& [s, idx] : subjects) {
    std::vector<bool> y;
    for (auto i : idx) y.push_back(data[i].target(target));
    const auto pos = static_cast<std::size_t>(std::count(y.begin(), y.end(), true));
    if (pos < 2 || y.size() - pos < 2) {
      r.excluded.push_back(s + ": fewer than 2 trials per class");
      log::warn("subject excluded from intra-subject CV", {{"subject", s}, {"target", to_string(target)}});
      continue;
    }
    int k = h.folds;
    if (static_cast<int>(idx.size()) < k) {
      k = static_cast<int>(idx.size());
      log::warn("fewer trials than folds; reducing k", {{"subject", s}, {"k", k}});
    }
    plans.push_back({s, idx, stratified_folds(y, k, h.seed ^ fnv1a(s)), k});
  }
  if (plans.empty()) throw Error(ErrorKind::Input, "no subject has at least 2 trials per class");

  // Flatten (subject, fold) jobs.
  std::vector<std::pair<std::size_t, int>> tasks;
  for (std::size_t p = 0; p < plans.size(); ++p)
    for (int f = 0; f < plans[p].k; ++f) tasks.emplace_back(p, f);
  std::vector<std::pair<double, double>> scores(tasks.size());
  parallel_for(tasks.size(), jobs, [&](std::size_t t) {
    const auto& pl = plans[tasks[t].first];
    std::vector<std::size_t> train, test;
    for (std::size_t i = 0; i < pl.idx.size(); ++i) (pl.fold[i] == tasks[t].second ? test : train).push_back(pl.idx[i]);
    scores[t] = evaluate(data, train, test, combo, target, h);
  });
  std::size_t t = 0;
  for (const auto& pl : plans) {
    CvUnit u{pl.subject, 0.0, 0.0, static_cast<std::size_t>(pl.k), pl.idx.size()};
    for (int f = 0; f < pl.k; ++f, ++t) {
      u.acc += scores[t].first;
      u.mf1 += scores[t].second;
    }
    u.acc /= pl.k;
    u.mf1 /= pl.k;
    r.units.push_back(u);
  }
  summarize(r);
  return r;
}

// ---- ablation ----------------------------------------------------------------

nlohmann::json AblationOptions::to_json() const {
  nlohmann::ordered_json j;
  j["combos"] = nlohmann::json::array();
  for (auto c : combos) j["combos"].push_back(to_string(c));
  j["targets"] = nlohmann::json::array();
  for (auto t : targets) j["targets"].push_back(to_string(t));
  j["protocols"] = nlohmann::json::array();
  for (auto p : protocols) j["protocols"].push_back(to_string(p));
  j["hyperparameters"] = hyper.to_json();
  return j;
}

AblationOptions AblationOptions::from_json(const nlohmann::json& j) {
  AblationOptions o;
  o.combos.clear();
  o.targets.clear();
  o.protocols.clear();
  for (const auto& c : j.at("combos")) o.combos.push_back(combo_from_string(c.get<std::string>()));
  for (const auto& t : j.at("targets")) o.targets.push_back(target_from_string(t.get<std::string>()));
  for (const auto& p : j.at("protocols")) o.protocols.push_back(protocol_from_string(p.get<std::string>()));
  o.hyper = Hyperparameters::from_json(j.at("hyperparameters"));
  if (o.combos.empty() || o.targets.empty() || o.protocols.empty())
    throw Error(ErrorKind::Config, "ablation grid needs at least one combo, target and protocol");
  return o;
}

const AblationCell* AblationReport::find(Protocol p, Target t, Combo c) const {
  for (const auto& cell : cells)
    if (cell.protocol == p && cell.target == t && cell.combo == c) return &cell;
  return nullptr;
}

AblationReport ablation_report(const std::vector<TrialFeatures>& data, const AblationOptions& options, unsigned jobs) {
  if (data.empty()) throw Error(ErrorKind::Input, "empty dataset");
  AblationReport rep;
  rep.options = options;
  for (auto p : options.protocols)
    for (auto t : options.targets)
      for (auto c : options.combos) {
        auto res = p == Protocol::Loso ? loso_cv(data, c, t, options.hyper, jobs)
                                       : kfold_cv(data, c, t, options.hyper, jobs);
        rep.cells.push_back({p, t, c, std::move(res)});
      }
  return rep;
}

namespace {

std::string fixed3(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3f", v);
  return buf;
}

}  // namespace

nlohmann::json AblationReport::to_json() const {
  nlohmann::ordered_json j;
  j["options"] = options.to_json();
  for (auto p : options.protocols) {
    nlohmann::ordered_json pj;
    for (auto t : options.targets) {
      double best = -1.0;
      std::string best_combo;
      nlohmann::ordered_json tj;
      for (auto c : options.combos) {
        const auto* cell = find(p, t, c);
        tj[to_string(c)] = cell->result.to_json();
        if (cell->result.acc_mean > best) {
          best = cell->result.acc_mean;
          best_combo = to_string(c);
        }
      }
      pj[to_string(t)] = {{"cells", tj}, {"best_combo", best_combo}};
    }
    j["protocols"][to_string(p)] = pj;
  }
  return j;
}

std::string AblationReport::to_markdown() const {
  std::string out;
  for (auto p : options.protocols) {
    out += p == Protocol::Loso ? "### Cross-subject (leave-one-subject-out)\n\n" : "### Intra-subject (10-fold)\n\n";
    out += "| Modality |";
    for (auto t : options.targets) out += std::string(" ") + to_string(t) + " ACC | " + to_string(t) + " MF1 |";
    out += "\n|---|";
    for (std::size_t i = 0; i < options.targets.size(); ++i) out += "---|---|";
    out += '\n';
    std::map<std::pair<Target, int>, double> best;
    for (auto t : options.targets)
      for (auto c : options.combos) {
        const auto& r = find(p, t, c)->result;
        best[{t, 0}] = std::max(best[{t, 0}], r.acc_mean);
        best[{t, 1}] = std::max(best[{t, 1}], r.mf1_mean);
      }
    for (auto c : options.combos) {
      out += std::string("| ") + to_string(c) + " |";
      for (auto t : options.targets) {
        const auto& r = find(p, t, c)->result;
        for (int m = 0; m < 2; ++m) {
          const double mean = m == 0 ? r.acc_mean : r.mf1_mean;
          const double sd = m == 0 ? r.acc_sd : r.mf1_sd;
          const auto cell = fixed3(mean) + "±" + fixed3(sd);
          out += mean == best[{t, m}] ? " **" + cell + "** |" : " " + cell + " |";
        }
      }
      out += '\n';
    }
    out += '\n';
  }
  return out;
}

}  // namespace meetbrain::recognition
