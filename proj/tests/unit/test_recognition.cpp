#include <doctest.h>

#include <random>
#include <set>

#include "meetbrain/error.hpp"
#include "meetbrain/recognition.hpp"
#include "synth.hpp"

using namespace meetbrain;
using namespace meetbrain::recognition;

namespace {

// Valence signal in EEG only; arousal signal in PPG only; Hb pure noise.
std::vector<TrialFeatures> dataset(int subjects, int per_subject, std::uint64_t seed, bool shuffle_labels = false) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> noise(0.0, 1.0);
  std::vector<TrialFeatures> out;
  for (int s = 0; s < subjects; ++s)
    for (int i = 0; i < per_subject; ++i) {
      TrialFeatures t;
      t.subject = "S" + std::to_string(s + 1);
      t.trial_id = "t" + std::to_string(i);
      t.valence_high = i % 2 == 0;
      t.arousal_high = (i / 2) % 2 == 0;
      for (auto& v : t.eeg) v = noise(rng);
      for (auto& v : t.ppg) v = noise(rng);
      for (auto& v : t.hb) v = noise(rng);
      t.eeg[2] += t.valence_high ? 6.0 : -6.0;
      t.ppg[16] += t.arousal_high ? 6.0 : -6.0;
      out.push_back(t);
    }
  if (shuffle_labels) {
    std::vector<bool> labels;
    for (const auto& t : out) labels.push_back(t.valence_high);
    std::shuffle(labels.begin(), labels.end(), rng);
    for (std::size_t i = 0; i < out.size(); ++i) out[i].valence_high = labels[i];
  }
  return out;
}

}  // namespace

TEST_CASE("combo vectors have the documented widths") {
  TrialFeatures t;
  CHECK(t.vector(Combo::Eeg).size() == 10);
  CHECK(t.vector(Combo::Ppg).size() == 18);
  CHECK(t.vector(Combo::Hb).size() == 48);
  CHECK(t.vector(Combo::EegPpg).size() == 28);
  CHECK(t.vector(Combo::EegHb).size() == 58);
  CHECK(t.vector(Combo::EegPpgHb).size() == 76);
  for (auto c : kAllCombos) CHECK(combo_from_string(to_string(c)) == c);
  CHECK_THROWS_AS(combo_from_string("EEG+fMRI"), Error);
}

TEST_CASE("metrics") {
  const std::vector<bool> labels{true, true, false, false};
  CHECK(accuracy(labels, labels) == 1.0);
  CHECK(macro_f1(labels, labels) == 1.0);
  CHECK(macro_f1({true, true, true, true}, labels) == doctest::Approx(1.0 / 3.0));
  CHECK(macro_f1({false, false, true, true}, labels) == 0.0);
  CHECK(accuracy({false, false, true, true}, labels) == 0.0);
  CHECK(macro_f1({true, true}, {true, true}) == doctest::Approx(0.5));
  CHECK_THROWS_AS(macro_f1({}, {}), Error);
  CHECK_THROWS_AS(accuracy({true}, {true, false}), Error);
}

TEST_CASE("logistic regression behaviour") {
  std::vector<std::vector<double>> x;
  std::vector<bool> y;
  for (int i = 0; i < 20; ++i) {
    x.push_back({i < 10 ? -2.0 - 0.1 * i : 2.0 + 0.1 * i, 0.5 * i});
    y.push_back(i >= 10);
  }
  const auto m = fit_logistic(x, y, {});
  for (std::size_t i = 0; i < x.size(); ++i) CHECK(m.predict(x[i]) == y[i]);
  const auto m2 = fit_logistic(x, y, {});
  CHECK(m.weights == m2.weights);
  CHECK(m.bias == m2.bias);

  std::vector<std::vector<double>> flat(7, {1.0, 1.0});
  const std::vector<bool> mostly{true, true, true, true, false, false, false};
  const auto mm = fit_logistic(flat, mostly, {});
  CHECK(mm.predict({1.0, 1.0}));
  CHECK(mm.predict({5.0, -3.0}));

  CHECK_THROWS_AS(fit_logistic(flat, std::vector<bool>(7, true), {}), Error);
}

TEST_CASE("standardizer uses training statistics only") {
  const auto s = Standardizer::fit({{1, 5}, {3, 5}});
  CHECK(s.mean[0] == 2.0);
  CHECK(s.sd[0] == 1.0);
  const auto z = s.apply({5, 100});
  CHECK(z[0] == 3.0);
  CHECK(z[1] == 0.0);
}

TEST_CASE("LOSO on separable data, permuted labels and leakage") {
  const auto data = dataset(5, 20, 1);
  const auto r = loso_cv(data, Combo::Eeg, Target::Valence, {}, 2);
  CHECK(r.units.size() == 5);
  CHECK(r.acc_mean == 1.0);
  CHECK(r.mf1_mean == 1.0);
  std::size_t tested = 0;
  for (const auto& u : r.units) tested += u.test_trials;
  CHECK(tested == data.size());

  double acc = 0.0;
  for (std::uint64_t s = 0; s < 10; ++s) acc += loso_cv(dataset(5, 20, 100 + s, true), Combo::Hb, Target::Valence).acc_mean;
  CHECK(std::abs(acc / 10.0 - 0.5) <= 0.1);

  // Rescaling one subject's features changes only that subject's fold.
  auto scaled = data;
  for (auto& t : scaled)
    if (t.subject == "S3")
      for (auto& v : t.hb) v *= 1000.0;
  const auto a = loso_cv(data, Combo::Hb, Target::Valence);
  const auto b = loso_cv(scaled, Combo::Hb, Target::Valence);
  for (std::size_t i = 0; i < a.units.size(); ++i) {
    if (a.units[i].name == "S3") continue;
    CAPTURE(a.units[i].name);
    CHECK(a.units[i].acc != b.units[i].acc);
  }
  CHECK_THROWS_AS(loso_cv(dataset(1, 10, 1), Combo::Eeg, Target::Valence), Error);
}

TEST_CASE("stratified folds and intra-subject CV") {
  std::vector<bool> labels(40);
  for (std::size_t i = 0; i < labels.size(); ++i) labels[i] = i % 2;
  const auto folds = stratified_folds(labels, 10, 5);
  std::array<int, 10> sizes{}, pos{};
  for (std::size_t i = 0; i < folds.size(); ++i) {
    ++sizes[static_cast<std::size_t>(folds[i])];
    pos[static_cast<std::size_t>(folds[i])] += labels[i];
  }
  for (int k = 0; k < 10; ++k) {
    CHECK(sizes[static_cast<std::size_t>(k)] == 4);
    CHECK(pos[static_cast<std::size_t>(k)] == 2);
  }
  CHECK(stratified_folds(labels, 10, 5) == folds);

  const auto data = dataset(3, 40, 2);
  const auto r = kfold_cv(data, Combo::Ppg, Target::Arousal, {}, 2);
  CHECK(r.acc_mean == 1.0);
  CHECK(r.units.size() == 3);
  CHECK(r.units[0].folds == 10);

  auto thin = dataset(2, 40, 3);
  thin.push_back(thin.front());
  thin.back().subject = "lonely";
  const auto r2 = kfold_cv(thin, Combo::Eeg, Target::Valence);
  CHECK(r2.units.size() == 2);
  REQUIRE(r2.excluded.size() == 1);
  CHECK(r2.excluded[0].find("lonely") != std::string::npos);
}

TEST_CASE("ablation grid favours the informative modality") {
  const auto data = dataset(5, 20, 4);
  const auto rep = ablation_report(data, {}, 2);
  CHECK(rep.cells.size() == 24);
  for (const auto& c : rep.cells) {
    CHECK(c.result.acc_mean >= 0.0);
    CHECK(c.result.acc_mean <= 1.0);
  }
  const auto eeg = rep.find(Protocol::Loso, Target::Valence, Combo::Eeg)->result.acc_mean;
  const auto ppg = rep.find(Protocol::Loso, Target::Valence, Combo::Ppg)->result.acc_mean;
  const auto hb = rep.find(Protocol::Loso, Target::Valence, Combo::Hb)->result.acc_mean;
  CHECK(eeg > ppg);
  CHECK(eeg > hb);
  CHECK(rep.find(Protocol::Loso, Target::Valence, Combo::EegPpgHb)->result.acc_mean >= std::max(ppg, hb));
  const auto md = rep.to_markdown();
  CHECK(md.find("EEG+PPG+Hb") != std::string::npos);
  CHECK(md.find("±") != std::string::npos);
  CHECK(rep.to_json().dump() == ablation_report(data, {}, 1).to_json().dump());
  CHECK_THROWS_AS(ablation_report({}), Error);

  const auto opts = AblationOptions::from_json(AblationOptions{}.to_json());
  CHECK(opts.combos.size() == 6);
}

TEST_CASE("PPG peaks and features") {
  const auto pulse = synth::sine(1.2, 25, 25 * 60, 1.0);
  const auto peaks = detect_peaks(pulse, 25);
  CHECK(peaks.size() >= 70);
  CHECK(peaks.size() <= 73);

  sigproc::PpgSeries ppg;
  for (std::size_t i = 0; i < pulse.size(); ++i) ppg.timestamps_ms.push_back(static_cast<double>(i) * 40.0);
  for (auto& ch : ppg.channels) ch = pulse;
  const auto f = ppg_features(ppg, 0, 60000);
  CHECK_FALSE(f.hr_undefined);
  CHECK(f.values[16] == doctest::Approx(72.0).epsilon(0.02));
  CHECK(f.values[1] == doctest::Approx(0.5).epsilon(0.01));

  for (auto& ch : ppg.channels) std::fill(ch.begin(), ch.end(), 0.3);
  const auto flat = ppg_features(ppg, 0, 60000);
  CHECK(flat.hr_undefined);
  CHECK(flat.values[16] == 0.0);
  CHECK(flat.values[17] == 0.0);
  CHECK(flat.values[1] < 1e-20);
}

TEST_CASE("hyperparameters round trip") {
  Hyperparameters h;
  h.lambda = 0.5;
  h.seed = 99;
  const auto b = Hyperparameters::from_json(h.to_json());
  CHECK(b.lambda == 0.5);
  CHECK(b.seed == 99);
  CHECK(b.iterations == 500);
}
