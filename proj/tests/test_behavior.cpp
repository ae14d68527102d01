#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>

#include "puppetscan/behavior.hpp"
#include "puppetscan/synth.hpp"

using namespace puppetscan;

namespace {

ParticipantRecord typist(const std::string& id, int keys, std::int64_t gap) {
  ParticipantRecord r;
  r.participant_id = id;
  for (int i = 0; i < keys; ++i) r.events.push_back(UiEvent{id, 1, i * gap, EventKind::keydown, "keydown", {}});
  return r;
}

LabeledFeatures labeled(const std::string& id, std::vector<double> vals) {
  LabeledFeatures l{id, {}};
  for (std::size_t i = 0; i < vals.size() && i < BehaviorFeatures::kCount; ++i) l.features[i] = vals[i];
  return l;
}

/// 5 operators x 4 accounts with only the behavioral archetype.
PopulationSpec planted(std::uint64_t seed) {
  PopulationSpec p;
  GroupComposition g;
  g.group_id = "g1";
  for (int i = 0; i < 5; ++i) g.puppeteers.push_back({4, 0});
  p.groups = {g};
  p.seed = seed;
  return p;
}

StudySpec planted_study() {
  StudySpec s;
  s.groups = {{"g1", 20}};
  for (int q = 1; q <= 10; ++q) s.questions.push_back({"q" + std::to_string(q), {"a", "b", "c", "d", "e"}});
  return s;
}

}  // namespace

TEST_CASE("extract_features: 10 keydowns 100 ms apart") {
  const auto f = extract_features(typist("p", 10, 100));
  REQUIRE(f[feature::keystroke_interval_mean_ms].has_value());
  CHECK(*f[feature::keystroke_interval_mean_ms] == doctest::Approx(100.0));
  CHECK(*f[feature::keystroke_interval_std_ms] == doctest::Approx(0.0));
  CHECK(*f[feature::typing_speed_cps] == doctest::Approx(10.0));
}

TEST_CASE("extract_features: absent modalities stay absent") {
  const auto f = extract_features(typist("p", 10, 100));
  CHECK_FALSE(f[feature::mouse_path_length_px].has_value());
  CHECK_FALSE(f[feature::mouse_mean_speed_px_s].has_value());
  CHECK_FALSE(f[feature::mouse_idle_ratio].has_value());
  CHECK_FALSE(f[feature::scroll_up_count].has_value());
  CHECK_FALSE(f[feature::response_time_mean_ms].has_value());
  CHECK_FALSE(extract_features(ParticipantRecord{}).any_present());
}

TEST_CASE("extract_features: typing pauses are not intervals") {
  auto r = typist("p", 5, 100);
  r.events.push_back(UiEvent{"p", 1, 400 + 5000, EventKind::keydown, "keydown", {}});
  r.events.push_back(UiEvent{"p", 1, 400 + 5100, EventKind::keydown, "keydown", {}});
  const auto f = extract_features(r);
  CHECK(*f[feature::keystroke_interval_mean_ms] == doctest::Approx(100.0));
}

TEST_CASE("extract_features: pointer path and idle ratio") {
  ParticipantRecord r;
  r.participant_id = "p";
  const std::vector<std::tuple<std::int64_t, double, double>> pts{{0, 0, 0}, {500, 30, 40}, {2500, 30, 40}};
  for (auto [t, x, y] : pts) r.events.push_back(UiEvent{"p", 1, t, EventKind::click, "click", {{"x", x}, {"y", y}}});
  const auto f = extract_features(r);
  CHECK(*f[feature::mouse_path_length_px] == doctest::Approx(50.0));
  CHECK(*f[feature::mouse_mean_speed_px_s] == doctest::Approx(20.0));
  CHECK(*f[feature::mouse_idle_ratio] == doctest::Approx(0.8));
}

TEST_CASE("cluster_behaviors: identical vectors merge") {
  std::vector<LabeledFeatures> recs{labeled("a", {1, 2, 3}), labeled("b", {1, 2, 3}), labeled("c", {9, 0, 7})};
  const auto p = cluster_behaviors(recs, 0.1);
  REQUIRE(p.groups.size() == 1);
  CHECK(p.groups[0] == std::vector<std::string>{"a", "b"});
  CHECK(p.linkage_distances == std::vector<double>{0.0});
}

TEST_CASE("cluster_behaviors: no features is an error, no shared features never merge") {
  std::vector<LabeledFeatures> none{{"a", {}}, {"b", {}}};
  CHECK_THROWS_AS(cluster_behaviors(none, 1.0), std::domain_error);

  LabeledFeatures a{"a", {}};
  LabeledFeatures b{"b", {}};
  a.features[0] = 1.0;
  b.features[1] = 1.0;
  std::vector<LabeledFeatures> disjoint{a, b};
  CHECK(cluster_behaviors(disjoint, 1e9).groups.empty());
}

TEST_CASE("cluster_behaviors: planted 5 x 4 generator population") {
  const auto study = planted_study();
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    CAPTURE(seed);
    const auto synth = generate(planted(seed), study);
    const auto feats = extract_all_features(synth.dataset);
    const auto prop = cluster_behaviors(feats, DetectorConfig{}.clustering_distance_threshold);
    const auto scores = evaluate_pairs(prop.groups, synth.truth);
    CHECK(scores.f1 >= 0.95);
  }
}

TEST_CASE("cluster_behaviors: i.i.d. features with a strict threshold rarely group") {
  int empty = 0;
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> nd;
    std::vector<LabeledFeatures> recs;
    for (int i = 0; i < 30; ++i) {
      std::vector<double> v;
      for (std::size_t c = 0; c < BehaviorFeatures::kCount; ++c) v.push_back(nd(rng));
      recs.push_back(labeled("r" + std::to_string(i), v));
    }
    if (cluster_behaviors(recs, 0.1).groups.empty()) ++empty;
  }
  CHECK(empty >= 95);
}

TEST_CASE("cluster_behaviors: permutation and scaling invariance") {
  const auto synth = generate(planted(77), planted_study());
  auto feats = extract_all_features(synth.dataset);
  const double thr = DetectorConfig{}.clustering_distance_threshold;
  const auto base = cluster_behaviors(feats, thr);

  std::mt19937 rng(3);
  for (int i = 0; i < 10; ++i) {
    auto shuffled = feats;
    std::shuffle(shuffled.begin(), shuffled.end(), rng);
    CHECK(cluster_behaviors(shuffled, thr) == base);
  }
  for (std::size_t c = 0; c < BehaviorFeatures::kCount; ++c) {
    auto scaled = feats;
    for (auto& r : scaled)
      if (r.features[c]) *r.features[c] *= 37.5;
    CAPTURE(c);
    CHECK(cluster_behaviors(scaled, thr).groups == base.groups);
  }
}

TEST_CASE("cluster_behaviors is deterministic") {
  const auto synth = generate(planted(5), planted_study());
  const auto feats = extract_all_features(synth.dataset);
  CHECK(cluster_behaviors(feats, 0.35) == cluster_behaviors(feats, 0.35));
}

TEST_CASE("puppet features stay within the generator's jitter band") {
  const auto synth = generate(planted(9), planted_study());
  const auto feats = extract_all_features(synth.dataset);
  const BehaviorModel model;
  // Per operator, the log-spread of response-time means across puppets is a
  // fraction of the population log-spread.
  std::map<std::string, std::vector<double>> by_op;
  for (const auto& f : feats) by_op[synth.truth.at(f.participant_id).operator_id].push_back(
      std::log(f.features[feature::response_time_mean_ms].value()));
  for (const auto& [op, logs] : by_op) {
    CAPTURE(op);
    const auto [lo, hi] = std::minmax_element(logs.begin(), logs.end());
    CHECK(*hi - *lo <= 6.0 * model.puppet_jitter * model.response_mean_ms.log_sd + 0.15);
  }
}

TEST_CASE("write_features_csv leaves absent features empty") {
  std::vector<LabeledFeatures> recs{labeled("a", {1.5})};
  std::ostringstream out;
  write_features_csv(out, recs);
  const auto text = out.str();
  CHECK(text.rfind("participant_id,typing_speed_cps,", 0) == 0);
  CHECK(text.find("\na,1.5,,,,,,,,,\n") != std::string::npos);
}
