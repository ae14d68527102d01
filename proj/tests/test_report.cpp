#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <random>
#include <sstream>

#include "puppetscan/ingest.hpp"
#include "puppetscan/report.hpp"
#include "puppetscan/synth.hpp"

using namespace puppetscan;

namespace {

StudySpec survey() {
  StudySpec s;
  s.groups = {{"g1", 0}, {"g2", 0}};
  for (int q = 1; q <= 6; ++q) s.questions.push_back({"q" + std::to_string(q), {"a", "b", "c", "d", "e"}});
  s.questions.push_back({"attn", {"Strongly Agree", "Agree", "Disagree", "Strongly Disagree"}});
  s.attention_checks = {{"attn", {"Strongly Disagree", "Disagree"}}};
  return s;
}

SyntheticStudy sample(std::uint64_t seed = 1) {
  PopulationSpec p;
  p.groups = {{"g1", 15, 6, {{4, 0}, {2, 0}}, 0, 0, 0}, {"g2", 12, 5, {{3, 0}}, 0, 0, 0}};
  p.seed = seed;
  return generate(p, survey());
}

std::filesystem::path scratch(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / ("puppetscan-test-" + name);
  std::filesystem::remove_all(dir);
  return dir;
}

}  // namespace

TEST_CASE("run_pipeline: empty dataset") {
  const auto r = run_pipeline(Dataset{}, survey(), DetectorConfig{});
  CHECK(r.clusters.empty());
  CHECK(r.accounts.empty());
  REQUIRE(r.groups.size() == 3);
  for (const auto& g : r.groups) {
    CHECK(g.total == 0);
    CHECK(g.puppets == 0);
  }
  CHECK(r.overall().group_id == "all");
}

TEST_CASE("run_pipeline: precedence puppet > inattentive > valid") {
  const auto spec = survey();
  Dataset ds(3);
  for (int i = 0; i < 3; ++i) {
    ds[static_cast<std::size_t>(i)].participant_id = "p" + std::to_string(i);
    ds[static_cast<std::size_t>(i)].group_id = "g1";
  }
  // p0 and p1 share a password; p0 and p2 fail the attention check.
  ds[0].secret_hash = ds[1].secret_hash = "SHARED";
  ds[0].secret_kind = ds[1].secret_kind = SecretKind::password;
  ds[0].responses.attention["attn"] = "Agree";
  ds[1].responses.attention["attn"] = "Disagree";
  ds[2].responses.attention["attn"] = "Agree";
  const auto r = run_pipeline(ds, spec, DetectorConfig{});
  CHECK(r.find_account("p0")->label == LabelClass::puppet);
  CHECK(r.find_account("p1")->label == LabelClass::puppet);
  CHECK(r.find_account("p2")->label == LabelClass::inattentive);
  CHECK(r.overall().puppets == 2);
  CHECK(r.overall().inattentive == 1);
  CHECK(r.overall().valid == 0);
}

TEST_CASE("run_pipeline: overlapping evidence merges into one cluster") {
  const auto s = sample();
  const auto r = run_pipeline(s.dataset, survey(), DetectorConfig{});
  // Three operators, each found by both password and machine tokens.
  REQUIRE(r.clusters.size() == 3);
  for (const auto& c : r.clusters) {
    CHECK(std::find(c.evidence.begin(), c.evidence.end(), Evidence::secret_collision) != c.evidence.end());
    CHECK(std::find(c.evidence.begin(), c.evidence.end(), Evidence::machine_token) != c.evidence.end());
    CHECK(c.ln_tail.has_value());
  }
  CHECK(r.overall().puppets == 9);
  CHECK(r.overall().inattentive == 11);
  CHECK(r.overall().valid == 27);
  for (const auto& g : r.groups) CHECK(g.puppets + g.inattentive + g.valid == g.total);
}

TEST_CASE("run_pipeline: counts are invariant to input order") {
  const auto s = sample(4);
  const auto base = run_pipeline(s.dataset, survey(), DetectorConfig{});
  auto shuffled = s.dataset;
  std::mt19937 rng(8);
  std::shuffle(shuffled.begin(), shuffled.end(), rng);
  const auto other = run_pipeline(shuffled, survey(), DetectorConfig{});
  CHECK(other.groups == base.groups);
  CHECK(predicted_labels(other) == predicted_labels(base));
}

TEST_CASE("run_pipeline: disabled detectors and missing data produce warnings") {
  const auto s = sample();
  DetectorConfig c;
  c.disabled_detectors = {"secret_collision", "machine_token", "no_such_detector"};
  const auto r = run_pipeline(s.dataset, survey(), c);
  CHECK(r.overall().puppets == 0);
  CHECK(std::any_of(r.diagnostics.begin(), r.diagnostics.end(), [](const Diagnostic& d) {
    return d.severity == Severity::warning && d.message.find("no_such_detector") != std::string::npos;
  }));

  StudySpec no_checks = survey();
  no_checks.attention_checks.clear();
  const auto r2 = run_pipeline(s.dataset, no_checks, DetectorConfig{});
  CHECK(r2.overall().inattentive == 0);
}

TEST_CASE("reports round-trip through JSON") {
  const auto s = sample(2);
  const auto r = run_pipeline(s.dataset, survey(), DetectorConfig{}, &s.frequency_table);
  const Json j = r;
  CHECK(Json::parse(j.dump()).get<DetectionReport>() == r);

  std::ostringstream out;
  emit_report(out, r, {ReportFormat::json});
  auto back = Json::parse(out.str()).get<DetectionReport>();
  CHECK(back.clusters.size() == r.clusters.size());
  CHECK(back.groups == r.groups);
  CHECK(back.accounts == r.accounts);
}

TEST_CASE("emit_report: CSV of an empty report is a header row") {
  const auto r = run_pipeline(Dataset{}, survey(), DetectorConfig{});
  for (auto table : {ReportTable::clusters, ReportTable::accounts}) {
    std::ostringstream out;
    emit_report(out, r, {ReportFormat::csv, table});
    const auto text = out.str();
    CHECK(std::count(text.begin(), text.end(), '\n') == 1);
  }
}

TEST_CASE("emit_report: sort by tail is ascending") {
  DetectionReport r;
  r.groups = {GroupRow{"all"}};
  for (double ln : {-3.0, -500.0, -40.0}) {
    ReportCluster c;
    c.id = "C" + std::to_string(r.clusters.size() + 1);
    c.members = {c.id + "a", c.id + "b"};
    c.ln_tail = ln;
    r.clusters.push_back(c);
  }
  ReportCluster pin;
  pin.id = "C4";
  pin.members = {"x", "y", "z"};
  r.clusters.push_back(pin);

  const auto asc = sorted_clusters(r, ClusterSort::tail, false);
  CHECK(asc[0].ln_tail == -500.0);
  CHECK(asc[1].ln_tail == -40.0);
  CHECK(asc[2].ln_tail == -3.0);
  CHECK_FALSE(asc[3].ln_tail.has_value());
  const auto desc = sorted_clusters(r, ClusterSort::tail, true);
  CHECK(desc[0].ln_tail == -3.0);
  CHECK(sorted_clusters(r, ClusterSort::k, true)[0].id == "C4");

  std::ostringstream out;
  emit_report(out, r, {ReportFormat::csv, ReportTable::clusters, ClusterSort::tail, false});
  const auto text = out.str();
  CHECK(text.find("C2,") < text.find("C3,"));
  CHECK(text.find("C3,") < text.find("C1,"));
}

TEST_CASE("emit_report: human output carries both table shapes") {
  const auto s = sample();
  const auto r = run_pipeline(s.dataset, survey(), DetectorConfig{});
  std::ostringstream out;
  emit_report(out, r);
  const auto text = out.str();
  CHECK(text.find("puppets") != std::string::npos);
  CHECK(text.find("inattentive") != std::string::npos);
  CHECK(text.find("puppet clusters: 3") != std::string::npos);
}

TEST_CASE("format_log_probability handles values below the double range") {
  CHECK(format_log_probability(std::log(1.5e-5)) == "1.50e-05");
  CHECK(format_log_probability(-401.0 * std::log(10.0) + std::log(4.23)) == "4.23e-401");
  CHECK(format_log_probability(0.0) == "1.00e+00");
}

TEST_CASE("option parsers reject unknown values") {
  CHECK(parse_report_format("json") == ReportFormat::json);
  CHECK_THROWS_AS(parse_report_format("xml"), std::invalid_argument);
  CHECK_THROWS_AS(parse_report_table("foo"), std::invalid_argument);
  CHECK_THROWS_AS(parse_cluster_sort("bar"), std::invalid_argument);
}

TEST_CASE("run store") {
  const auto dir = scratch("store").string();
  const auto s = sample(3);
  const auto r = run_pipeline(s.dataset, survey(), DetectorConfig{});
  const auto id = persist_run(r, dir);
  CHECK(id.size() == 16);
  CHECK(persist_run(r, dir) == id);
  CHECK(load_run(id, dir) == r);
  CHECK_THROWS_AS(load_run("0123456789abcdef", dir), std::invalid_argument);
  CHECK_THROWS_AS(load_run("../etc", dir), std::invalid_argument);
  std::filesystem::remove_all(dir);
}
