#include <doctest.h>

#include <algorithm>
#include <sstream>
#include <string>

#include "puppetscan/core_model.hpp"
#include "puppetscan/ingest.hpp"

using namespace puppetscan;

namespace {

StudySpec small_spec() {
  StudySpec s;
  s.groups = {{"g1", 10}, {"g2", 10}};
  s.questions = {{"q1", {"a", "b", "c"}}, {"q2", {"a", "b"}}, {"attn", {"Strongly Agree", "Agree", "Disagree", "Strongly Disagree"}}};
  s.attention_checks = {{"attn", {"Strongly Disagree", "Disagree"}}};
  return s;
}

std::string line(const std::string& pid, int session, long t, const std::string& kind, const Json& payload) {
  return Json{{"participant_id", pid}, {"session", session}, {"t_ms", t}, {"kind", kind}, {"payload", payload}}.dump() +
         "\n";
}

std::string clean_log() {
  std::string s;
  for (const std::string pid : {"p1", "p2", "p3"}) {
    s += line(pid, 1, 0, "secret_set", {{"secret_hash", "HASH" + pid}, {"group_id", "g1"}});
    s += line(pid, 1, 100, "login_attempt", {{"success", true}});
    s += line(pid, 1, 2000, "answer", {{"question_id", "q1"}, {"option_id", 1}, {"shown_position", 1}});
    s += line(pid, 1, 5000, "answer", {{"question_id", "attn"}, {"option_id", 3}, {"shown_position", 3}});
    s += line(pid, 1, 6000, "freeform", {{"question_id", "fb"}, {"text", "fine " + pid}});
  }
  return s;
}

std::size_t count(const std::vector<Diagnostic>& ds, Severity s) {
  return static_cast<std::size_t>(std::count_if(ds.begin(), ds.end(), [&](const auto& d) { return d.severity == s; }));
}

}  // namespace

TEST_CASE("ingest: empty source") {
  const auto r = ingest_events(std::string(), small_spec());
  CHECK(r.dataset.empty());
  CHECK(r.diagnostics.empty());
}

TEST_CASE("ingest: one valid answer event") {
  StudySpec spec;
  spec.questions = {{"q1", {"a", "b"}}};
  const auto r = ingest_events(line("p", 1, 10, "answer", {{"question_id", "q1"}, {"option_id", 1}, {"shown_position", 0}}), spec);
  REQUIRE(r.dataset.size() == 1);
  CHECK(r.dataset[0].events.size() == 1);
  CHECK(r.diagnostics.empty());
  CHECK(r.dataset[0].responses.mcq.at("q1") == McqAnswer{1, 0});
  CHECK(r.dataset[0].responses.per_question_time_ms.at("q1") == 10);
}

TEST_CASE("ingest: decreasing t_ms is reordered with a warning") {
  StudySpec spec;
  const std::string log = line("p", 1, 500, "click", Json::object()) + line("p", 1, 200, "keydown", Json::object());
  const auto r = ingest_events(log, spec);
  REQUIRE(r.dataset.size() == 1);
  const auto& ev = r.dataset[0].events;
  REQUIRE(ev.size() == 2);
  CHECK(ev[0].t_ms == 200);
  CHECK(ev[1].t_ms == 500);
  REQUIRE(r.diagnostics.size() == 1);
  CHECK(r.diagnostics[0].severity == Severity::warning);
  CHECK(r.diagnostics[0].line == 2u);
  CHECK(validate_dataset(r.dataset, spec).empty());
}

TEST_CASE("ingest: sorting is stable by (session, t_ms)") {
  StudySpec spec;
  std::string log;
  log += line("p", 2, 0, "page_nav", {{"page", "b"}});
  log += line("p", 1, 5, "page_nav", {{"page", "x"}});
  log += line("p", 1, 5, "page_nav", {{"page", "y"}});
  log += line("p", 1, 1, "page_nav", {{"page", "a"}});
  const auto r = ingest_events(log, spec);
  std::vector<std::string> pages;
  for (const auto& e : r.dataset.at(0).events) pages.push_back(e.payload["page"].get<std::string>());
  CHECK(pages == std::vector<std::string>{"a", "x", "y", "b"});
}

TEST_CASE("ingest: malformed lines are reported with their line number and skipped") {
  StudySpec spec;
  std::string log = line("p", 1, 0, "click", Json::object());
  log += "{not json\n";
  log += R"({"participant_id":"p","session":3,"t_ms":0,"kind":"click","payload":{}})" "\n";
  log += R"({"participant_id":"p","session":1,"t_ms":0,"kind":"click","payload":{},"extra":1})" "\n";
  log += R"({"participant_id":"p","session":1,"t_ms":-4,"kind":"click","payload":{}})" "\n";
  log += line("p", 1, 1, "login_attempt", {{"success", "yes"}});
  const auto r = ingest_events(log, spec);
  REQUIRE(r.dataset.size() == 1);
  CHECK(r.dataset[0].events.size() == 1);
  REQUIRE(r.diagnostics.size() == 5);
  std::vector<std::size_t> lines;
  for (const auto& d : r.diagnostics) {
    CHECK(d.severity == Severity::error);
    lines.push_back(d.line.value_or(0));
  }
  CHECK(lines == std::vector<std::size_t>{2, 3, 4, 5, 6});
}

TEST_CASE("ingest: unknown kinds are kept as opaque events") {
  StudySpec spec;
  const auto r = ingest_events(line("p", 1, 0, "hover", {{"x", 1}}), spec);
  REQUIRE(r.dataset.size() == 1);
  CHECK(r.dataset[0].events[0].kind == EventKind::unknown);
  CHECK(r.dataset[0].events[0].kind_name == "hover");
  CHECK(count(r.diagnostics, Severity::warning) == 1);
  CHECK(count(r.diagnostics, Severity::error) == 0);
}

TEST_CASE("ingest: record-level errors") {
  const auto spec = small_spec();
  SUBCASE("unknown group") {
    const auto r = ingest_events(line("p", 1, 0, "secret_set", {{"secret_hash", "AB"}, {"group_id", "nope"}}), spec);
    REQUIRE(count(r.diagnostics, Severity::error) == 1);
    CHECK(r.diagnostics[0].participant_id == "p");
  }
  SUBCASE("conflicting secrets keep the first") {
    std::string log = line("p", 1, 0, "secret_set", {{"secret_hash", "AB"}, {"group_id", "g1"}});
    log += line("p", 1, 5, "secret_set", {{"secret_hash", "CD"}, {"group_id", "g1"}});
    const auto r = ingest_events(log, spec);
    CHECK(count(r.diagnostics, Severity::error) == 1);
    CHECK(r.dataset[0].secret_hash == "AB");
  }
  SUBCASE("repeating the same secret is fine") {
    std::string log = line("p", 1, 0, "secret_set", {{"secret_hash", "AB"}, {"group_id", "g1"}});
    log += line("p", 2, 5, "secret_set", {{"secret_hash", "AB"}});
    const auto r = ingest_events(log, spec);
    CHECK(r.diagnostics.empty());
  }
}

TEST_CASE("ingest: record contents") {
  const auto r = ingest_events(clean_log(), small_spec());
  CHECK(r.diagnostics.empty());
  REQUIRE(r.dataset.size() == 3);
  const auto& p1 = r.dataset[0];
  CHECK(p1.participant_id == "p1");
  CHECK(p1.group_id == "g1");
  CHECK(p1.secret_hash == "HASHp1");
  CHECK(p1.secret_kind == SecretKind::password);
  CHECK(p1.responses.attention.at("attn") == "Strongly Disagree");
  CHECK(p1.responses.mcq.size() == 1);
  CHECK(p1.responses.freeform.at("fb") == "fine p1");
  // Durations default to the gap since the previous answer.
  CHECK(p1.responses.per_question_time_ms.at("q1") == 2000);
  CHECK(p1.responses.per_question_time_ms.at("attn") == 3000);
  CHECK(p1.completed_sessions == std::set<int>{1});
}

TEST_CASE("validate_dataset") {
  const auto spec = small_spec();
  auto ds = ingest_events(clean_log(), spec).dataset;
  CHECK(validate_dataset(ds, spec).empty());

  SUBCASE("option out of range names participant and question") {
    ds[1].responses.mcq["q1"].option_index = 7;
    const auto d = validate_dataset(ds, spec);
    REQUIRE(d.size() == 1);
    CHECK(d[0].participant_id == "p2");
    CHECK(d[0].message.find("q1") != std::string::npos);
  }
  SUBCASE("pin_assigned without a secret hash") {
    ds[0].events.push_back(UiEvent{"p1", 1, 9000, EventKind::pin_assigned, "pin_assigned", {{"group_id", "g1"}}});
    ds[0].secret_hash.reset();
    const auto d = validate_dataset(ds, spec);
    REQUIRE(d.size() == 1);
    CHECK(d[0].participant_id == "p1");
  }
  SUBCASE("duplicate ids") {
    ds.push_back(ds[0]);
    CHECK(validate_dataset(ds, spec).size() == 1);
  }
}

TEST_CASE("ingest -> serialize -> ingest round-trips") {
  const auto spec = small_spec();
  std::string log = clean_log();
  log += line("p1", 2, 50, "hover", Json::object());
  log += line("p2", 1, 10, "search", {{"term_hash", "ab12"}, {"extra", true}});
  const auto a = ingest_events(log, spec);
  const auto b = ingest_events(serialize_events(a.dataset), spec);
  CHECK(a.dataset == b.dataset);
  CHECK(dataset_digest(a.dataset) == dataset_digest(b.dataset));
}

TEST_CASE("ingest is deterministic") {
  const auto spec = small_spec();
  const auto a = ingest_events(clean_log(), spec);
  const auto b = ingest_events(clean_log(), spec);
  CHECK(a.dataset == b.dataset);
  CHECK(a.diagnostics == b.diagnostics);
}

TEST_CASE("StudySpec validation") {
  Json j = small_spec();
  CHECK_NOTHROW(j.get<StudySpec>());
  CHECK(j.get<StudySpec>() == small_spec());

  Json dup = j;
  dup["groups"].push_back({{"id", "g1"}, {"target_size", 3}});
  CHECK_THROWS_AS(dup.get<StudySpec>(), std::invalid_argument);

  Json no_accept = j;
  no_accept["attention_checks"][0]["accepted"] = Json::array();
  CHECK_THROWS_AS(no_accept.get<StudySpec>(), std::invalid_argument);

  Json bad_pin = j;
  bad_pin["pin_space_size"] = 0;
  CHECK_THROWS_AS(bad_pin.get<StudySpec>(), std::invalid_argument);
}

TEST_CASE("DetectorConfig overlay and validation") {
  DetectorConfig c;
  from_json(Json{{"collision_alpha", 0.01}}, c);
  CHECK(c.collision_alpha == 0.01);
  CHECK(c.min_cluster_size == 2);
  CHECK_THROWS_AS(from_json(Json{{"collision_alpha", 1.0}}, c), std::invalid_argument);
  CHECK_THROWS_AS(from_json(Json{{"min_cluster_size", 1}}, c), std::invalid_argument);

  DetectorConfig d;
  d.disabled_detectors = {"timing"};
  d.seed = 42;
  Json j = d;
  DetectorConfig back;
  from_json(j, back);
  CHECK(back == d);
}

TEST_CASE("event kinds round-trip through their names") {
  for (int i = 0; i < static_cast<int>(EventKind::unknown); ++i) {
    const auto k = static_cast<EventKind>(i);
    CHECK(parse_event_kind(to_string(k)) == k);
  }
  CHECK(parse_event_kind("mousemove") == EventKind::unknown);
}
