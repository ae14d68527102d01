#include "puppetscan/core_model.hpp"

#include <array>
#include <fstream>
#include <stdexcept>
#include <utility>

namespace puppetscan {
namespace {

constexpr std::array<std::pair<EventKind, std::string_view>, 13> kKindNames{{
    {EventKind::click, "click"},
    {EventKind::keydown, "keydown"},
    {EventKind::scroll_up, "scroll_up"},
    {EventKind::scroll_down, "scroll_down"},
    {EventKind::search, "search"},
    {EventKind::page_nav, "page_nav"},
    {EventKind::login_attempt, "login_attempt"},
    {EventKind::answer, "answer"},
    {EventKind::freeform, "freeform"},
    {EventKind::secret_set, "secret_set"},
    {EventKind::storage_token, "storage_token"},
    {EventKind::fingerprint_token, "fingerprint_token"},
    {EventKind::pin_assigned, "pin_assigned"},
}};

Json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  try {
    return Json::parse(in);
  } catch (const Json::parse_error& e) {
    throw std::invalid_argument(path + ": " + e.what());
  }
}

}  // namespace

std::string_view to_string(EventKind kind) {
  for (const auto& [k, name] : kKindNames)
    if (k == kind) return name;
  return "unknown";
}

EventKind parse_event_kind(std::string_view name) {
  for (const auto& [k, n] : kKindNames)
    if (n == name) return k;
  return EventKind::unknown;
}

std::string_view to_string(Severity s) {
  switch (s) {
    case Severity::info: return "info";
    case Severity::warning: return "warning";
    case Severity::error: return "error";
  }
  return "error";
}

const QuestionSpec* StudySpec::find_question(std::string_view id) const {
  for (const auto& q : questions)
    if (q.id == id) return &q;
  return nullptr;
}

const AttentionCheck* StudySpec::find_check(std::string_view id) const {
  for (const auto& c : attention_checks)
    if (c.id == id) return &c;
  return nullptr;
}

bool StudySpec::has_group(std::string_view id) const {
  for (const auto& g : groups)
    if (g.id == id) return true;
  return false;
}

void to_json(Json& j, const Diagnostic& d) {
  j = Json{{"severity", to_string(d.severity)}, {"message", d.message}};
  if (d.participant_id) j["participant_id"] = *d.participant_id;
  if (d.line) j["line"] = *d.line;
}

void from_json(const Json& j, Diagnostic& d) {
  const auto sev = j.at("severity").get<std::string>();
  d.severity = sev == "info" ? Severity::info : sev == "warning" ? Severity::warning : Severity::error;
  d.message = j.at("message").get<std::string>();
  d.participant_id.reset();
  d.line.reset();
  if (j.contains("participant_id")) d.participant_id = j["participant_id"].get<std::string>();
  if (j.contains("line")) d.line = j["line"].get<std::size_t>();
}

void to_json(Json& j, const DetectorConfig& c) {
  j = Json{
      {"collision_alpha", c.collision_alpha},
      {"min_cluster_size", c.min_cluster_size},
      {"timing_cv_floor", c.timing_cv_floor},
      {"timing_mean_floor_ms", c.timing_mean_floor_ms},
      {"clustering_distance_threshold", c.clustering_distance_threshold},
      {"seed", c.seed},
      {"cohort_size", c.cohort_size},
      {"behavioral_counts_as_puppet", c.behavioral_counts_as_puppet},
      {"disabled_detectors", c.disabled_detectors},
      {"stub_lexicon", c.stub_lexicon},
  };
}

void from_json(const Json& j, DetectorConfig& c) {
  // Missing keys keep their current value so partial configs overlay defaults.
  auto take = [&](const char* key, auto& field) {
    if (j.contains(key)) field = j.at(key).get<std::decay_t<decltype(field)>>();
  };
  take("collision_alpha", c.collision_alpha);
  take("min_cluster_size", c.min_cluster_size);
  take("timing_cv_floor", c.timing_cv_floor);
  take("timing_mean_floor_ms", c.timing_mean_floor_ms);
  take("clustering_distance_threshold", c.clustering_distance_threshold);
  take("seed", c.seed);
  take("cohort_size", c.cohort_size);
  take("behavioral_counts_as_puppet", c.behavioral_counts_as_puppet);
  take("disabled_detectors", c.disabled_detectors);
  take("stub_lexicon", c.stub_lexicon);
  if (!(c.collision_alpha > 0.0 && c.collision_alpha < 1.0))
    throw std::invalid_argument("collision_alpha must lie in (0, 1)");
  if (c.min_cluster_size < 2) throw std::invalid_argument("min_cluster_size must be >= 2");
  if (c.cohort_size < 0) throw std::invalid_argument("cohort_size must be >= 0");
}

void to_json(Json& j, const StudySpec& s) {
  Json groups = Json::array();
  for (const auto& g : s.groups) groups.push_back({{"id", g.id}, {"target_size", g.target_size}});
  Json questions = Json::array();
  for (const auto& q : s.questions) questions.push_back({{"id", q.id}, {"options", q.options}});
  Json checks = Json::array();
  for (const auto& c : s.attention_checks) checks.push_back({{"id", c.id}, {"accepted", c.accepted}});
  j = Json{{"groups", groups},
           {"questions", questions},
           {"attention_checks", checks},
           {"pin_space_size", s.pin_space_size},
           {"thresholds", s.thresholds}};
}

void from_json(const Json& j, StudySpec& s) {
  s = StudySpec{};
  for (const auto& g : j.value("groups", Json::array()))
    s.groups.push_back({g.at("id").get<std::string>(), g.value("target_size", 0)});
  for (const auto& q : j.value("questions", Json::array()))
    s.questions.push_back({q.at("id").get<std::string>(), q.at("options").get<std::vector<std::string>>()});
  for (const auto& c : j.value("attention_checks", Json::array()))
    s.attention_checks.push_back(
        {c.at("id").get<std::string>(), c.at("accepted").get<std::vector<std::string>>()});
  s.pin_space_size = j.value("pin_space_size", std::int64_t{10000});
  if (j.contains("thresholds")) from_json(j.at("thresholds"), s.thresholds);
  validate_spec(s);
}

void validate_spec(const StudySpec& spec) {
  std::set<std::string> seen;
  for (const auto& g : spec.groups) {
    if (g.id.empty()) throw std::invalid_argument("group id must be non-empty");
    if (!seen.insert(g.id).second) throw std::invalid_argument("duplicate group id: " + g.id);
  }
  seen.clear();
  for (const auto& q : spec.questions) {
    if (!seen.insert(q.id).second) throw std::invalid_argument("duplicate question id: " + q.id);
    if (q.options.empty()) throw std::invalid_argument("question without options: " + q.id);
  }
  for (const auto& c : spec.attention_checks)
    if (c.accepted.empty())
      throw std::invalid_argument("attention check without accepted answers: " + c.id);
  if (spec.pin_space_size < 1) throw std::invalid_argument("pin_space_size must be >= 1");
}

StudySpec load_study_spec(const std::string& path) {
  const Json doc = read_json_file(path);
  return (doc.contains("study") ? doc.at("study") : doc).get<StudySpec>();
}

DetectorConfig load_detector_config(const std::string& path, DetectorConfig base) {
  Json doc = read_json_file(path);
  if (doc.contains("study")) doc = doc.at("study");
  from_json(doc.contains("thresholds") ? doc.at("thresholds") : doc, base);
  return base;
}

std::string_view to_string(LabelClass c) {
  switch (c) {
    case LabelClass::valid: return "valid";
    case LabelClass::inattentive: return "inattentive";
    case LabelClass::puppet: return "puppet";
    case LabelClass::bot: return "bot";
  }
  return "valid";
}

LabelClass parse_label_class(std::string_view s) {
  if (s == "valid") return LabelClass::valid;
  if (s == "inattentive") return LabelClass::inattentive;
  if (s == "puppet") return LabelClass::puppet;
  if (s == "bot") return LabelClass::bot;
  throw std::invalid_argument("unknown label '" + std::string(s) + "'");
}

}  // namespace puppetscan
