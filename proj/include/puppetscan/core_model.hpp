#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

namespace puppetscan {

using Json = nlohmann::json;

enum class EventKind {
  click,
  keydown,
  scroll_up,
  scroll_down,
  search,
  page_nav,
  login_attempt,
  answer,
  freeform,
  secret_set,
  storage_token,
  fingerprint_token,
  pin_assigned,
  unknown,
};

std::string_view to_string(EventKind kind);
/// Returns EventKind::unknown for names outside the schema.
EventKind parse_event_kind(std::string_view name);

struct UiEvent {
  std::string participant_id;
  int session = 1;
  std::int64_t t_ms = 0;
  EventKind kind = EventKind::unknown;
  /// Original kind name; differs from to_string(kind) only for unknown kinds.
  std::string kind_name;
  Json payload = Json::object();

  bool operator==(const UiEvent&) const = default;
};

struct McqAnswer {
  int option_index = 0;
  int shown_position = 0;
  bool operator==(const McqAnswer&) const = default;
};

struct ResponseSet {
  std::map<std::string, McqAnswer> mcq;
  std::map<std::string, std::string> freeform;
  std::map<std::string, std::string> attention;
  std::map<std::string, std::int64_t> per_question_time_ms;

  bool operator==(const ResponseSet&) const = default;
};

/// Which event produced ParticipantRecord::secret_hash.
enum class SecretKind { none, password, pin };

struct ParticipantRecord {
  std::string participant_id;
  std::string group_id;
  std::vector<UiEvent> events;
  ResponseSet responses;
  std::optional<std::string> secret_hash;
  SecretKind secret_kind = SecretKind::none;
  std::set<std::string> fingerprint_tokens;
  std::set<std::string> storage_tokens;
  std::set<int> completed_sessions;

  bool operator==(const ParticipantRecord&) const = default;
};

/// Records keyed by nothing in particular; ordered by first appearance in the source.
using Dataset = std::vector<ParticipantRecord>;

struct GroupSpec {
  std::string id;
  int target_size = 0;
  bool operator==(const GroupSpec&) const = default;
};

struct QuestionSpec {
  std::string id;
  std::vector<std::string> options;
  bool operator==(const QuestionSpec&) const = default;
};

struct AttentionCheck {
  std::string id;
  std::vector<std::string> accepted;
  bool operator==(const AttentionCheck&) const = default;
};

struct DetectorConfig {
  double collision_alpha = 1e-3;
  int min_cluster_size = 2;
  double timing_cv_floor = 0.05;
  double timing_mean_floor_ms = 1500.0;
  double clustering_distance_threshold = 0.55;
  std::uint64_t seed = 0;
  /// Cohort size used as n in the binomial tail; 0 means "dataset size".
  std::int64_t cohort_size = 0;
  /// Behavioral proposals only mark accounts as puppets when this is set.
  bool behavioral_counts_as_puppet = false;
  std::set<std::string> disabled_detectors;
  std::vector<std::string> stub_lexicon = {"good", "ok"};

  bool enabled(std::string_view detector) const {
    return !disabled_detectors.contains(std::string(detector));
  }
  bool operator==(const DetectorConfig&) const = default;
};

struct StudySpec {
  std::vector<GroupSpec> groups;
  std::vector<QuestionSpec> questions;
  std::vector<AttentionCheck> attention_checks;
  std::int64_t pin_space_size = 10000;
  DetectorConfig thresholds;

  const QuestionSpec* find_question(std::string_view id) const;
  const AttentionCheck* find_check(std::string_view id) const;
  bool has_group(std::string_view id) const;
  bool operator==(const StudySpec&) const = default;
};

/// Final classification of an account. Detectors never predict `bot`; it exists for ground truth.
enum class LabelClass { valid, inattentive, puppet, bot };
inline constexpr int kLabelClassCount = 4;
std::string_view to_string(LabelClass c);
/// Throws std::invalid_argument for an unknown name.
LabelClass parse_label_class(std::string_view s);

enum class Severity { info, warning, error };

struct Diagnostic {
  Severity severity = Severity::error;
  std::optional<std::string> participant_id;
  std::optional<std::size_t> line;
  std::string message;
  bool operator==(const Diagnostic&) const = default;
};

std::string_view to_string(Severity s);

void to_json(Json& j, const Diagnostic& d);
void from_json(const Json& j, Diagnostic& d);
void to_json(Json& j, const DetectorConfig& c);
void from_json(const Json& j, DetectorConfig& c);
void to_json(Json& j, const StudySpec& s);
/// Throws std::invalid_argument when the spec violates its invariants.
void from_json(const Json& j, StudySpec& s);

/// Throws std::invalid_argument naming the first violated invariant.
void validate_spec(const StudySpec& spec);

/// Loads a StudySpec from a JSON file. Accepts either a bare spec document or a
/// preset document carrying the spec under a "study" key.
StudySpec load_study_spec(const std::string& path);
/// Overlays a DetectorConfig document (or the "thresholds" key of one) onto cfg.
DetectorConfig load_detector_config(const std::string& path, DetectorConfig base);

}  // namespace puppetscan
