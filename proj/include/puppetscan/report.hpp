#pragma once

#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "puppetscan/behavior.hpp"
#include "puppetscan/clusters.hpp"
#include "puppetscan/collisions.hpp"
#include "puppetscan/core_model.hpp"
#include "puppetscan/signals.hpp"

namespace puppetscan {

/// Detector names accepted in DetectorConfig::disabled_detectors.
namespace detector {
inline constexpr std::string_view secret_collision = "secret_collision";
inline constexpr std::string_view pin_collision = "pin_collision";
inline constexpr std::string_view machine_token = "machine_token";
inline constexpr std::string_view behavioral = "behavioral";
inline constexpr std::string_view attention = "attention";
inline constexpr std::string_view timing = "timing";
inline constexpr std::string_view answer_pattern = "answer_pattern";
inline constexpr std::string_view freeform = "freeform";
}  // namespace detector

std::vector<std::string_view> known_detectors();

/// A merged puppet cluster. Overlapping detector clusters are unioned.
struct ReportCluster {
  std::string id;
  std::vector<std::string> members;
  /// Sorted, unique.
  std::vector<Evidence> evidence;
  /// Smallest artifact probability among the merged sources.
  std::optional<double> p;
  /// Natural log of the smallest binomial tail among secret-collision sources.
  std::optional<double> ln_tail;
  std::optional<std::string> group_id;
  std::vector<std::string> artifacts;
  SignalVector signals;
  BotVerdict verdict = BotVerdict::human_likely;

  std::size_t k() const { return members.size(); }
  bool operator==(const ReportCluster&) const = default;
};

struct AccountRow {
  std::string participant_id;
  std::string group_id;
  LabelClass label = LabelClass::valid;
  std::optional<bool> attention_pass;
  bool timing_flag = false;
  std::optional<double> response_mean_ms;
  std::optional<double> response_cv;
  AnswerPattern pattern;
  FreeformFlags freeform;
  std::optional<std::string> cluster_id;
  bool operator==(const AccountRow&) const = default;
};

struct GroupRow {
  std::string group_id;
  int total = 0;
  int puppets = 0;
  int inattentive = 0;
  int valid = 0;

  double percent(int count) const { return total > 0 ? 100.0 * count / total : 0.0; }
  bool operator==(const GroupRow&) const = default;
};

struct DetectionReport {
  std::string version;
  std::string dataset_digest;
  DetectorConfig config;
  std::uint64_t frequency_total = 0;
  bool frequency_table_loaded = false;
  /// Per group in spec order (then any undeclared groups), followed by the "all" row.
  std::vector<GroupRow> groups;
  std::vector<ReportCluster> clusters;
  ClusterProposal behavioral;
  std::vector<AccountRow> accounts;
  std::vector<Diagnostic> diagnostics;

  const GroupRow& overall() const { return groups.back(); }
  const AccountRow* find_account(std::string_view id) const;
  bool operator==(const DetectionReport&) const = default;
};

std::string_view library_version();

/// Runs every enabled detector and classifies each account with precedence
/// puppet > inattentive > valid. Without a frequency table every secret gets p = 1/t
/// with t the default corpus total, and a warning is recorded.
DetectionReport run_pipeline(const Dataset& dataset, const StudySpec& spec, const DetectorConfig& config,
                             const FrequencyTable* frequencies = nullptr);

std::map<std::string, LabelClass> predicted_labels(const DetectionReport& report);

void to_json(Json& j, const DetectionReport& r);
void from_json(const Json& j, DetectionReport& r);

enum class ReportFormat { human, csv, json };
enum class ReportTable { clusters, groups, accounts };
enum class ClusterSort { tail, k, members };

ReportFormat parse_report_format(std::string_view s);
ReportTable parse_report_table(std::string_view s);
ClusterSort parse_cluster_sort(std::string_view s);

struct EmitOptions {
  ReportFormat format = ReportFormat::human;
  /// CSV only; the human and JSON forms carry every table.
  ReportTable table = ReportTable::clusters;
  ClusterSort sort = ClusterSort::tail;
  bool descending = false;
};

/// Clusters without a tail probability sort after those with one.
std::vector<ReportCluster> sorted_clusters(const DetectionReport& report, ClusterSort sort, bool descending);

void emit_report(std::ostream& out, const DetectionReport& report, const EmitOptions& options = {});

/// Scientific notation for exp(ln_p), including values below the double range.
std::string format_log_probability(double ln_p, int digits = 3);

/// $PUPPETSCAN_STORE, else `.puppetscan/runs` under the working directory.
std::string default_store_dir();
/// Writes the report under its content address and returns the run id.
std::string persist_run(const DetectionReport& report, const std::string& store_dir);
/// Throws std::invalid_argument for an unknown run id.
DetectionReport load_run(const std::string& run_id, const std::string& store_dir);

}  // namespace puppetscan
