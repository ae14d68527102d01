#pragma once

#include <array>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "puppetscan/core_model.hpp"

namespace puppetscan {

/// Per-account behavioral measurements. A field is empty when the record has
/// no events of the modality it is derived from.
struct BehaviorFeatures {
  static constexpr std::size_t kCount = 10;
  static constexpr std::array<std::string_view, kCount> kNames{
      "typing_speed_cps",       "keystroke_interval_mean_ms", "keystroke_interval_std_ms", "mouse_path_length_px",
      "mouse_mean_speed_px_s",  "mouse_idle_ratio",           "scroll_up_count",           "scroll_down_count",
      "response_time_mean_ms", "response_time_cv",
  };

  std::array<std::optional<double>, kCount> values{};

  std::optional<double>& operator[](std::size_t i) { return values[i]; }
  const std::optional<double>& operator[](std::size_t i) const { return values[i]; }
  bool any_present() const;
  bool operator==(const BehaviorFeatures&) const = default;
};

/// Index constants into BehaviorFeatures::values.
namespace feature {
inline constexpr std::size_t typing_speed_cps = 0;
inline constexpr std::size_t keystroke_interval_mean_ms = 1;
inline constexpr std::size_t keystroke_interval_std_ms = 2;
inline constexpr std::size_t mouse_path_length_px = 3;
inline constexpr std::size_t mouse_mean_speed_px_s = 4;
inline constexpr std::size_t mouse_idle_ratio = 5;
inline constexpr std::size_t scroll_up_count = 6;
inline constexpr std::size_t scroll_down_count = 7;
inline constexpr std::size_t response_time_mean_ms = 8;
inline constexpr std::size_t response_time_cv = 9;
}  // namespace feature

/// A pointer gap longer than this counts as idle time.
inline constexpr double kMouseIdleGapMs = 1000.0;
/// A keystroke gap longer than this ends a typing burst and is not an interval.
inline constexpr double kTypingPauseMs = 2000.0;

BehaviorFeatures extract_features(const ParticipantRecord& record);

struct LabeledFeatures {
  std::string participant_id;
  BehaviorFeatures features;
};

std::vector<LabeledFeatures> extract_all_features(const Dataset& dataset);

struct ClusterProposal {
  /// Disjoint groups of size >= 2, members sorted, groups ordered by first member.
  std::vector<std::vector<std::string>> groups;
  /// Average-linkage distance of every merge, in merge order.
  std::vector<double> linkage_distances;
  double distance_threshold = 0.0;

  bool operator==(const ClusterProposal&) const = default;
};

/// Agglomerative average-linkage clustering over z-scored features.
///
/// Distance between two accounts is the RMS z-score difference over the
/// features both have; accounts with no feature in common never merge.
/// Merging stops once the closest pair is farther than `distance_threshold`.
/// Ties break by lexicographic participant id, so input order never matters.
/// Throws std::domain_error when no record has any feature.
ClusterProposal cluster_behaviors(std::span<const LabeledFeatures> records, double distance_threshold);

/// One row per participant; absent features are empty cells.
void write_features_csv(std::ostream& out, std::span<const LabeledFeatures> records);

}  // namespace puppetscan
