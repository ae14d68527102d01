#pragma once

#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "puppetscan/clusters.hpp"
#include "puppetscan/core_model.hpp"

namespace puppetscan {

enum class AttentionResult { pass, fail };

/// Pass iff every declared check was answered with an accepted label.
/// A missing answer fails.
AttentionResult evaluate_attention(const ParticipantRecord& record, const StudySpec& spec);

/// Throws std::domain_error for fewer than two members.
///
/// identical_search_term requires every member to have searched. The
/// default_first_item_only and identical_patterns signals need at least one
/// multiple-choice answer in the cluster.
SignalVector compute_signals(std::span<const ParticipantRecord* const> members);

enum class BotVerdict { human_likely, ambiguous, bot_suspect };
std::string_view to_string(BotVerdict v);

/// One signal alone is not enough to call a bot.
BotVerdict bot_likelihood(const SignalVector& signals);

struct TimingProfile {
  double mean_ms = 0.0;
  double std_ms = 0.0;
  double cv = 0.0;
  std::vector<double> per_question_times;
  double min_interval_ms = 0.0;
};

/// Absent when the record has fewer than two per-question times.
std::optional<TimingProfile> timing_profile(const ParticipantRecord& record);
/// Flags only answers that are both uniform (low cv) and fast (low mean).
bool flag_timing(const std::optional<TimingProfile>& profile, const DetectorConfig& config);

enum class PatternKind { none, constant, alternating, custom_period };

struct AnswerPattern {
  PatternKind kind = PatternKind::none;
  /// Smallest repeating period; 0 when kind == none.
  int period = 0;
  bool operator==(const AnswerPattern&) const = default;
};

std::string to_string(const AnswerPattern& p);

/// Smallest period p <= len/2 the sequence repeats with. Fewer than four answers is never a pattern.
AnswerPattern detect_answer_pattern(std::span<const int> answers);

/// Shown positions of the record's multiple-choice answers in the order they
/// were given. Attention checks are excluded.
std::vector<int> shown_positions_in_order(const ParticipantRecord& record, const StudySpec& spec);

struct FreeformFlags {
  bool one_word = false;
  bool irrelevant_stub = false;
  std::vector<std::string> duplicate_of;
  bool operator==(const FreeformFlags&) const = default;
};

/// Lowercases, trims and collapses whitespace runs to one space.
std::string normalize_text(std::string_view text);

/// Flags per participant that has any free-form answer.
std::map<std::string, FreeformFlags> score_freeform(const Dataset& dataset,
                                                    const std::vector<std::string>& stub_lexicon);

/// One stub per line; blank lines and '#' comments ignored.
std::vector<std::string> load_stub_lexicon(const std::string& path);

/// Records sharing a fingerprint token, or a storage token, are grouped
/// transitively; the two token kinds are never matched against each other.
/// A group found through both kinds is reported once.
std::vector<PuppetCluster> group_by_machine_token(const Dataset& dataset);

}  // namespace puppetscan
