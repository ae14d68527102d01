#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "puppetscan/collisions.hpp"
#include "puppetscan/core_model.hpp"

namespace puppetscan {

// ---------------------------------------------------------------------------
// Population description

struct PuppeteerSpec {
  int k = 2;
  /// Occurrences of the shared password in the leaked corpus; 0 = unseen.
  std::uint64_t occurrences = 0;
};

struct GroupComposition {
  std::string group_id;
  int valid = 0;
  int inattentive = 0;
  std::vector<PuppeteerSpec> puppeteers;
  int replay_bots = 0;
  int smart_bots = 0;
  int genai_bots = 0;

  int total() const;
};

/// Spread of the human behavior profile. Each entry is the population median
/// and the log-scale standard deviation.
struct LatentScale {
  double median = 1.0;
  double log_sd = 0.0;
};

struct BehaviorModel {
  LatentScale key_interval_ms{220.0, 0.35};
  LatentScale key_cv{0.35, 0.30};
  LatentScale pointer_speed_px_s{600.0, 0.35};
  LatentScale idle_fraction{0.15, 0.50};
  LatentScale scroll_up{8.0, 0.60};
  LatentScale scroll_down{14.0, 0.60};
  LatentScale response_mean_ms{6000.0, 0.35};
  LatentScale response_cv{0.45, 0.30};
  /// Puppets deviate from their puppeteer's profile by this fraction of the
  /// population spread, per dimension.
  double puppet_jitter = 0.1;
  /// Bots answer every question in this time, within bot_timing_jitter (relative).
  double smart_bot_response_ms = 900.0;
  double genai_bot_response_ms = 4200.0;
  double bot_timing_jitter = 0.01;
  double human_search_prob = 0.85;
  double human_failed_login_prob = 0.15;
  double return_prob = 0.15;
};

enum class SecretMode { password, pin };

struct PopulationSpec {
  std::vector<GroupComposition> groups;
  SecretMode secret_mode = SecretMode::password;
  /// Chance that a puppet reuses its puppeteer's password.
  double secret_sharing_prob = 1.0;
  /// Chance that a puppet runs in its puppeteer's browser (shared tokens, shared stored PIN).
  double token_sharing_prob = 1.0;
  std::vector<std::string> freeform_questions = {"feedback"};
  BehaviorModel behavior;
  std::uint64_t seed = 1;

  int total() const;
};

/// Throws std::invalid_argument on negative counts, k < 2 or probabilities outside [0, 1].
void validate_population(const PopulationSpec& spec);

void to_json(Json& j, const PopulationSpec& s);
void from_json(const Json& j, PopulationSpec& s);

/// A preset bundles the study layout and the population that fills it.
struct Preset {
  std::string name;
  StudySpec study;
  PopulationSpec population;
};

Preset load_preset_file(const std::string& path);
/// Looks up `<name>.json` in $PUPPETSCAN_PRESET_DIR, then the built-in preset directory.
Preset load_preset(std::string_view name);

// ---------------------------------------------------------------------------
// Ground truth and evaluation

enum class BotKind { replay, smart, genai };
std::string_view to_string(BotKind k);

struct TruthLabel {
  LabelClass label = LabelClass::valid;
  /// Puppeteer id for puppets, operator id for replay bots; empty otherwise.
  std::string operator_id;
  std::optional<BotKind> bot_kind;
};

using GroundTruth = std::map<std::string, TruthLabel>;

Json truth_to_json(const GroundTruth& truth);
GroundTruth truth_from_json(const Json& j);

struct SyntheticStudy {
  std::string log;
  Dataset dataset;
  GroundTruth truth;
  /// Corpus counts for every planted puppeteer password with occurrences > 0.
  FrequencyTable frequency_table;
};

/// Deterministic for a given seed: the same spec yields byte-identical logs.
/// Throws std::invalid_argument for an invalid population or a study spec
/// missing one of the population's groups.
SyntheticStudy generate(const PopulationSpec& population, const StudySpec& study);

struct LabelScores {
  double precision = 1.0;
  double recall = 1.0;
  double f1 = 1.0;
  int support = 0;
};

struct EvalMetrics {
  std::map<LabelClass, LabelScores> per_label;
  /// confusion[truth][predicted]
  std::array<std::array<int, kLabelClassCount>, kLabelClassCount> confusion{};
};

Json metrics_to_json(const EvalMetrics& m);

/// Throws std::domain_error if a prediction names an unknown id or an id is left unpredicted.
EvalMetrics evaluate(const std::map<std::string, LabelClass>& predicted, const GroundTruth& truth);

struct PairwiseScores {
  double precision = 1.0;
  double recall = 1.0;
  double f1 = 1.0;
  std::int64_t true_pairs = 0;
  std::int64_t predicted_pairs = 0;
  std::int64_t correct_pairs = 0;
};

Json pairwise_to_json(const PairwiseScores& s);

/// Co-membership scoring: a pair is positive when both accounts share an operator.
/// Throws std::domain_error for ids missing from the truth.
PairwiseScores evaluate_pairs(const std::vector<std::vector<std::string>>& predicted_groups,
                              const GroundTruth& truth);

}  // namespace puppetscan
