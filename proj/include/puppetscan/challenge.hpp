#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "puppetscan/core_model.hpp"

namespace puppetscan {

/// Per-participant seed: the first 8 bytes of SHA-256 over (salt, id).
/// Throws std::domain_error when either input is empty.
std::uint64_t seed_for(std::string_view participant_id, std::string_view study_salt);

// ---------------------------------------------------------------------------
// Dynamic option positions

struct ShuffledQuestion {
  std::string question_id;
  /// permutation[canonical index] = shown position.
  std::vector<int> permutation;
  std::vector<std::string> shown_options;
  std::uint64_t seed_used = 0;

  int canonical_index(int shown_position) const;
  bool operator==(const ShuffledQuestion&) const = default;
};

/// Fisher-Yates over the options, driven by (seed, question id).
/// Throws std::domain_error for a question with no options.
ShuffledQuestion shuffle_options(const QuestionSpec& question, std::uint64_t seed);

// ---------------------------------------------------------------------------
// Randomized context

struct SlotValue {
  std::string value;
  std::string answer;
};

/// A question with one `{slot}` placeholder and an answer key per slot value.
struct ContextTemplate {
  std::string id;
  std::string text;
  std::string slot;
  std::vector<SlotValue> values;
};

struct ContextQuestion {
  std::string template_id;
  std::string slot_value;
  std::string text;
  std::string expected_answer;
  bool operator==(const ContextQuestion&) const = default;
};

/// Throws std::invalid_argument unless the template has a placeholder and at
/// least two slot values, each with a non-empty answer.
ContextTemplate parse_context_template(const Json& j);
ContextTemplate load_context_template(const std::string& path);

/// Throws std::domain_error when the template has no usable answer keys.
ContextQuestion instantiate_context(const ContextTemplate& tmpl, std::uint64_t seed);

/// Case- and whitespace-insensitive comparison against the answer key.
bool check_context_answer(const ContextQuestion& question, std::string_view answer);

// ---------------------------------------------------------------------------
// Contextual cueing

struct CueingOptions {
  int grid_size = 12;
  int distractors = 11;
  /// Novel layouts shown after each repeated one.
  int novel_per_repetition = 0;
  char target = 'T';
  char distractor = 'L';
  char blank = '.';
};

struct CueingTrial {
  std::vector<std::string> grid;
  int target_row = 0;
  int target_col = 0;
  bool repeated = false;
  bool operator==(const CueingTrial&) const = default;
};

struct CueingTrialSet {
  std::uint64_t seed = 0;
  int repetitions = 0;
  std::vector<CueingTrial> trials;
  bool operator==(const CueingTrialSet&) const = default;
};

/// One fixed layout repeated `repetitions` times (4..6), optionally
/// interleaved with novel layouts. Throws std::domain_error outside 4..6.
CueingTrialSet generate_cueing_trials(std::uint64_t seed, int repetitions, const CueingOptions& options = {});

Json to_json(const CueingTrialSet& set);
CueingTrialSet cueing_from_json(const Json& j);

enum class LearningCurveVerdict { first_time_human, repeat_participant, bot_like };
std::string_view to_string(LearningCurveVerdict v);

/// Decision boundaries for score_learning_curve. These are engine defaults;
/// tune them per study.
struct LearningCurveConfig {
  /// Per-repetition slope of ln(search time) that counts as clear improvement.
  double slope_threshold = -0.05;
  /// A first trial slower than this leaves room for learning.
  double fast_floor_ms = 1000.0;
  /// Anything faster than this is not a human visual search.
  double machine_floor_ms = 250.0;
};

/// Throws std::domain_error for fewer than four samples or non-positive times.
LearningCurveVerdict score_learning_curve(const std::vector<double>& search_times_ms,
                                          const LearningCurveConfig& config = {});

/// Least-squares slope of ln(time) against repetition index.
double log_time_slope(const std::vector<double>& search_times_ms);

// ---------------------------------------------------------------------------
// Text to image

inline constexpr int kGlyphSize = 8;

struct TextImageStyle {
  int scale = 1;
  int margin = 2;
  /// Probability of flipping each background pixel; 0 disables jitter.
  double jitter = 0.0;
  std::uint64_t seed = 0;
};

/// Monochrome raster, row-major, 1 = ink.
struct Raster {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> pixels;

  std::uint8_t at(int x, int y) const { return pixels[static_cast<std::size_t>(y) * width + x]; }
  bool operator==(const Raster&) const = default;
};

/// Throws std::invalid_argument for empty text or characters outside printable ASCII (listed).
Raster render_text_image(std::string_view text, const TextImageStyle& style = {});

/// Lossless PNG encoding (8-bit grayscale, ink is black).
std::vector<std::uint8_t> encode_png(const Raster& raster);
void write_png(const Raster& raster, const std::string& path);

}  // namespace puppetscan
