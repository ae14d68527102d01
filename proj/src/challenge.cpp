#include "puppetscan/challenge.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <stdexcept>

#include <png.h>

#include "puppetscan/hashing.hpp"
#include "puppetscan/random.hpp"
#include "puppetscan/signals.hpp"

namespace puppetscan {
namespace {

constexpr std::array<std::array<std::uint8_t, kGlyphSize>, 95> kGlyphs{{
#include "glyphs.inc"
}};

}  // namespace

std::uint64_t seed_for(std::string_view participant_id, std::string_view study_salt) {
  if (participant_id.empty()) throw std::domain_error("seed_for: empty participant id");
  if (study_salt.empty()) throw std::domain_error("seed_for: empty study salt");
  std::string material;
  material.reserve(study_salt.size() + participant_id.size() + 1);
  material.append(study_salt).push_back('\0');
  material.append(participant_id);
  return sha256_u64(material);
}

int ShuffledQuestion::canonical_index(int shown_position) const {
  for (std::size_t c = 0; c < permutation.size(); ++c)
    if (permutation[c] == shown_position) return static_cast<int>(c);
  throw std::out_of_range("shown position outside the question");
}

ShuffledQuestion shuffle_options(const QuestionSpec& question, std::uint64_t seed) {
  if (question.options.empty()) throw std::domain_error("shuffle_options: question has no options");
  Rng rng(mix_seed(seed, sha256_u64(question.id)));
  const auto n = question.options.size();
  // order[shown] = canonical
  std::vector<int> order(n);
  std::iota(order.begin(), order.end(), 0);
  for (std::size_t i = n - 1; i > 0; --i) std::swap(order[i], order[rng.below(i + 1)]);

  ShuffledQuestion out;
  out.question_id = question.id;
  out.seed_used = seed;
  out.permutation.resize(n);
  out.shown_options.resize(n);
  for (std::size_t shown = 0; shown < n; ++shown) {
    out.permutation[order[shown]] = static_cast<int>(shown);
    out.shown_options[shown] = question.options[order[shown]];
  }
  return out;
}

ContextTemplate parse_context_template(const Json& j) {
  ContextTemplate t;
  t.id = j.at("id").get<std::string>();
  t.text = j.at("text").get<std::string>();
  t.slot = j.at("slot").get<std::string>();
  for (const auto& v : j.at("values")) {
    SlotValue sv{v.at("value").get<std::string>(), v.value("answer", std::string{})};
    if (sv.answer.empty()) throw std::invalid_argument("template " + t.id + ": value '" + sv.value + "' has no answer");
    t.values.push_back(std::move(sv));
  }
  if (t.values.size() < 2) throw std::invalid_argument("template " + t.id + ": needs at least two slot values");
  if (t.text.find("{" + t.slot + "}") == std::string::npos)
    throw std::invalid_argument("template " + t.id + ": text lacks {" + t.slot + "}");
  return t;
}

ContextTemplate load_context_template(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open template " + path);
  return parse_context_template(Json::parse(in));
}

ContextQuestion instantiate_context(const ContextTemplate& tmpl, std::uint64_t seed) {
  if (tmpl.values.empty() ||
      std::any_of(tmpl.values.begin(), tmpl.values.end(), [](const auto& v) { return v.answer.empty(); }))
    throw std::domain_error("instantiate_context: template " + tmpl.id + " lacks answer keys");
  Rng rng(mix_seed(seed, sha256_u64(tmpl.id)));
  const auto& chosen = tmpl.values[rng.below(tmpl.values.size())];

  ContextQuestion q;
  q.template_id = tmpl.id;
  q.slot_value = chosen.value;
  q.expected_answer = chosen.answer;
  q.text = tmpl.text;
  const std::string placeholder = "{" + tmpl.slot + "}";
  for (auto pos = q.text.find(placeholder); pos != std::string::npos;
       pos = q.text.find(placeholder, pos + chosen.value.size()))
    q.text.replace(pos, placeholder.size(), chosen.value);
  return q;
}

bool check_context_answer(const ContextQuestion& question, std::string_view answer) {
  return normalize_text(answer) == normalize_text(question.expected_answer);
}

namespace {

CueingTrial random_layout(Rng& rng, const CueingOptions& opt) {
  const int cells = opt.grid_size * opt.grid_size;
  std::vector<int> idx(static_cast<std::size_t>(cells));
  std::iota(idx.begin(), idx.end(), 0);
  // Partial Fisher-Yates: the first 1 + distractors cells are the occupied ones.
  const int used = std::min(cells, 1 + opt.distractors);
  for (int i = 0; i < used; ++i) std::swap(idx[i], idx[i + rng.below(static_cast<std::uint64_t>(cells - i))]);

  CueingTrial t;
  t.grid.assign(static_cast<std::size_t>(opt.grid_size), std::string(static_cast<std::size_t>(opt.grid_size), opt.blank));
  t.target_row = idx[0] / opt.grid_size;
  t.target_col = idx[0] % opt.grid_size;
  t.grid[t.target_row][t.target_col] = opt.target;
  for (int i = 1; i < used; ++i) t.grid[idx[i] / opt.grid_size][idx[i] % opt.grid_size] = opt.distractor;
  return t;
}

}  // namespace

CueingTrialSet generate_cueing_trials(std::uint64_t seed, int repetitions, const CueingOptions& options) {
  if (repetitions < 4 || repetitions > 6) throw std::domain_error("generate_cueing_trials: repetitions must be 4..6");
  if (options.grid_size < 2 || options.distractors < 1 || options.novel_per_repetition < 0)
    throw std::domain_error("generate_cueing_trials: invalid layout options");
  Rng rng(seed);
  CueingTrial fixed = random_layout(rng, options);
  fixed.repeated = true;

  CueingTrialSet set;
  set.seed = seed;
  set.repetitions = repetitions;
  for (int r = 0; r < repetitions; ++r) {
    set.trials.push_back(fixed);
    for (int k = 0; k < options.novel_per_repetition; ++k) set.trials.push_back(random_layout(rng, options));
  }
  return set;
}

Json to_json(const CueingTrialSet& set) {
  Json trials = Json::array();
  for (const auto& t : set.trials)
    trials.push_back({{"grid", t.grid}, {"target_row", t.target_row}, {"target_col", t.target_col},
                      {"repeated", t.repeated}});
  return Json{{"seed", set.seed}, {"repetitions", set.repetitions}, {"trials", trials}};
}

CueingTrialSet cueing_from_json(const Json& j) {
  CueingTrialSet set;
  set.seed = j.at("seed").get<std::uint64_t>();
  set.repetitions = j.at("repetitions").get<int>();
  for (const auto& t : j.at("trials"))
    set.trials.push_back({t.at("grid").get<std::vector<std::string>>(), t.at("target_row").get<int>(),
                          t.at("target_col").get<int>(), t.at("repeated").get<bool>()});
  return set;
}

std::string_view to_string(LearningCurveVerdict v) {
  switch (v) {
    case LearningCurveVerdict::first_time_human: return "first_time_human";
    case LearningCurveVerdict::repeat_participant: return "repeat_participant";
    case LearningCurveVerdict::bot_like: return "bot_like";
  }
  return "repeat_participant";
}

double log_time_slope(const std::vector<double>& times) {
  const auto n = static_cast<double>(times.size());
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < times.size(); ++i) {
    const double x = static_cast<double>(i);
    const double y = std::log(times[i]);
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
  }
  return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

LearningCurveVerdict score_learning_curve(const std::vector<double>& times, const LearningCurveConfig& config) {
  if (times.size() < 4) throw std::domain_error("score_learning_curve: needs at least four search times");
  if (std::any_of(times.begin(), times.end(), [](double t) { return !(t > 0.0); }))
    throw std::domain_error("score_learning_curve: search times must be positive");

  if (std::any_of(times.begin(), times.end(), [&](double t) { return t < config.machine_floor_ms; }))
    return LearningCurveVerdict::bot_like;
  const double slope = log_time_slope(times);
  if (slope <= config.slope_threshold && times.front() > config.fast_floor_ms)
    return LearningCurveVerdict::first_time_human;
  const bool all_fast = std::all_of(times.begin(), times.end(), [&](double t) { return t < config.fast_floor_ms; });
  if (slope > config.slope_threshold && all_fast) return LearningCurveVerdict::repeat_participant;
  return slope < 0.0 ? LearningCurveVerdict::first_time_human : LearningCurveVerdict::repeat_participant;
}

Raster render_text_image(std::string_view text, const TextImageStyle& style) {
  if (text.empty()) throw std::invalid_argument("render_text_image: empty text");
  if (style.scale < 1 || style.margin < 0 || style.jitter < 0.0 || style.jitter > 1.0)
    throw std::invalid_argument("render_text_image: invalid style");
  std::string unsupported;
  for (char c : text) {
    const auto u = static_cast<unsigned char>(c);
    if ((u < 32 || u > 126) && unsupported.find(c) == std::string::npos) unsupported.push_back(c);
  }
  if (!unsupported.empty()) {
    std::string list;
    for (unsigned char c : unsupported) {
      char buf[8];
      std::snprintf(buf, sizeof buf, "0x%02X", c);
      list += (list.empty() ? "" : ", ") + std::string(buf);
    }
    throw std::invalid_argument("render_text_image: unsupported characters: " + list);
  }

  const int cell = kGlyphSize * style.scale;
  Raster r;
  r.width = static_cast<int>(text.size()) * cell + 2 * style.margin;
  r.height = cell + 2 * style.margin;
  r.pixels.assign(static_cast<std::size_t>(r.width) * r.height, 0);
  for (std::size_t i = 0; i < text.size(); ++i) {
    const auto& glyph = kGlyphs[static_cast<unsigned char>(text[i]) - 32];
    for (int gy = 0; gy < kGlyphSize; ++gy)
      for (int gx = 0; gx < kGlyphSize; ++gx) {
        if (!(glyph[gy] & (0x80 >> gx))) continue;
        for (int sy = 0; sy < style.scale; ++sy)
          for (int sx = 0; sx < style.scale; ++sx) {
            const int x = style.margin + static_cast<int>(i) * cell + gx * style.scale + sx;
            const int y = style.margin + gy * style.scale + sy;
            r.pixels[static_cast<std::size_t>(y) * r.width + x] = 1;
          }
      }
  }
  if (style.jitter > 0.0) {
    Rng rng(style.seed);
    for (auto& px : r.pixels)
      if (px == 0 && rng.bernoulli(style.jitter)) px = 1;
  }
  return r;
}

namespace {

void png_append(png_structp png, png_bytep data, png_size_t len) {
  auto* out = static_cast<std::vector<std::uint8_t>*>(png_get_io_ptr(png));
  out->insert(out->end(), data, data + len);
}

void png_flush_noop(png_structp) {}

}  // namespace

std::vector<std::uint8_t> encode_png(const Raster& raster) {
  std::vector<std::uint8_t> out;
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  if (png == nullptr) throw std::runtime_error("png_create_write_struct failed");
  png_infop info = png_create_info_struct(png);
  if (info == nullptr) {
    png_destroy_write_struct(&png, nullptr);
    throw std::runtime_error("png_create_info_struct failed");
  }
  std::vector<std::uint8_t> row(static_cast<std::size_t>(raster.width));
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    throw std::runtime_error("PNG encoding failed");
  }
  png_set_write_fn(png, &out, png_append, png_flush_noop);
  png_set_IHDR(png, info, static_cast<png_uint_32>(raster.width), static_cast<png_uint_32>(raster.height), 8,
               PNG_COLOR_TYPE_GRAY, PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  for (int y = 0; y < raster.height; ++y) {
    for (int x = 0; x < raster.width; ++x) row[static_cast<std::size_t>(x)] = raster.at(x, y) ? 0 : 255;
    png_write_row(png, row.data());
  }
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
  return out;
}

void write_png(const Raster& raster, const std::string& path) {
  const auto bytes = encode_png(raster);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path);
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
}

}  // namespace puppetscan
