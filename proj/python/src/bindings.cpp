#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <sstream>

#include "puppetscan/behavior.hpp"
#include "puppetscan/binomial.hpp"
#include "puppetscan/challenge.hpp"
#include "puppetscan/collisions.hpp"
#include "puppetscan/hashing.hpp"
#include "puppetscan/ingest.hpp"
#include "puppetscan/report.hpp"
#include "puppetscan/synth.hpp"

namespace py = pybind11;
using namespace puppetscan;

namespace {

// JSON crosses the boundary as text; the Python package decodes it.
StudySpec study_from(const std::string& text) { return Json::parse(text).get<StudySpec>(); }

DetectorConfig config_from(const std::string& text) {
  return text.empty() ? DetectorConfig{} : Json::parse(text).get<DetectorConfig>();
}

std::string analyze(const std::string& log, const std::string& study_json, const std::string& config_json,
                    const std::optional<std::string>& frequencies) {
  const auto study = study_from(study_json);
  auto config = config_from(config_json);
  auto ingested = ingest_events(log, study);
  std::optional<FrequencyTable> table;
  if (frequencies) {
    std::istringstream in(*frequencies);
    table = load_frequency_table(in);
  }
  auto report = run_pipeline(ingested.dataset, study, config, table ? &*table : nullptr);
  report.diagnostics.insert(report.diagnostics.begin(), ingested.diagnostics.begin(), ingested.diagnostics.end());
  return Json(report).dump();
}

py::dict simulate(const std::string& population_json, const std::string& study_json) {
  PopulationSpec population;
  from_json(Json::parse(population_json), population);
  const auto s = generate(population, study_from(study_json));
  std::ostringstream freq;
  s.frequency_table.write(freq);
  py::dict out;
  out["log"] = s.log;
  out["truth"] = truth_to_json(s.truth).dump();
  out["frequencies"] = freq.str();
  return out;
}

py::dict preset(const std::string& name) {
  const auto p = load_preset(name);
  py::dict out;
  out["name"] = p.name;
  out["study"] = Json(p.study).dump();
  out["population"] = Json(p.population).dump();
  return out;
}

std::string features_csv(const std::string& log, const std::string& study_json) {
  const auto ingested = ingest_events(log, study_from(study_json));
  std::ostringstream out;
  write_features_csv(out, extract_all_features(ingested.dataset));
  return out.str();
}

std::string evaluate_json(const std::string& report_json, const std::string& truth_json) {
  const auto report = Json::parse(report_json).get<DetectionReport>();
  return metrics_to_json(evaluate(predicted_labels(report), truth_from_json(Json::parse(truth_json)))).dump();
}

py::dict shuffle(const std::string& question_id, const std::vector<std::string>& options, std::uint64_t seed) {
  const auto s = shuffle_options(QuestionSpec{question_id, options}, seed);
  py::dict out;
  out["question_id"] = s.question_id;
  out["permutation"] = s.permutation;
  out["shown_options"] = s.shown_options;
  out["seed"] = s.seed_used;
  return out;
}

py::dict context(const std::string& template_json, std::uint64_t seed) {
  const auto q = instantiate_context(parse_context_template(Json::parse(template_json)), seed);
  py::dict out;
  out["template_id"] = q.template_id;
  out["slot_value"] = q.slot_value;
  out["text"] = q.text;
  out["expected_answer"] = q.expected_answer;
  return out;
}

std::string cueing(std::uint64_t seed, int repetitions, int novel_per_repetition) {
  CueingOptions o;
  o.novel_per_repetition = novel_per_repetition;
  return to_json(generate_cueing_trials(seed, repetitions, o)).dump();
}

std::string score(const std::vector<double>& times, double slope_threshold, double fast_floor_ms,
                  double machine_floor_ms) {
  return std::string(to_string(score_learning_curve(times, {slope_threshold, fast_floor_ms, machine_floor_ms})));
}

py::bytes render_png(const std::string& text, int scale, int margin, double jitter, std::uint64_t seed) {
  const auto png = encode_png(render_text_image(text, {scale, margin, jitter, seed}));
  return {reinterpret_cast<const char*>(png.data()), png.size()};
}

}  // namespace

PYBIND11_MODULE(_puppetscan, m) {
  m.attr("__version__") = std::string(library_version());

  m.def("binomial_tail_ln", [](std::int64_t n, std::int64_t k, double p) {
    return static_cast<double>(binomial_tail(n, k, p).log());
  }, py::arg("n"), py::arg("k"), py::arg("p"));
  m.def("format_log_probability", &format_log_probability, py::arg("ln_p"), py::arg("digits") = 3);
  m.def("birthday_collision_prob", &birthday_collision_prob, py::arg("n"), py::arg("space_size"));
  m.def("sha1_hex", [](const std::string& s) { return sha1_hex(s); });
  m.def("secret_probability", [](const std::string& hash, std::uint64_t occurrences, std::uint64_t total) {
    FrequencyTable t(total);
    if (occurrences > 0) t.set(hash, occurrences);
    return secret_probability(hash, t);
  }, py::arg("secret_hash"), py::arg("occurrences") = 0, py::arg("total") = kPwnedCorpusTotal);

  m.def("analyze_json", &analyze, py::arg("log"), py::arg("study"), py::arg("config") = "",
        py::arg("frequencies") = py::none());
  m.def("simulate_json", &simulate, py::arg("population"), py::arg("study"));
  m.def("preset_json", &preset, py::arg("name"));
  m.def("features_csv", &features_csv, py::arg("log"), py::arg("study"));
  m.def("evaluate_json", &evaluate_json, py::arg("report"), py::arg("truth"));

  m.def("seed_for", [](const std::string& pid, const std::string& salt) { return seed_for(pid, salt); },
        py::arg("participant_id"), py::arg("salt"));
  m.def("shuffle_options", &shuffle, py::arg("question_id"), py::arg("options"), py::arg("seed"));
  m.def("instantiate_context", &context, py::arg("template"), py::arg("seed"));
  m.def("cueing_trials_json", &cueing, py::arg("seed"), py::arg("repetitions"),
        py::arg("novel_per_repetition") = 0);
  m.def("score_learning_curve", &score, py::arg("times_ms"), py::arg("slope_threshold") = -0.05,
        py::arg("fast_floor_ms") = 1000.0, py::arg("machine_floor_ms") = 250.0);
  m.def("render_text_png", &render_png, py::arg("text"), py::arg("scale") = 1, py::arg("margin") = 2,
        py::arg("jitter") = 0.0, py::arg("seed") = 0);
}
