// puppetscan command-line front end.
//
// Exit codes: 0 success, 1 usage error, 2 data error, 3 internal error.

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "puppetscan/behavior.hpp"
#include "puppetscan/binomial.hpp"
#include "puppetscan/challenge.hpp"
#include "puppetscan/collisions.hpp"
#include "puppetscan/core_model.hpp"
#include "puppetscan/ingest.hpp"
#include "puppetscan/report.hpp"
#include "puppetscan/synth.hpp"

namespace ps = puppetscan;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitData = 2;
constexpr int kExitInternal = 3;

/// The collision probability printed for 181 accounts and a 4-digit PIN space in the source study.
constexpr double kReportedPinCollisionProb = 0.00016;

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct DataError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

template <typename F>
auto usage_guard(F&& f) {
  try {
    return f();
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  }
}

std::string read_all(const std::string& path) {
  if (path == "-") {
    std::ostringstream ss;
    ss << std::cin.rdbuf();
    return ss.str();
  }
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text(const std::string& path, const std::string& text) {
  if (path == "-") {
    std::cout << text;
    return;
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write '" + path + "'");
  out << text;
}

ps::Json read_json(const std::string& path) {
  try {
    return ps::Json::parse(read_all(path));
  } catch (const ps::Json::parse_error& e) {
    throw DataError("'" + path + "' is not valid JSON: " + e.what());
  }
}

std::uint64_t seed_from(const std::optional<std::uint64_t>& seed, const std::string& participant,
                        const std::string& salt) {
  if (seed) return *seed;
  if (participant.empty() || salt.empty()) throw UsageError("give --seed, or both --participant and --salt");
  return ps::seed_for(participant, salt);
}

// ---------------------------------------------------------------------------

struct AnalyzeArgs {
  std::string logs = "-";
  std::string spec;
  std::string preset;
  std::string config;
  std::string freq;
  std::string freq_format = "auto";
  std::string out_dir;
  std::string format = "human";
  std::string table = "clusters";
  std::string sort = "tail";
  bool descending = false;
  std::string store;
  bool no_store = false;
  bool strict = false;
};

ps::StudySpec load_spec(const std::string& spec, const std::string& preset) {
  if (!spec.empty() && !preset.empty()) throw UsageError("--spec and --preset are mutually exclusive");
  if (spec.empty() && preset.empty()) throw UsageError("one of --spec or --preset is required");
  try {
    if (!preset.empty()) return ps::load_preset(preset).study;
    return ps::load_study_spec(spec);
  } catch (const std::invalid_argument& e) {
    throw DataError(e.what());
  } catch (const std::runtime_error& e) {
    throw DataError(e.what());
  } catch (const ps::Json::exception& e) {
    throw DataError(std::string("study spec: ") + e.what());
  }
}

int run_analyze(const AnalyzeArgs& a) {
  ps::EmitOptions emit;
  usage_guard([&] {
    emit.format = ps::parse_report_format(a.format);
    emit.table = ps::parse_report_table(a.table);
    emit.sort = ps::parse_cluster_sort(a.sort);
    return 0;
  });
  emit.descending = a.descending;
  const auto freq_format = usage_guard([&] {
    if (a.freq_format == "auto") return ps::FrequencyFormat::automatic;
    if (a.freq_format == "hashed") return ps::FrequencyFormat::hashed;
    if (a.freq_format == "plaintext") return ps::FrequencyFormat::plaintext;
    throw std::invalid_argument("unknown --freq-format '" + a.freq_format + "'");
  });

  const ps::StudySpec spec = load_spec(a.spec, a.preset);
  ps::DetectorConfig config = spec.thresholds;
  if (!a.config.empty()) {
    try {
      config = ps::load_detector_config(a.config, config);
    } catch (const std::exception& e) {
      throw DataError(std::string("config: ") + e.what());
    }
  }
  std::optional<ps::FrequencyTable> table;
  if (!a.freq.empty()) {
    try {
      table = ps::load_frequency_table(a.freq, freq_format);
    } catch (const std::exception& e) {
      throw DataError(std::string("frequency table: ") + e.what());
    }
  }

  auto ingested = ps::ingest_events(read_all(a.logs), spec);
  int errors = 0;
  for (const auto& d : ingested.diagnostics) {
    errors += d.severity == ps::Severity::error;
    std::cerr << ps::to_string(d.severity);
    if (d.line) std::cerr << " line " << *d.line;
    if (d.participant_id) std::cerr << " [" << *d.participant_id << "]";
    std::cerr << ": " << d.message << '\n';
  }
  if (errors > 0 && a.strict) {
    std::cerr << errors << " ingestion error(s); aborting (--strict)\n";
    return kExitData;
  }

  auto report = ps::run_pipeline(ingested.dataset, spec, config, table ? &*table : nullptr);
  report.diagnostics.insert(report.diagnostics.begin(), ingested.diagnostics.begin(), ingested.diagnostics.end());

  ps::emit_report(std::cout, report, emit);

  if (!a.out_dir.empty()) {
    std::filesystem::create_directories(a.out_dir);
    auto dump = [&](const std::string& name, ps::EmitOptions o) {
      std::ofstream f(std::filesystem::path(a.out_dir) / name);
      if (!f) throw DataError("cannot write into '" + a.out_dir + "'");
      ps::emit_report(f, report, o);
    };
    ps::EmitOptions o = emit;
    o.format = ps::ReportFormat::json;
    dump("report.json", o);
    o.format = ps::ReportFormat::human;
    dump("report.txt", o);
    o.format = ps::ReportFormat::csv;
    for (auto [t, name] : {std::pair{ps::ReportTable::clusters, "clusters.csv"},
                           std::pair{ps::ReportTable::groups, "groups.csv"},
                           std::pair{ps::ReportTable::accounts, "accounts.csv"}}) {
      o.table = t;
      dump(name, o);
    }
  }
  if (!a.no_store) {
    const auto store = a.store.empty() ? ps::default_store_dir() : a.store;
    std::cerr << "run id: " << ps::persist_run(report, store) << '\n';
  }
  return kExitOk;
}

// ---------------------------------------------------------------------------

struct SimulateArgs {
  std::string preset;
  std::string spec;
  std::optional<std::uint64_t> seed;
  std::string out = "-";
  std::string freq_out;
  std::string truth_out;
};

int run_simulate(const SimulateArgs& a) {
  if (a.preset.empty() == a.spec.empty()) throw UsageError("give exactly one of --preset or --spec");
  ps::Preset preset;
  try {
    preset = a.preset.empty() ? ps::load_preset_file(a.spec) : ps::load_preset(a.preset);
  } catch (const std::invalid_argument& e) {
    if (!a.preset.empty()) throw UsageError(e.what());
    throw DataError(e.what());
  } catch (const std::runtime_error& e) {
    throw DataError(e.what());
  } catch (const ps::Json::exception& e) {
    throw DataError(std::string("preset: ") + e.what());
  }
  if (a.seed) preset.population.seed = *a.seed;
  const auto study = ps::generate(preset.population, preset.study);
  write_text(a.out, study.log);
  if (!a.freq_out.empty()) {
    std::ostringstream ss;
    study.frequency_table.write(ss);
    write_text(a.freq_out, ss.str());
  }
  if (!a.truth_out.empty()) write_text(a.truth_out, ps::truth_to_json(study.truth).dump(2) + "\n");
  return kExitOk;
}

// ---------------------------------------------------------------------------

int run_report(const std::string& run_id, const std::string& store, const std::string& format,
               const std::string& table, const std::string& sort, bool descending) {
  ps::EmitOptions emit;
  usage_guard([&] {
    emit.format = ps::parse_report_format(format);
    emit.table = ps::parse_report_table(table);
    emit.sort = ps::parse_cluster_sort(sort);
    return 0;
  });
  emit.descending = descending;
  ps::DetectionReport report;
  try {
    report = ps::load_run(run_id, store.empty() ? ps::default_store_dir() : store);
  } catch (const std::invalid_argument& e) {
    throw DataError(e.what());
  }
  ps::emit_report(std::cout, report, emit);
  return kExitOk;
}

int run_evaluate(const std::string& report_path, const std::string& run_id, const std::string& store,
                 const std::string& truth_path) {
  if (report_path.empty() == run_id.empty()) throw UsageError("give exactly one of --report or --run");
  ps::DetectionReport report;
  try {
    report = run_id.empty() ? read_json(report_path).get<ps::DetectionReport>()
                            : ps::load_run(run_id, store.empty() ? ps::default_store_dir() : store);
  } catch (const ps::Json::exception& e) {
    throw DataError(std::string("report: ") + e.what());
  } catch (const std::invalid_argument& e) {
    throw DataError(e.what());
  }
  const auto truth = ps::truth_from_json(read_json(truth_path));
  std::vector<std::vector<std::string>> groups;
  for (const auto& c : report.clusters) groups.push_back(c.members);
  try {
    const ps::Json out{{"labels", ps::metrics_to_json(ps::evaluate(ps::predicted_labels(report), truth))},
                       {"pairs", ps::pairwise_to_json(ps::evaluate_pairs(groups, truth))}};
    std::cout << out.dump(2) << '\n';
  } catch (const std::domain_error& e) {
    throw DataError(e.what());
  }
  return kExitOk;
}

int run_features(const std::string& logs, const std::string& spec_path, const std::string& preset,
                 const std::string& out) {
  const auto spec = load_spec(spec_path, preset);
  const auto ingested = ps::ingest_events(read_all(logs), spec);
  const auto features = ps::extract_all_features(ingested.dataset);
  std::ostringstream ss;
  ps::write_features_csv(ss, features);
  write_text(out, ss.str());
  return kExitOk;
}

// ---------------------------------------------------------------------------

int run_birthday(std::int64_t n, std::int64_t m) {
  if (n < 0 || m < 1) throw UsageError("need n >= 0 and m >= 1");
  const double exact = ps::birthday_collision_prob(n, m);
  std::cout << std::setprecision(6);
  std::cout << "P(any two of " << n << " draws from " << m << " coincide) = " << exact << '\n';
  if (n == 181 && m == 10000) {
    std::cout << "reported figure for this setting       = " << kReportedPinCollisionProb << '\n'
              << "ratio exact / reported                 = " << exact / kReportedPinCollisionProb << '\n'
              << "note: the reported figure is far below the standard birthday probability;\n"
                 "      it is shown for comparison only and is not used by any detector.\n";
  }
  return kExitOk;
}

int run_tail(std::int64_t n, std::int64_t k, double p) {
  const auto tail = usage_guard([&] {
    try {
      return ps::binomial_tail(n, k, p);
    } catch (const std::domain_error& e) {
      throw std::invalid_argument(e.what());
    }
  });
  const double ln = static_cast<double>(tail.log());
  std::cout << std::setprecision(17) << "ln P(X >= " << k << ") = " << ln << '\n'
            << "log10           = " << tail.log10() << '\n'
            << "P(X >= k)       = " << ps::format_log_probability(ln, 6) << '\n';
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"puppetscan: puppet-account and bot detection for crowdsourced study data"};
  app.set_version_flag("--version", std::string(ps::library_version()));
  app.require_subcommand(1);

  // analyze
  AnalyzeArgs an;
  auto* analyze = app.add_subcommand("analyze", "Ingest an event log and run the detector pipeline");
  analyze->add_option("--logs", an.logs, "Event log file, or - for stdin")->capture_default_str();
  analyze->add_option("--spec", an.spec, "Study spec (JSON; a preset file also works)");
  analyze->add_option("--preset", an.preset, "Use the study spec of a named preset");
  analyze->add_option("--config", an.config, "Detector config overlay (JSON)");
  analyze->add_option("--freq", an.freq, "Leaked-secret frequency table");
  analyze->add_option("--freq-format", an.freq_format, "auto, hashed or plaintext")->capture_default_str();
  analyze->add_option("--out", an.out_dir, "Also write report.json/txt and CSV tables here");
  analyze->add_option("--format", an.format, "human, csv or json")->capture_default_str();
  analyze->add_option("--table", an.table, "CSV table: clusters, groups or accounts")->capture_default_str();
  analyze->add_option("--sort", an.sort, "Cluster order: tail, k or members")->capture_default_str();
  analyze->add_flag("--desc", an.descending, "Reverse the cluster order");
  analyze->add_option("--store", an.store, "Run store directory (default $PUPPETSCAN_STORE)");
  analyze->add_flag("--no-store", an.no_store, "Do not persist the run");
  analyze->add_flag("--strict", an.strict, "Exit 2 when ingestion reports errors");

  // simulate
  SimulateArgs sim;
  auto* simulate = app.add_subcommand("simulate", "Generate a labeled synthetic event log");
  simulate->add_option("--preset", sim.preset, "Preset name (study1, study2, ...)");
  simulate->add_option("--spec", sim.spec, "Preset file with study and population");
  simulate->add_option("--seed", sim.seed, "Override the population seed");
  simulate->add_option("--out", sim.out, "Output log, or - for stdout")->capture_default_str();
  simulate->add_option("--freq-out", sim.freq_out, "Write the planted frequency table");
  simulate->add_option("--truth-out", sim.truth_out, "Write ground-truth labels (JSON)");

  // report
  std::string run_id, store, rformat = "human", rtable = "clusters", rsort = "tail";
  bool rdesc = false;
  auto* report = app.add_subcommand("report", "Re-emit a persisted run");
  report->add_option("--run", run_id, "Run id printed by analyze")->required();
  report->add_option("--store", store, "Run store directory");
  report->add_option("--format", rformat, "human, csv or json")->capture_default_str();
  report->add_option("--table", rtable, "CSV table: clusters, groups or accounts")->capture_default_str();
  report->add_option("--sort", rsort, "Cluster order: tail, k or members")->capture_default_str();
  report->add_flag("--desc", rdesc, "Reverse the cluster order");

  // evaluate
  std::string ev_report, ev_run, ev_store, ev_truth;
  auto* evaluate = app.add_subcommand("evaluate", "Score a report against ground truth");
  evaluate->add_option("--report", ev_report, "Report JSON file");
  evaluate->add_option("--run", ev_run, "Persisted run id");
  evaluate->add_option("--store", ev_store, "Run store directory");
  evaluate->add_option("--truth", ev_truth, "Ground truth written by simulate --truth-out")->required();

  // features
  std::string f_logs = "-", f_spec, f_preset, f_out = "-";
  auto* features = app.add_subcommand("features", "Export per-account behavioral features as CSV");
  features->add_option("--logs", f_logs, "Event log file, or - for stdin")->capture_default_str();
  features->add_option("--spec", f_spec, "Study spec");
  features->add_option("--preset", f_preset, "Use the study spec of a named preset");
  features->add_option("--out", f_out, "CSV output, or - for stdout")->capture_default_str();

  // diagnose
  auto* diagnose = app.add_subcommand("diagnose", "Probability calculators");
  diagnose->require_subcommand(1);
  std::int64_t bn = 181, bm = 10000;
  auto* birthday = diagnose->add_subcommand("birthday", "Chance that two of n uniform draws from m coincide");
  birthday->add_option("--n", bn, "Participants")->capture_default_str();
  birthday->add_option("--m", bm, "Space size")->capture_default_str();
  std::int64_t tn = 0, tk = 0;
  double tp = 0.0;
  auto* tail = diagnose->add_subcommand("tail", "Binomial upper tail P(X >= k)");
  tail->add_option("--n", tn, "Trials")->required();
  tail->add_option("--k", tk, "Threshold")->required();
  tail->add_option("--p", tp, "Per-trial probability")->required();

  // challenge
  auto* challenge = app.add_subcommand("challenge", "Generate or score countermeasure challenges");
  challenge->require_subcommand(1);
  std::optional<std::uint64_t> cseed;
  std::string cparticipant, csalt;
  auto seed_opts = [&](CLI::App* c) {
    c->add_option("--seed", cseed, "Explicit seed");
    c->add_option("--participant", cparticipant, "Participant id (with --salt)");
    c->add_option("--salt", csalt, "Study salt (with --participant)");
  };

  std::string qid = "q", qspec;
  std::vector<std::string> qoptions;
  auto* shuffle = challenge->add_subcommand("shuffle", "Per-participant option order");
  shuffle->add_option("--question", qid, "Question id")->capture_default_str();
  shuffle->add_option("--options", qoptions, "Option labels in canonical order")->delimiter(',');
  shuffle->add_option("--spec", qspec, "Take the question's options from this study spec");
  seed_opts(shuffle);

  std::string tmpl_path, ctx_answer;
  auto* context = challenge->add_subcommand("context", "Instantiate a randomized-context question");
  context->add_option("--template", tmpl_path, "Context template (JSON)")->required();
  context->add_option("--answer", ctx_answer, "Score this answer against the key");
  seed_opts(context);

  int reps = 4;
  ps::CueingOptions cue;
  auto* cueing = challenge->add_subcommand("cueing", "Contextual-cueing trial set");
  cueing->add_option("--reps", reps, "Repetitions of the fixed layout (4..6)")->capture_default_str();
  cueing->add_option("--grid", cue.grid_size, "Grid edge length")->capture_default_str();
  cueing->add_option("--distractors", cue.distractors, "Distractor count")->capture_default_str();
  cueing->add_option("--novel", cue.novel_per_repetition, "Novel layouts after each repetition")
      ->capture_default_str();
  seed_opts(cueing);

  std::vector<double> times;
  ps::LearningCurveConfig lc;
  auto* score = challenge->add_subcommand("score", "Classify a cueing learning curve");
  score->add_option("--times", times, "Search times in ms, one per repetition")->delimiter(',')->required();
  score->add_option("--slope-threshold", lc.slope_threshold)->capture_default_str();
  score->add_option("--fast-floor", lc.fast_floor_ms)->capture_default_str();
  score->add_option("--machine-floor", lc.machine_floor_ms)->capture_default_str();

  std::string img_text, img_out;
  ps::TextImageStyle style;
  auto* image = challenge->add_subcommand("image", "Render text as a PNG");
  image->add_option("--text", img_text, "Printable ASCII text")->required();
  image->add_option("--out", img_out, "PNG path")->required();
  image->add_option("--scale", style.scale, "Pixel scale")->capture_default_str();
  image->add_option("--margin", style.margin, "Margin in glyph pixels")->capture_default_str();
  image->add_option("--jitter", style.jitter, "Background noise probability")->capture_default_str();
  image->add_option("--noise-seed", style.seed, "Seed for the noise")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (*analyze) return run_analyze(an);
    if (*simulate) return run_simulate(sim);
    if (*report) return run_report(run_id, store, rformat, rtable, rsort, rdesc);
    if (*evaluate) return run_evaluate(ev_report, ev_run, ev_store, ev_truth);
    if (*features) return run_features(f_logs, f_spec, f_preset, f_out);
    if (*birthday) return run_birthday(bn, bm);
    if (*tail) return run_tail(tn, tk, tp);

    if (*shuffle) {
      ps::QuestionSpec q{qid, qoptions};
      if (!qspec.empty()) {
        const auto spec = load_spec(qspec, "");
        const auto* found = spec.find_question(qid);
        if (found == nullptr) throw DataError("question '" + qid + "' not in " + qspec);
        q = *found;
      }
      const auto seed = seed_from(cseed, cparticipant, csalt);
      const auto sq = usage_guard([&] {
        try {
          return ps::shuffle_options(q, seed);
        } catch (const std::domain_error& e) {
          throw std::invalid_argument(e.what());
        }
      });
      std::cout << ps::Json{{"question_id", sq.question_id},
                            {"permutation", sq.permutation},
                            {"shown_options", sq.shown_options},
                            {"seed", sq.seed_used}}
                       .dump(2)
                << '\n';
      return kExitOk;
    }
    if (*context) {
      ps::ContextTemplate tmpl;
      try {
        tmpl = ps::parse_context_template(read_json(tmpl_path));
      } catch (const std::invalid_argument& e) {
        throw DataError(e.what());
      }
      const auto q = ps::instantiate_context(tmpl, seed_from(cseed, cparticipant, csalt));
      // The answer key stays server-side unless an answer is being scored.
      ps::Json out{{"template_id", q.template_id}, {"text", q.text}};
      if (context->count("--answer") > 0) out["correct"] = ps::check_context_answer(q, ctx_answer);
      std::cout << out.dump(2) << '\n';
      return kExitOk;
    }
    if (*cueing) {
      const auto set = usage_guard([&] {
        try {
          return ps::generate_cueing_trials(seed_from(cseed, cparticipant, csalt), reps, cue);
        } catch (const std::domain_error& e) {
          throw std::invalid_argument(e.what());
        }
      });
      std::cout << ps::to_json(set).dump(2) << '\n';
      return kExitOk;
    }
    if (*score) {
      const auto verdict = usage_guard([&] {
        try {
          return ps::score_learning_curve(times, lc);
        } catch (const std::domain_error& e) {
          throw std::invalid_argument(e.what());
        }
      });
      std::cout << ps::Json{{"verdict", std::string(ps::to_string(verdict))},
                            {"log_slope", ps::log_time_slope(times)}}
                       .dump(2)
                << '\n';
      return kExitOk;
    }
    if (*image) {
      const auto raster = usage_guard([&] { return ps::render_text_image(img_text, style); });
      ps::write_png(raster, img_out);
      std::cout << img_out << ": " << raster.width << "x" << raster.height << '\n';
      return kExitOk;
    }
  } catch (const UsageError& e) {
    std::cerr << "usage error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const DataError& e) {
    std::cerr << "data error: " << e.what() << '\n';
    return kExitData;
  } catch (const std::invalid_argument& e) {
    std::cerr << "data error: " << e.what() << '\n';
    return kExitData;
  } catch (const std::domain_error& e) {
    std::cerr << "data error: " << e.what() << '\n';
    return kExitData;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << '\n';
    return kExitInternal;
  }
  return kExitUsage;
}
