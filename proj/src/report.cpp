#include "puppetscan/report.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <limits>
#include <ostream>
#include <set>
#include <sstream>
#include <stdexcept>
#include <unordered_map>

#include "puppetscan/disjoint_set.hpp"
#include "puppetscan/hashing.hpp"
#include "puppetscan/ingest.hpp"

#ifndef PUPPETSCAN_VERSION
#define PUPPETSCAN_VERSION "0.0.0"
#endif

namespace puppetscan {

std::string_view library_version() { return PUPPETSCAN_VERSION; }

std::vector<std::string_view> known_detectors() {
  return {detector::secret_collision, detector::pin_collision, detector::machine_token, detector::behavioral,
          detector::attention,        detector::timing,        detector::answer_pattern, detector::freeform};
}

const AccountRow* DetectionReport::find_account(std::string_view id) const {
  for (const auto& a : accounts)
    if (a.participant_id == id) return &a;
  return nullptr;
}

namespace {

struct Source {
  PuppetCluster cluster;
  bool counts = true;
};

void add_diag(std::vector<Diagnostic>& out, Severity s, std::string message) {
  out.push_back(Diagnostic{s, std::nullopt, std::nullopt, std::move(message)});
}

}  // namespace

DetectionReport run_pipeline(const Dataset& dataset, const StudySpec& spec, const DetectorConfig& config,
                             const FrequencyTable* frequencies) {
  DetectionReport r;
  r.version = std::string(library_version());
  r.dataset_digest = dataset_digest(dataset);
  r.config = config;

  const auto known = known_detectors();
  for (const auto& name : config.disabled_detectors) {
    if (std::find(known.begin(), known.end(), name) == known.end())
      add_diag(r.diagnostics, Severity::warning, "unknown detector '" + name + "' in disabled_detectors");
    else
      add_diag(r.diagnostics, Severity::warning, "detector '" + name + "' disabled by configuration");
  }

  std::unordered_map<std::string, const ParticipantRecord*> by_id;
  for (const auto& rec : dataset) by_id.emplace(rec.participant_id, &rec);

  // Puppet evidence from every enabled detector.
  std::vector<Source> sources;
  const FrequencyTable fallback;
  const FrequencyTable& table = frequencies != nullptr ? *frequencies : fallback;
  r.frequency_total = table.total();
  r.frequency_table_loaded = frequencies != nullptr;
  const bool any_password = std::any_of(dataset.begin(), dataset.end(),
                                        [](const auto& rec) { return rec.secret_kind == SecretKind::password; });
  if (config.enabled(detector::secret_collision)) {
    if (frequencies == nullptr && any_password)
      add_diag(r.diagnostics, Severity::warning,
               "no frequency table supplied; every password scored as unseen (p = 1/" +
                   std::to_string(table.total()) + ")");
    for (auto& c : detect_secret_collisions(dataset, table, config)) sources.push_back({std::move(c), true});
  }
  if (config.enabled(detector::pin_collision))
    for (auto& c : detect_pin_collisions(dataset, spec)) sources.push_back({std::move(c), true});
  if (config.enabled(detector::machine_token))
    for (auto& c : group_by_machine_token(dataset)) sources.push_back({std::move(c), true});

  if (config.enabled(detector::behavioral) && !dataset.empty()) {
    const auto features = extract_all_features(dataset);
    try {
      r.behavioral = cluster_behaviors(features, config.clustering_distance_threshold);
    } catch (const std::domain_error& e) {
      add_diag(r.diagnostics, Severity::warning, std::string("behavioral clustering skipped: ") + e.what());
    }
    for (const auto& g : r.behavioral.groups) {
      PuppetCluster c;
      c.members = g;
      c.evidence = Evidence::behavioral;
      sources.push_back({std::move(c), config.behavioral_counts_as_puppet});
    }
  }

  // Union clusters that share members. Non-counting sources only annotate.
  std::vector<std::string> ids;
  std::unordered_map<std::string, std::size_t> index;
  for (const auto& s : sources)
    if (s.counts)
      for (const auto& m : s.cluster.members)
        if (index.emplace(m, ids.size()).second) ids.push_back(m);
  DisjointSet dsu(ids.size());
  for (const auto& s : sources) {
    if (!s.counts || s.cluster.members.size() < static_cast<std::size_t>(config.min_cluster_size)) continue;
    for (std::size_t i = 1; i < s.cluster.members.size(); ++i)
      dsu.unite(index.at(s.cluster.members[0]), index.at(s.cluster.members[i]));
  }

  std::map<std::size_t, ReportCluster> merged;
  for (const auto& s : sources) {
    if (!s.counts || s.cluster.members.size() < static_cast<std::size_t>(config.min_cluster_size)) continue;
    auto& rc = merged[dsu.find(index.at(s.cluster.members[0]))];
    rc.members.insert(rc.members.end(), s.cluster.members.begin(), s.cluster.members.end());
    rc.evidence.push_back(s.cluster.evidence);
    if (s.cluster.p && (!rc.p || *s.cluster.p < *rc.p)) rc.p = s.cluster.p;
    if (s.cluster.tail_prob) {
      const auto ln = static_cast<double>(s.cluster.tail_prob->log());
      if (!rc.ln_tail || ln < *rc.ln_tail) rc.ln_tail = ln;
    }
    if (s.cluster.group_id) rc.group_id = s.cluster.group_id;
    if (s.cluster.artifact) rc.artifacts.push_back(*s.cluster.artifact);
  }

  std::vector<ReportCluster> clusters;
  for (auto& [_, rc] : merged) {
    std::sort(rc.members.begin(), rc.members.end());
    rc.members.erase(std::unique(rc.members.begin(), rc.members.end()), rc.members.end());
    std::sort(rc.artifacts.begin(), rc.artifacts.end());
    rc.artifacts.erase(std::unique(rc.artifacts.begin(), rc.artifacts.end()), rc.artifacts.end());
    if (!rc.group_id) {
      std::set<std::string> gs;
      for (const auto& m : rc.members) gs.insert(by_id.at(m)->group_id);
      if (gs.size() == 1) rc.group_id = *gs.begin();
    }
    clusters.push_back(std::move(rc));
  }

  // Behavioral groups that overlap a counted cluster are recorded on it as evidence.
  for (const auto& s : sources) {
    if (s.counts) continue;
    for (auto& rc : clusters) {
      const bool overlaps = std::any_of(s.cluster.members.begin(), s.cluster.members.end(), [&](const auto& m) {
        return std::binary_search(rc.members.begin(), rc.members.end(), m);
      });
      if (overlaps) rc.evidence.push_back(s.cluster.evidence);
    }
  }

  for (auto& rc : clusters) {
    std::sort(rc.evidence.begin(), rc.evidence.end());
    rc.evidence.erase(std::unique(rc.evidence.begin(), rc.evidence.end()), rc.evidence.end());
    std::vector<const ParticipantRecord*> recs;
    for (const auto& m : rc.members) recs.push_back(by_id.at(m));
    rc.signals = compute_signals(recs);
    rc.verdict = bot_likelihood(rc.signals);
  }
  std::sort(clusters.begin(), clusters.end(), [](const ReportCluster& a, const ReportCluster& b) {
    const double ta = a.ln_tail.value_or(std::numeric_limits<double>::infinity());
    const double tb = b.ln_tail.value_or(std::numeric_limits<double>::infinity());
    if (ta != tb) return ta < tb;
    if (a.k() != b.k()) return a.k() > b.k();
    return a.members < b.members;
  });
  for (std::size_t i = 0; i < clusters.size(); ++i) clusters[i].id = "C" + std::to_string(i + 1);
  std::unordered_map<std::string, std::string> cluster_of;
  for (const auto& rc : clusters)
    for (const auto& m : rc.members) cluster_of.emplace(m, rc.id);
  r.clusters = std::move(clusters);

  // Per-account indicators.
  const bool check_attention = config.enabled(detector::attention) && !spec.attention_checks.empty();
  if (config.enabled(detector::attention) && spec.attention_checks.empty())
    add_diag(r.diagnostics, Severity::info, "study declares no attention checks; nobody is marked inattentive");
  std::map<std::string, FreeformFlags> freeform;
  if (config.enabled(detector::freeform)) freeform = score_freeform(dataset, config.stub_lexicon);

  for (const auto& rec : dataset) {
    AccountRow row;
    row.participant_id = rec.participant_id;
    row.group_id = rec.group_id;
    if (check_attention) row.attention_pass = evaluate_attention(rec, spec) == AttentionResult::pass;
    if (config.enabled(detector::timing)) {
      const auto prof = timing_profile(rec);
      if (prof) {
        row.response_mean_ms = prof->mean_ms;
        row.response_cv = prof->cv;
      }
      row.timing_flag = flag_timing(prof, config);
    }
    if (config.enabled(detector::answer_pattern)) {
      const auto seq = shown_positions_in_order(rec, spec);
      row.pattern = detect_answer_pattern(seq);
    }
    if (const auto it = freeform.find(rec.participant_id); it != freeform.end()) row.freeform = it->second;
    if (const auto it = cluster_of.find(rec.participant_id); it != cluster_of.end()) row.cluster_id = it->second;

    if (row.cluster_id) row.label = LabelClass::puppet;
    else if (row.attention_pass && !*row.attention_pass) row.label = LabelClass::inattentive;
    else row.label = LabelClass::valid;
    r.accounts.push_back(std::move(row));
  }

  // Group summary: spec order, then undeclared groups, then the overall row.
  std::vector<std::string> order;
  for (const auto& g : spec.groups) order.push_back(g.id);
  std::set<std::string> extra;
  for (const auto& a : r.accounts)
    if (std::find(order.begin(), order.end(), a.group_id) == order.end()) extra.insert(a.group_id);
  order.insert(order.end(), extra.begin(), extra.end());
  std::map<std::string, GroupRow> rows;
  GroupRow all;
  all.group_id = "all";
  for (const auto& a : r.accounts) {
    auto& g = rows[a.group_id];
    for (GroupRow* row : {&g, &all}) {
      ++row->total;
      switch (a.label) {
        case LabelClass::puppet: ++row->puppets; break;
        case LabelClass::inattentive: ++row->inattentive; break;
        default: ++row->valid; break;
      }
    }
  }
  for (const auto& id : order) {
    GroupRow g = rows[id];
    g.group_id = id;
    r.groups.push_back(g);
  }
  r.groups.push_back(all);
  return r;
}

std::map<std::string, LabelClass> predicted_labels(const DetectionReport& report) {
  std::map<std::string, LabelClass> out;
  for (const auto& a : report.accounts) out.emplace(a.participant_id, a.label);
  return out;
}

// ---------------------------------------------------------------------------
// JSON

namespace {

Json signals_json(const SignalVector& s) {
  return {{"identical_search_term", s.identical_search_term},
          {"no_search", s.no_search},
          {"identical_scrolling", s.identical_scrolling},
          {"no_scrolling", s.no_scrolling},
          {"default_first_item_only", s.default_first_item_only},
          {"identical_patterns", s.identical_patterns},
          {"no_incorrect_login_attempts", s.no_incorrect_login_attempts}};
}

SignalVector signals_from(const Json& j) {
  SignalVector s;
  s.identical_search_term = j.at("identical_search_term").get<bool>();
  s.no_search = j.at("no_search").get<bool>();
  s.identical_scrolling = j.at("identical_scrolling").get<bool>();
  s.no_scrolling = j.at("no_scrolling").get<bool>();
  s.default_first_item_only = j.at("default_first_item_only").get<bool>();
  s.identical_patterns = j.at("identical_patterns").get<bool>();
  s.no_incorrect_login_attempts = j.at("no_incorrect_login_attempts").get<bool>();
  return s;
}

BotVerdict parse_verdict(std::string_view s) {
  if (s == "human_likely") return BotVerdict::human_likely;
  if (s == "ambiguous") return BotVerdict::ambiguous;
  if (s == "bot_suspect") return BotVerdict::bot_suspect;
  throw std::invalid_argument("unknown verdict '" + std::string(s) + "'");
}

std::string_view pattern_name(PatternKind k) {
  switch (k) {
    case PatternKind::none: return "none";
    case PatternKind::constant: return "constant";
    case PatternKind::alternating: return "alternating";
    case PatternKind::custom_period: return "custom_period";
  }
  return "none";
}

PatternKind parse_pattern(std::string_view s) {
  if (s == "none") return PatternKind::none;
  if (s == "constant") return PatternKind::constant;
  if (s == "alternating") return PatternKind::alternating;
  if (s == "custom_period") return PatternKind::custom_period;
  throw std::invalid_argument("unknown answer pattern '" + std::string(s) + "'");
}

template <typename T>
Json opt(const std::optional<T>& v) {
  return v ? Json(*v) : Json(nullptr);
}

template <typename T>
std::optional<T> get_opt(const Json& j, const char* key) {
  if (!j.contains(key) || j.at(key).is_null()) return std::nullopt;
  return j.at(key).get<T>();
}

// JSON has no infinity; an impossible tail is written as a string.
Json ln_json(const std::optional<double>& ln) {
  if (!ln) return nullptr;
  if (std::isinf(*ln)) return "-inf";
  return *ln;
}

std::optional<double> ln_from(const Json& j) {
  if (j.is_null()) return std::nullopt;
  if (j.is_string()) {
    if (j.get<std::string>() == "-inf") return -std::numeric_limits<double>::infinity();
    throw std::invalid_argument("bad ln_tail value");
  }
  return j.get<double>();
}

Json clusters_json(const std::vector<ReportCluster>& cs) {
  Json clusters = Json::array();
  for (const auto& c : cs) {
    Json ev = Json::array();
    for (auto e : c.evidence) ev.push_back(std::string(to_string(e)));
    clusters.push_back({{"id", c.id},
                        {"k", c.k()},
                        {"members", c.members},
                        {"evidence", ev},
                        {"p", opt(c.p)},
                        {"ln_tail", ln_json(c.ln_tail)},
                        {"tail", c.ln_tail ? Json(format_log_probability(*c.ln_tail)) : Json(nullptr)},
                        {"group_id", opt(c.group_id)},
                        {"artifacts", c.artifacts},
                        {"signals", signals_json(c.signals)},
                        {"signal_count", c.signals.count()},
                        {"verdict", std::string(to_string(c.verdict))}});
  }
  return clusters;
}

}  // namespace

void to_json(Json& j, const DetectionReport& r) {
  Json groups = Json::array();
  for (const auto& g : r.groups)
    groups.push_back({{"group_id", g.group_id},
                      {"total", g.total},
                      {"puppets", g.puppets},
                      {"inattentive", g.inattentive},
                      {"valid", g.valid},
                      {"puppet_pct", g.percent(g.puppets)},
                      {"inattentive_pct", g.percent(g.inattentive)},
                      {"valid_pct", g.percent(g.valid)}});
  const Json clusters = clusters_json(r.clusters);
  Json accounts = Json::array();
  for (const auto& a : r.accounts)
    accounts.push_back({{"participant_id", a.participant_id},
                        {"group_id", a.group_id},
                        {"label", std::string(to_string(a.label))},
                        {"attention_pass", opt(a.attention_pass)},
                        {"timing_flag", a.timing_flag},
                        {"response_mean_ms", opt(a.response_mean_ms)},
                        {"response_cv", opt(a.response_cv)},
                        {"pattern", {{"kind", std::string(pattern_name(a.pattern.kind))}, {"period", a.pattern.period}}},
                        {"freeform",
                         {{"one_word", a.freeform.one_word},
                          {"irrelevant_stub", a.freeform.irrelevant_stub},
                          {"duplicate_of", a.freeform.duplicate_of}}},
                        {"cluster_id", opt(a.cluster_id)}});
  j = Json{{"version", r.version},
           {"dataset_digest", r.dataset_digest},
           {"config", r.config},
           {"frequency_total", r.frequency_total},
           {"frequency_table_loaded", r.frequency_table_loaded},
           {"groups", groups},
           {"clusters", clusters},
           {"behavioral",
            {{"distance_threshold", r.behavioral.distance_threshold},
             {"groups", r.behavioral.groups},
             {"linkage_distances", r.behavioral.linkage_distances}}},
           {"accounts", accounts},
           {"diagnostics", r.diagnostics}};
}

void from_json(const Json& j, DetectionReport& r) {
  r = DetectionReport{};
  r.version = j.at("version").get<std::string>();
  r.dataset_digest = j.at("dataset_digest").get<std::string>();
  r.config = j.at("config").get<DetectorConfig>();
  r.frequency_total = j.at("frequency_total").get<std::uint64_t>();
  r.frequency_table_loaded = j.at("frequency_table_loaded").get<bool>();
  for (const auto& g : j.at("groups"))
    r.groups.push_back({g.at("group_id").get<std::string>(), g.at("total").get<int>(), g.at("puppets").get<int>(),
                        g.at("inattentive").get<int>(), g.at("valid").get<int>()});
  for (const auto& c : j.at("clusters")) {
    ReportCluster rc;
    rc.id = c.at("id").get<std::string>();
    rc.members = c.at("members").get<std::vector<std::string>>();
    for (const auto& e : c.at("evidence")) rc.evidence.push_back(parse_evidence(e.get<std::string>()));
    rc.p = get_opt<double>(c, "p");
    rc.ln_tail = ln_from(c.at("ln_tail"));
    rc.group_id = get_opt<std::string>(c, "group_id");
    rc.artifacts = c.at("artifacts").get<std::vector<std::string>>();
    rc.signals = signals_from(c.at("signals"));
    rc.verdict = parse_verdict(c.at("verdict").get<std::string>());
    r.clusters.push_back(std::move(rc));
  }
  const auto& b = j.at("behavioral");
  r.behavioral.distance_threshold = b.at("distance_threshold").get<double>();
  r.behavioral.groups = b.at("groups").get<std::vector<std::vector<std::string>>>();
  r.behavioral.linkage_distances = b.at("linkage_distances").get<std::vector<double>>();
  for (const auto& a : j.at("accounts")) {
    AccountRow row;
    row.participant_id = a.at("participant_id").get<std::string>();
    row.group_id = a.at("group_id").get<std::string>();
    row.label = parse_label_class(a.at("label").get<std::string>());
    row.attention_pass = get_opt<bool>(a, "attention_pass");
    row.timing_flag = a.at("timing_flag").get<bool>();
    row.response_mean_ms = get_opt<double>(a, "response_mean_ms");
    row.response_cv = get_opt<double>(a, "response_cv");
    row.pattern.kind = parse_pattern(a.at("pattern").at("kind").get<std::string>());
    row.pattern.period = a.at("pattern").at("period").get<int>();
    const auto& f = a.at("freeform");
    row.freeform.one_word = f.at("one_word").get<bool>();
    row.freeform.irrelevant_stub = f.at("irrelevant_stub").get<bool>();
    row.freeform.duplicate_of = f.at("duplicate_of").get<std::vector<std::string>>();
    row.cluster_id = get_opt<std::string>(a, "cluster_id");
    r.accounts.push_back(std::move(row));
  }
  r.diagnostics = j.at("diagnostics").get<std::vector<Diagnostic>>();
}

// ---------------------------------------------------------------------------
// Output

ReportFormat parse_report_format(std::string_view s) {
  if (s == "human") return ReportFormat::human;
  if (s == "csv") return ReportFormat::csv;
  if (s == "json") return ReportFormat::json;
  throw std::invalid_argument("unknown format '" + std::string(s) + "' (human, csv, json)");
}

ReportTable parse_report_table(std::string_view s) {
  if (s == "clusters") return ReportTable::clusters;
  if (s == "groups") return ReportTable::groups;
  if (s == "accounts") return ReportTable::accounts;
  throw std::invalid_argument("unknown table '" + std::string(s) + "' (clusters, groups, accounts)");
}

ClusterSort parse_cluster_sort(std::string_view s) {
  if (s == "tail") return ClusterSort::tail;
  if (s == "k") return ClusterSort::k;
  if (s == "members") return ClusterSort::members;
  throw std::invalid_argument("unknown sort key '" + std::string(s) + "' (tail, k, members)");
}

std::vector<ReportCluster> sorted_clusters(const DetectionReport& report, ClusterSort sort, bool descending) {
  auto out = report.clusters;
  auto key_less = [sort](const ReportCluster& a, const ReportCluster& b) {
    switch (sort) {
      case ClusterSort::tail:
        if (a.ln_tail.has_value() != b.ln_tail.has_value()) return false;
        if (a.ln_tail && *a.ln_tail != *b.ln_tail) return *a.ln_tail < *b.ln_tail;
        return false;
      case ClusterSort::k: return a.k() < b.k();
      case ClusterSort::members: return a.members < b.members;
    }
    return false;
  };
  std::stable_sort(out.begin(), out.end(), [&](const ReportCluster& a, const ReportCluster& b) {
    // Clusters without a tail always trail.
    if (sort == ClusterSort::tail && a.ln_tail.has_value() != b.ln_tail.has_value()) return a.ln_tail.has_value();
    return descending ? key_less(b, a) : key_less(a, b);
  });
  return out;
}

std::string format_log_probability(double ln_p, int digits) {
  if (std::isnan(ln_p)) return "nan";
  if (ln_p == -std::numeric_limits<double>::infinity()) return "0";
  const long double l10 = static_cast<long double>(ln_p) / std::log(10.0L);
  auto exponent = static_cast<long long>(std::floor(l10));
  long double mantissa = std::pow(10.0L, l10 - static_cast<long double>(exponent));
  const int decimals = std::max(0, digits - 1);
  const long double scale = std::pow(10.0L, decimals);
  mantissa = std::round(mantissa * scale) / scale;
  if (mantissa >= 10.0L) {
    mantissa /= 10.0L;
    ++exponent;
  }
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*Lfe%c%02lld", decimals, mantissa, exponent < 0 ? '-' : '+',
                exponent < 0 ? -exponent : exponent);
  return buf;
}

namespace {

std::string evidence_list(const ReportCluster& c, char sep) {
  std::string s;
  for (auto e : c.evidence) {
    if (!s.empty()) s += sep;
    s += to_string(e);
  }
  return s;
}

std::string join(const std::vector<std::string>& xs, char sep) {
  std::string s;
  for (const auto& x : xs) {
    if (!s.empty()) s += sep;
    s += x;
  }
  return s;
}

std::string fixed(double v, int decimals) {
  std::ostringstream os;
  os << std::fixed << std::setprecision(decimals) << v;
  return os.str();
}

std::string sci(double v) {
  std::ostringstream os;
  os << std::scientific << std::setprecision(2) << v;
  return os.str();
}

std::string count_pct(const GroupRow& g, int n) { return std::to_string(n) + " (" + fixed(g.percent(n), 1) + "%)"; }

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string q = "\"";
  for (char c : s) {
    if (c == '"') q += '"';
    q += c;
  }
  return q + '"';
}

void emit_human(std::ostream& out, const DetectionReport& r, const EmitOptions& o) {
  out << "puppetscan " << r.version << "  dataset sha256:" << r.dataset_digest << "\n\n";
  out << std::left << std::setw(12) << "group" << std::setw(8) << "total" << std::setw(16) << "puppets"
      << std::setw(16) << "inattentive" << "valid\n";
  for (const auto& g : r.groups)
    out << std::setw(12) << g.group_id << std::setw(8) << g.total << std::setw(16) << count_pct(g, g.puppets)
        << std::setw(16) << count_pct(g, g.inattentive) << count_pct(g, g.valid) << '\n';

  const auto clusters = sorted_clusters(r, o.sort, o.descending);
  out << "\npuppet clusters: " << clusters.size() << '\n';
  if (!clusters.empty()) {
    out << std::setw(6) << "id" << std::setw(5) << "k" << std::setw(11) << "p" << std::setw(12) << "tail"
        << std::setw(8) << "group" << std::setw(9) << "signals" << std::setw(14) << "verdict" << "evidence\n";
    for (const auto& c : clusters) {
      out << std::setw(6) << c.id << std::setw(5) << c.k() << std::setw(11) << (c.p ? sci(*c.p) : "-")
          << std::setw(12) << (c.ln_tail ? format_log_probability(*c.ln_tail) : "-") << std::setw(8)
          << c.group_id.value_or("-") << std::setw(9) << (std::to_string(c.signals.count()) + "/7") << std::setw(14)
          << to_string(c.verdict) << evidence_list(c, ',') << '\n';
    }
  }

  int timing = 0;
  int patterns = 0;
  int stubs = 0;
  for (const auto& a : r.accounts) {
    timing += a.timing_flag;
    patterns += a.pattern.kind != PatternKind::none;
    stubs += a.freeform.irrelevant_stub;
  }
  out << "\nbot indicators: timing " << timing << ", answer patterns " << patterns << ", stub free-form " << stubs
      << '\n';
  out << "behavioral proposals: " << r.behavioral.groups.size() << " (threshold "
      << fixed(r.behavioral.distance_threshold, 3) << ")\n";
  if (!r.diagnostics.empty()) {
    out << '\n';
    for (const auto& d : r.diagnostics) out << to_string(d.severity) << ": " << d.message << '\n';
  }
  out << std::right;
}

void emit_csv(std::ostream& out, const DetectionReport& r, const EmitOptions& o) {
  const auto old = out.precision(17);
  switch (o.table) {
    case ReportTable::clusters:
      out << "id,k,evidence,p,ln_tail,tail,group_id,signal_count,verdict,members\n";
      for (const auto& c : sorted_clusters(r, o.sort, o.descending)) {
        out << c.id << ',' << c.k() << ',' << evidence_list(c, ';') << ',';
        if (c.p) out << *c.p;
        out << ',';
        if (c.ln_tail) out << *c.ln_tail;
        out << ',' << (c.ln_tail ? format_log_probability(*c.ln_tail) : "") << ',' << csv_field(c.group_id.value_or(""))
            << ',' << c.signals.count() << ',' << to_string(c.verdict) << ',' << join(c.members, ';') << '\n';
      }
      break;
    case ReportTable::groups:
      out << "group_id,total,puppets,inattentive,valid,puppet_pct,inattentive_pct,valid_pct\n";
      for (const auto& g : r.groups)
        out << csv_field(g.group_id) << ',' << g.total << ',' << g.puppets << ',' << g.inattentive << ',' << g.valid
            << ',' << fixed(g.percent(g.puppets), 2) << ',' << fixed(g.percent(g.inattentive), 2) << ','
            << fixed(g.percent(g.valid), 2) << '\n';
      break;
    case ReportTable::accounts:
      out << "participant_id,group_id,label,attention_pass,timing_flag,response_mean_ms,response_cv,pattern,"
             "one_word,irrelevant_stub,duplicates,cluster_id\n";
      for (const auto& a : r.accounts) {
        out << csv_field(a.participant_id) << ',' << csv_field(a.group_id) << ',' << to_string(a.label) << ',';
        if (a.attention_pass) out << (*a.attention_pass ? "true" : "false");
        out << ',' << (a.timing_flag ? "true" : "false") << ',';
        if (a.response_mean_ms) out << *a.response_mean_ms;
        out << ',';
        if (a.response_cv) out << *a.response_cv;
        out << ',' << to_string(a.pattern) << ',' << (a.freeform.one_word ? "true" : "false") << ','
            << (a.freeform.irrelevant_stub ? "true" : "false") << ',' << a.freeform.duplicate_of.size() << ','
            << a.cluster_id.value_or("") << '\n';
      }
      break;
  }
  out.precision(old);
}

}  // namespace

void emit_report(std::ostream& out, const DetectionReport& report, const EmitOptions& options) {
  switch (options.format) {
    case ReportFormat::human: emit_human(out, report, options); break;
    case ReportFormat::csv: emit_csv(out, report, options); break;
    case ReportFormat::json: {
      Json j = report;
      j["clusters"] = clusters_json(sorted_clusters(report, options.sort, options.descending));
      out << j.dump(2) << '\n';
      break;
    }
  }
}

// ---------------------------------------------------------------------------
// Run store

std::string default_store_dir() {
  if (const char* env = std::getenv("PUPPETSCAN_STORE"); env != nullptr && *env != '\0') return env;
  return (std::filesystem::current_path() / ".puppetscan" / "runs").string();
}

std::string persist_run(const DetectionReport& report, const std::string& store_dir) {
  const std::string body = Json(report).dump(2) + "\n";
  const std::string id = sha256_hex(body).substr(0, 16);
  std::filesystem::create_directories(store_dir);
  const auto path = std::filesystem::path(store_dir) / (id + ".json");
  const auto tmp = std::filesystem::path(store_dir) / (id + ".json.tmp");
  {
    std::ofstream f(tmp, std::ios::binary);
    if (!f) throw std::runtime_error("cannot write run store '" + store_dir + "'");
    f << body;
  }
  std::filesystem::rename(tmp, path);
  return id;
}

DetectionReport load_run(const std::string& run_id, const std::string& store_dir) {
  if (run_id.empty() || run_id.find_first_not_of("0123456789abcdef") != std::string::npos)
    throw std::invalid_argument("malformed run id '" + run_id + "'");
  const auto path = std::filesystem::path(store_dir) / (run_id + ".json");
  std::ifstream f(path);
  if (!f) throw std::invalid_argument("unknown run id '" + run_id + "' in " + store_dir);
  return Json::parse(f).get<DetectionReport>();
}

}  // namespace puppetscan
