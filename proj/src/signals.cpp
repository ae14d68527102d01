#include "puppetscan/signals.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <set>
#include <stdexcept>
#include <unordered_map>

#include "puppetscan/disjoint_set.hpp"

namespace puppetscan {
namespace {

struct InteractionCounts {
  int searches = 0;
  int scroll_up = 0;
  int scroll_down = 0;
  int failed_logins = 0;
  std::set<std::string> term_hashes;
};

InteractionCounts count_interactions(const ParticipantRecord& rec) {
  InteractionCounts c;
  for (const auto& ev : rec.events) {
    switch (ev.kind) {
      case EventKind::search:
        ++c.searches;
        c.term_hashes.insert(ev.payload.value("term_hash", std::string{}));
        break;
      case EventKind::scroll_up: ++c.scroll_up; break;
      case EventKind::scroll_down: ++c.scroll_down; break;
      case EventKind::login_attempt:
        if (!ev.payload.value("success", true)) ++c.failed_logins;
        break;
      default: break;
    }
  }
  return c;
}

std::map<std::string, int> option_map(const ParticipantRecord& rec) {
  std::map<std::string, int> m;
  for (const auto& [qid, ans] : rec.responses.mcq) m[qid] = ans.option_index;
  return m;
}

std::string strip_punctuation(std::string s) {
  while (!s.empty() && std::ispunct(static_cast<unsigned char>(s.back()))) s.pop_back();
  while (!s.empty() && std::ispunct(static_cast<unsigned char>(s.front()))) s.erase(s.begin());
  return s;
}

}  // namespace

AttentionResult evaluate_attention(const ParticipantRecord& record, const StudySpec& spec) {
  for (const auto& check : spec.attention_checks) {
    const auto it = record.responses.attention.find(check.id);
    if (it == record.responses.attention.end()) return AttentionResult::fail;
    if (std::find(check.accepted.begin(), check.accepted.end(), it->second) == check.accepted.end())
      return AttentionResult::fail;
  }
  return AttentionResult::pass;
}

SignalVector compute_signals(std::span<const ParticipantRecord* const> members) {
  if (members.size() < 2) throw std::domain_error("compute_signals: a cluster needs at least two members");

  std::vector<InteractionCounts> counts;
  counts.reserve(members.size());
  for (const auto* rec : members) counts.push_back(count_interactions(*rec));

  SignalVector s;
  const bool all_searched = std::all_of(counts.begin(), counts.end(), [](const auto& c) { return c.searches > 0; });
  s.identical_search_term =
      all_searched && std::all_of(counts.begin(), counts.end(),
                                  [&](const auto& c) { return c.term_hashes == counts.front().term_hashes; });
  s.no_search = std::all_of(counts.begin(), counts.end(), [](const auto& c) { return c.searches == 0; });
  s.identical_scrolling = std::all_of(counts.begin(), counts.end(), [&](const auto& c) {
    return c.scroll_up == counts.front().scroll_up && c.scroll_down == counts.front().scroll_down;
  });
  s.no_scrolling = std::all_of(counts.begin(), counts.end(),
                               [](const auto& c) { return c.scroll_up == 0 && c.scroll_down == 0; });

  bool any_answer = false;
  bool all_first = true;
  for (const auto* rec : members)
    for (const auto& [_, ans] : rec->responses.mcq) {
      any_answer = true;
      all_first = all_first && ans.option_index == 0;
    }
  s.default_first_item_only = any_answer && all_first;

  const auto first_map = option_map(*members.front());
  s.identical_patterns = any_answer && std::all_of(members.begin(), members.end(), [&](const auto* rec) {
                           return option_map(*rec) == first_map;
                         });
  s.no_incorrect_login_attempts =
      std::all_of(counts.begin(), counts.end(), [](const auto& c) { return c.failed_logins == 0; });
  return s;
}

std::string_view to_string(BotVerdict v) {
  switch (v) {
    case BotVerdict::human_likely: return "human_likely";
    case BotVerdict::ambiguous: return "ambiguous";
    case BotVerdict::bot_suspect: return "bot_suspect";
  }
  return "ambiguous";
}

BotVerdict bot_likelihood(const SignalVector& signals) {
  const int n = signals.count();
  if (n == 0) return BotVerdict::human_likely;
  if (n == 1) return BotVerdict::ambiguous;
  return BotVerdict::bot_suspect;
}

std::optional<TimingProfile> timing_profile(const ParticipantRecord& record) {
  const auto& times = record.responses.per_question_time_ms;
  if (times.size() < 2) return std::nullopt;
  TimingProfile prof;
  for (const auto& [_, ms] : times) prof.per_question_times.push_back(static_cast<double>(ms));
  const auto n = static_cast<double>(prof.per_question_times.size());
  double sum = 0.0;
  for (double t : prof.per_question_times) sum += t;
  prof.mean_ms = sum / n;
  double ss = 0.0;
  for (double t : prof.per_question_times) ss += (t - prof.mean_ms) * (t - prof.mean_ms);
  prof.std_ms = std::sqrt(ss / n);
  prof.cv = prof.mean_ms > 0.0 ? prof.std_ms / prof.mean_ms : 0.0;
  prof.min_interval_ms = *std::min_element(prof.per_question_times.begin(), prof.per_question_times.end());
  return prof;
}

bool flag_timing(const std::optional<TimingProfile>& profile, const DetectorConfig& config) {
  if (!profile) return false;
  return profile->cv < config.timing_cv_floor && profile->mean_ms < config.timing_mean_floor_ms;
}

std::string to_string(const AnswerPattern& p) {
  switch (p.kind) {
    case PatternKind::none: return "none";
    case PatternKind::constant: return "constant";
    case PatternKind::alternating: return "alternating";
    case PatternKind::custom_period: return "custom_period(" + std::to_string(p.period) + ")";
  }
  return "none";
}

AnswerPattern detect_answer_pattern(std::span<const int> answers) {
  const std::size_t len = answers.size();
  if (len < 4) return {};
  for (std::size_t period = 1; period <= len / 2; ++period) {
    bool repeats = true;
    for (std::size_t i = period; i < len && repeats; ++i) repeats = answers[i] == answers[i - period];
    if (!repeats) continue;
    if (period == 1) return {PatternKind::constant, 1};
    if (period == 2) return {PatternKind::alternating, 2};
    return {PatternKind::custom_period, static_cast<int>(period)};
  }
  return {};
}

std::vector<int> shown_positions_in_order(const ParticipantRecord& record, const StudySpec& spec) {
  std::vector<int> out;
  for (const auto& ev : record.events) {
    if (ev.kind != EventKind::answer) continue;
    const auto qid = ev.payload.value("question_id", std::string{});
    if (spec.find_check(qid) != nullptr) continue;
    out.push_back(ev.payload.value("shown_position", 0));
  }
  return out;
}

std::string normalize_text(std::string_view text) {
  std::string out;
  bool pending_space = false;
  for (unsigned char c : text) {
    if (std::isspace(c)) {
      pending_space = !out.empty();
      continue;
    }
    if (pending_space) out.push_back(' ');
    pending_space = false;
    out.push_back(static_cast<char>(std::tolower(c)));
  }
  return out;
}

std::map<std::string, FreeformFlags> score_freeform(const Dataset& dataset,
                                                    const std::vector<std::string>& stub_lexicon) {
  std::set<std::string> stubs;
  for (const auto& s : stub_lexicon) stubs.insert(strip_punctuation(normalize_text(s)));

  std::map<std::string, FreeformFlags> out;
  // (question, normalized text) -> participants who wrote it
  std::map<std::pair<std::string, std::string>, std::vector<std::string>> authors;
  for (const auto& rec : dataset) {
    if (rec.responses.freeform.empty()) continue;
    auto& flags = out[rec.participant_id];
    for (const auto& [qid, text] : rec.responses.freeform) {
      const auto norm = normalize_text(text);
      if (!norm.empty() && norm.find(' ') == std::string::npos) flags.one_word = true;
      if (stubs.contains(strip_punctuation(norm))) flags.irrelevant_stub = true;
      if (!norm.empty()) authors[{qid, norm}].push_back(rec.participant_id);
    }
  }
  for (const auto& [_, ids] : authors) {
    if (ids.size() < 2) continue;
    for (const auto& a : ids)
      for (const auto& b : ids)
        if (a != b) out[a].duplicate_of.push_back(b);
  }
  for (auto& [_, flags] : out) {
    std::sort(flags.duplicate_of.begin(), flags.duplicate_of.end());
    flags.duplicate_of.erase(std::unique(flags.duplicate_of.begin(), flags.duplicate_of.end()),
                             flags.duplicate_of.end());
  }
  return out;
}

std::vector<std::string> load_stub_lexicon(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open stub lexicon " + path);
  std::vector<std::string> out;
  std::string line;
  while (std::getline(in, line)) {
    auto norm = normalize_text(line);
    if (norm.empty() || norm.front() == '#') continue;
    out.push_back(std::move(norm));
  }
  return out;
}

std::vector<PuppetCluster> group_by_machine_token(const Dataset& dataset) {
  std::map<std::vector<std::string>, std::vector<std::string>> groups;  // members -> artifacts

  auto group_kind = [&](const char* label, auto tokens_of) {
    DisjointSet sets(dataset.size());
    std::unordered_map<std::string, std::size_t> first_owner;
    for (std::size_t i = 0; i < dataset.size(); ++i)
      for (const auto& tok : tokens_of(dataset[i])) {
        auto [it, fresh] = first_owner.try_emplace(tok, i);
        if (!fresh) sets.unite(it->second, i);
      }
    std::map<std::size_t, std::vector<std::string>> comps;
    for (std::size_t i = 0; i < dataset.size(); ++i) comps[sets.find(i)].push_back(dataset[i].participant_id);
    for (auto& [root, ids] : comps) {
      if (ids.size() < 2) continue;
      // The smallest token owned by the root's component names the artifact.
      std::string token;
      for (const auto& [tok, owner] : first_owner)
        if (sets.find(owner) == root && (token.empty() || tok < token)) token = tok;
      std::sort(ids.begin(), ids.end());
      groups[ids].push_back(std::string(label) + ":" + token);
    }
  };
  group_kind("fingerprint", [](const ParticipantRecord& r) -> const auto& { return r.fingerprint_tokens; });
  group_kind("storage", [](const ParticipantRecord& r) -> const auto& { return r.storage_tokens; });

  std::vector<PuppetCluster> out;
  for (auto& [members, artifacts] : groups) {
    PuppetCluster c;
    c.evidence = Evidence::machine_token;
    c.members = members;
    std::string joined;
    for (const auto& a : artifacts) joined += (joined.empty() ? "" : ",") + a;
    c.artifact = joined;
    out.push_back(std::move(c));
  }
  return out;
}

}  // namespace puppetscan
