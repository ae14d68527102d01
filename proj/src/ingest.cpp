#include "puppetscan/ingest.hpp"

#include <algorithm>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>
#include <unordered_map>

#include "puppetscan/hashing.hpp"

namespace puppetscan {
namespace {

Diagnostic line_diag(Severity sev, std::size_t line, std::string msg,
                     std::optional<std::string> pid = std::nullopt) {
  return Diagnostic{sev, std::move(pid), line, std::move(msg)};
}

Diagnostic record_diag(Severity sev, const std::string& pid, std::string msg) {
  return Diagnostic{sev, pid, std::nullopt, std::move(msg)};
}

bool is_nonneg_int(const Json& v) {
  return v.is_number_unsigned() || (v.is_number_integer() && v.get<std::int64_t>() >= 0);
}

// Returns an empty string when the payload satisfies the kind's schema.
std::string check_payload(EventKind kind, const Json& p) {
  auto need_string = [&](const char* key) -> std::string {
    if (!p.contains(key) || !p[key].is_string() || p[key].get_ref<const std::string&>().empty())
      return std::string("payload.") + key + " must be a non-empty string";
    return {};
  };
  auto opt_number = [&](const char* key) -> std::string {
    if (p.contains(key) && !p[key].is_number()) return std::string("payload.") + key + " must be a number";
    return {};
  };
  auto need_nonneg_int = [&](const char* key, bool required) -> std::string {
    if (!p.contains(key)) return required ? std::string("payload.") + key + " is required" : std::string{};
    if (!is_nonneg_int(p[key])) return std::string("payload.") + key + " must be a non-negative integer";
    return {};
  };
  std::string err;
  switch (kind) {
    case EventKind::click:
      if (!(err = opt_number("x")).empty()) return err;
      return opt_number("y");
    case EventKind::search:
      return need_string("term_hash");
    case EventKind::login_attempt:
      if (!p.contains("success") || !p["success"].is_boolean()) return "payload.success must be a boolean";
      return {};
    case EventKind::answer:
      if (!(err = need_string("question_id")).empty()) return err;
      if (!(err = need_nonneg_int("option_id", true)).empty()) return err;
      if (!(err = need_nonneg_int("shown_position", true)).empty()) return err;
      return need_nonneg_int("duration_ms", false);
    case EventKind::freeform:
      if (!(err = need_string("question_id")).empty()) return err;
      if (!p.contains("text") || !p["text"].is_string()) return "payload.text must be a string";
      return {};
    case EventKind::secret_set:
      if (!(err = need_string("secret_hash")).empty()) return err;
      if (p.contains("group_id") && !p["group_id"].is_string()) return "payload.group_id must be a string";
      return {};
    case EventKind::pin_assigned:
      if (!(err = need_string("group_id")).empty()) return err;
      return need_string("secret_hash");
    case EventKind::storage_token:
    case EventKind::fingerprint_token:
      return need_string("token");
    default:
      return {};
  }
}

struct PendingEvent {
  UiEvent event;
  std::size_t line = 0;
};

ParticipantRecord build_record(const std::string& pid, std::vector<PendingEvent>& pending,
                               const StudySpec& spec, std::vector<Diagnostic>& diags) {
  // Ordering violations are reported against input order before the stable sort.
  std::map<int, std::int64_t> last_t;
  for (const auto& pe : pending) {
    auto [it, fresh] = last_t.try_emplace(pe.event.session, pe.event.t_ms);
    if (!fresh) {
      if (pe.event.t_ms < it->second)
        diags.push_back(line_diag(Severity::warning, pe.line,
                                  "t_ms decreases within session " + std::to_string(pe.event.session) +
                                      "; event reordered",
                                  pid));
      else
        it->second = pe.event.t_ms;
    }
  }
  std::stable_sort(pending.begin(), pending.end(), [](const PendingEvent& a, const PendingEvent& b) {
    if (a.event.session != b.event.session) return a.event.session < b.event.session;
    return a.event.t_ms < b.event.t_ms;
  });

  ParticipantRecord rec;
  rec.participant_id = pid;
  std::map<int, std::int64_t> last_answer_t;
  for (auto& pe : pending) {
    const UiEvent& ev = pe.event;
    const Json& p = ev.payload;
    switch (ev.kind) {
      case EventKind::answer: {
        const auto qid = p["question_id"].get<std::string>();
        const int option = p["option_id"].get<int>();
        const auto prev = last_answer_t.find(ev.session);
        const std::int64_t derived = ev.t_ms - (prev == last_answer_t.end() ? 0 : prev->second);
        last_answer_t[ev.session] = ev.t_ms;
        rec.responses.per_question_time_ms[qid] =
            p.contains("duration_ms") ? p["duration_ms"].get<std::int64_t>() : derived;
        rec.completed_sessions.insert(ev.session);
        if (spec.find_check(qid) != nullptr) {
          std::string label;
          if (p.contains("label") && p["label"].is_string()) {
            label = p["label"].get<std::string>();
          } else if (const auto* q = spec.find_question(qid);
                     q != nullptr && option < static_cast<int>(q->options.size())) {
            label = q->options[option];
          }
          rec.responses.attention[qid] = label;
        } else {
          rec.responses.mcq[qid] = McqAnswer{option, p["shown_position"].get<int>()};
        }
        break;
      }
      case EventKind::freeform:
        rec.responses.freeform[p["question_id"].get<std::string>()] = p["text"].get<std::string>();
        break;
      case EventKind::secret_set:
      case EventKind::pin_assigned: {
        const auto hash = p["secret_hash"].get<std::string>();
        if (rec.secret_hash && *rec.secret_hash != hash)
          diags.push_back(line_diag(Severity::error, pe.line, "conflicting secret hash; first one kept", pid));
        else
          rec.secret_hash = hash;
        if (rec.secret_kind == SecretKind::none)
          rec.secret_kind = ev.kind == EventKind::pin_assigned ? SecretKind::pin : SecretKind::password;
        if (p.contains("group_id")) {
          const auto gid = p["group_id"].get<std::string>();
          if (!rec.group_id.empty() && rec.group_id != gid)
            diags.push_back(line_diag(Severity::error, pe.line,
                                      "conflicting group_id '" + gid + "'; '" + rec.group_id + "' kept", pid));
          else
            rec.group_id = gid;
        }
        break;
      }
      case EventKind::storage_token:
        rec.storage_tokens.insert(p["token"].get<std::string>());
        break;
      case EventKind::fingerprint_token:
        rec.fingerprint_tokens.insert(p["token"].get<std::string>());
        break;
      default:
        break;
    }
    rec.events.push_back(std::move(pe.event));
  }
  return rec;
}

}  // namespace

IngestResult ingest_events(std::istream& source, const StudySpec& spec) {
  IngestResult result;
  std::vector<std::string> order;
  std::unordered_map<std::string, std::vector<PendingEvent>> by_participant;

  std::string line;
  std::size_t line_no = 0;
  while (std::getline(source, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    Json j = Json::parse(line, nullptr, false);
    if (j.is_discarded() || !j.is_object()) {
      result.diagnostics.push_back(line_diag(Severity::error, line_no, "malformed JSON line"));
      continue;
    }
    static const std::set<std::string> kFields{"participant_id", "session", "t_ms", "kind", "payload"};
    std::string problem;
    for (const auto& [key, _] : j.items())
      if (!kFields.contains(key)) problem = "unexpected field '" + key + "'";
    for (const auto& f : kFields)
      if (!j.contains(f)) problem = "missing field '" + f + "'";
    if (problem.empty()) {
      if (!j["participant_id"].is_string() || j["participant_id"].get_ref<const std::string&>().empty())
        problem = "participant_id must be a non-empty string";
      else if (!j["session"].is_number_integer() || (j["session"] != 1 && j["session"] != 2))
        problem = "session must be 1 or 2";
      else if (!is_nonneg_int(j["t_ms"]))
        problem = "t_ms must be a non-negative integer";
      else if (!j["kind"].is_string())
        problem = "kind must be a string";
      else if (!j["payload"].is_object())
        problem = "payload must be an object";
    }
    if (!problem.empty()) {
      std::optional<std::string> pid;
      if (j.contains("participant_id") && j["participant_id"].is_string())
        pid = j["participant_id"].get<std::string>();
      result.diagnostics.push_back(line_diag(Severity::error, line_no, problem, pid));
      continue;
    }

    UiEvent ev;
    ev.participant_id = j["participant_id"].get<std::string>();
    ev.session = j["session"].get<int>();
    ev.t_ms = j["t_ms"].get<std::int64_t>();
    ev.kind_name = j["kind"].get<std::string>();
    ev.kind = parse_event_kind(ev.kind_name);
    ev.payload = std::move(j["payload"]);

    if (ev.kind == EventKind::unknown) {
      result.diagnostics.push_back(line_diag(Severity::warning, line_no,
                                             "unknown event kind '" + ev.kind_name + "' kept as opaque event",
                                             ev.participant_id));
    } else if (auto err = check_payload(ev.kind, ev.payload); !err.empty()) {
      result.diagnostics.push_back(line_diag(Severity::error, line_no, ev.kind_name + ": " + err, ev.participant_id));
      continue;
    }

    auto [it, fresh] = by_participant.try_emplace(ev.participant_id);
    if (fresh) order.push_back(ev.participant_id);
    it->second.push_back(PendingEvent{std::move(ev), line_no});
  }

  result.dataset.reserve(order.size());
  for (const auto& pid : order)
    result.dataset.push_back(build_record(pid, by_participant[pid], spec, result.diagnostics));

  auto invariants = validate_dataset(result.dataset, spec);
  result.diagnostics.insert(result.diagnostics.end(), invariants.begin(), invariants.end());
  return result;
}

IngestResult ingest_events(const std::string& text, const StudySpec& spec) {
  std::istringstream in(text);
  return ingest_events(in, spec);
}

std::vector<Diagnostic> validate_dataset(const Dataset& dataset, const StudySpec& spec) {
  std::vector<Diagnostic> out;
  std::set<std::string> ids;
  for (const auto& rec : dataset) {
    const auto& pid = rec.participant_id;
    if (!ids.insert(pid).second) out.push_back(record_diag(Severity::error, pid, "duplicate participant_id"));

    if (!spec.groups.empty()) {
      if (rec.group_id.empty())
        out.push_back(record_diag(Severity::error, pid, "no group_id assigned"));
      else if (!spec.has_group(rec.group_id))
        out.push_back(record_diag(Severity::error, pid, "unknown group_id '" + rec.group_id + "'"));
    }

    bool has_secret_event = false;
    std::map<int, std::int64_t> last_t;
    for (const auto& ev : rec.events) {
      if (ev.participant_id != pid)
        out.push_back(record_diag(Severity::error, pid, "event belongs to '" + ev.participant_id + "'"));
      if (ev.session != 1 && ev.session != 2)
        out.push_back(record_diag(Severity::error, pid, "session outside {1,2}"));
      if (ev.t_ms < 0) out.push_back(record_diag(Severity::error, pid, "negative t_ms"));
      auto [it, fresh] = last_t.try_emplace(ev.session, ev.t_ms);
      if (!fresh) {
        if (ev.t_ms < it->second)
          out.push_back(record_diag(Severity::error, pid, "events not ordered by t_ms"));
        it->second = ev.t_ms;
      }
      if (ev.kind == EventKind::secret_set || ev.kind == EventKind::pin_assigned) has_secret_event = true;
    }
    if (has_secret_event && !rec.secret_hash)
      out.push_back(record_diag(Severity::error, pid, "secret event present but secret_hash missing"));
    if (!has_secret_event && rec.secret_hash)
      out.push_back(record_diag(Severity::error, pid, "secret_hash present without a secret event"));

    for (const auto& [qid, ans] : rec.responses.mcq) {
      const auto* q = spec.find_question(qid);
      if (q == nullptr) {
        out.push_back(record_diag(Severity::error, pid, "answer to undeclared question '" + qid + "'"));
      } else if (ans.option_index < 0 || ans.option_index >= static_cast<int>(q->options.size())) {
        out.push_back(record_diag(Severity::error, pid,
                                  "question '" + qid + "': option_index " + std::to_string(ans.option_index) +
                                      " out of range"));
      }
    }
    for (const auto& [qid, ms] : rec.responses.per_question_time_ms)
      if (ms < 0) out.push_back(record_diag(Severity::error, pid, "negative duration for '" + qid + "'"));
  }
  return out;
}

Json event_to_json(const UiEvent& ev) {
  return Json{{"participant_id", ev.participant_id},
              {"session", ev.session},
              {"t_ms", ev.t_ms},
              {"kind", ev.kind == EventKind::unknown ? ev.kind_name : std::string(to_string(ev.kind))},
              {"payload", ev.payload}};
}

void write_events(std::ostream& out, const Dataset& dataset) {
  for (const auto& rec : dataset)
    for (const auto& ev : rec.events) out << event_to_json(ev).dump() << '\n';
}

std::string serialize_events(const Dataset& dataset) {
  std::ostringstream out;
  write_events(out, dataset);
  return out.str();
}

std::string dataset_digest(const Dataset& dataset) { return sha256_hex(serialize_events(dataset)); }

}  // namespace puppetscan
