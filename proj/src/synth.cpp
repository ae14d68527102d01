#include "puppetscan/synth.hpp"

#include <boost/math/distributions/normal.hpp>

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <set>
#include <sstream>
#include <stdexcept>
#include <unordered_set>

#include "puppetscan/behavior.hpp"
#include "puppetscan/hashing.hpp"
#include "puppetscan/ingest.hpp"
#include "puppetscan/random.hpp"

namespace puppetscan {

int GroupComposition::total() const {
  int n = valid + inattentive + replay_bots + smart_bots + genai_bots;
  for (const auto& p : puppeteers) n += p.k;
  return n;
}

int PopulationSpec::total() const {
  int n = 0;
  for (const auto& g : groups) n += g.total();
  return n;
}

void validate_population(const PopulationSpec& spec) {
  auto prob = [](double p, const char* what) {
    if (!(p >= 0.0 && p <= 1.0)) throw std::invalid_argument(std::string("population: ") + what + " must be in [0, 1]");
  };
  prob(spec.secret_sharing_prob, "secret_sharing_prob");
  prob(spec.token_sharing_prob, "token_sharing_prob");
  prob(spec.behavior.human_search_prob, "human_search_prob");
  prob(spec.behavior.human_failed_login_prob, "human_failed_login_prob");
  prob(spec.behavior.return_prob, "return_prob");
  if (!(spec.behavior.puppet_jitter >= 0.0)) throw std::invalid_argument("population: puppet_jitter must be >= 0");
  if (!(spec.behavior.bot_timing_jitter >= 0.0 && spec.behavior.bot_timing_jitter < 1.0))
    throw std::invalid_argument("population: bot_timing_jitter must be in [0, 1)");
  std::set<std::string> ids;
  for (const auto& g : spec.groups) {
    if (g.group_id.empty()) throw std::invalid_argument("population: group without id");
    if (!ids.insert(g.group_id).second) throw std::invalid_argument("population: duplicate group '" + g.group_id + "'");
    if (g.valid < 0 || g.inattentive < 0 || g.replay_bots < 0 || g.smart_bots < 0 || g.genai_bots < 0)
      throw std::invalid_argument("population: negative count in group '" + g.group_id + "'");
    for (const auto& p : g.puppeteers)
      if (p.k < 2) throw std::invalid_argument("population: puppeteer with k < 2 in group '" + g.group_id + "'");
  }
}

// ---------------------------------------------------------------------------
// JSON

namespace {

Json scale_json(const LatentScale& s) { return Json::array({s.median, s.log_sd}); }

void read_scale(const Json& j, const char* key, LatentScale& s) {
  if (!j.contains(key)) return;
  const auto& v = j.at(key);
  if (!v.is_array() || v.size() != 2) throw std::invalid_argument(std::string("behavior.") + key + ": expected [median, log_sd]");
  s.median = v[0].get<double>();
  s.log_sd = v[1].get<double>();
  if (!(s.median > 0.0) || !(s.log_sd >= 0.0))
    throw std::invalid_argument(std::string("behavior.") + key + ": median must be > 0 and log_sd >= 0");
}

}  // namespace

void to_json(Json& j, const PopulationSpec& s) {
  Json groups = Json::array();
  for (const auto& g : s.groups) {
    Json pups = Json::array();
    for (const auto& p : g.puppeteers) pups.push_back({{"k", p.k}, {"occurrences", p.occurrences}});
    groups.push_back({{"id", g.group_id},
                      {"valid", g.valid},
                      {"inattentive", g.inattentive},
                      {"puppeteers", pups},
                      {"replay_bots", g.replay_bots},
                      {"smart_bots", g.smart_bots},
                      {"genai_bots", g.genai_bots}});
  }
  const auto& b = s.behavior;
  j = Json{{"groups", groups},
           {"secret_mode", s.secret_mode == SecretMode::pin ? "pin" : "password"},
           {"secret_sharing_prob", s.secret_sharing_prob},
           {"token_sharing_prob", s.token_sharing_prob},
           {"freeform_questions", s.freeform_questions},
           {"seed", s.seed},
           {"behavior",
            {{"key_interval_ms", scale_json(b.key_interval_ms)},
             {"key_cv", scale_json(b.key_cv)},
             {"pointer_speed_px_s", scale_json(b.pointer_speed_px_s)},
             {"idle_fraction", scale_json(b.idle_fraction)},
             {"scroll_up", scale_json(b.scroll_up)},
             {"scroll_down", scale_json(b.scroll_down)},
             {"response_mean_ms", scale_json(b.response_mean_ms)},
             {"response_cv", scale_json(b.response_cv)},
             {"puppet_jitter", b.puppet_jitter},
             {"smart_bot_response_ms", b.smart_bot_response_ms},
             {"genai_bot_response_ms", b.genai_bot_response_ms},
             {"bot_timing_jitter", b.bot_timing_jitter},
             {"human_search_prob", b.human_search_prob},
             {"human_failed_login_prob", b.human_failed_login_prob},
             {"return_prob", b.return_prob}}}};
}

void from_json(const Json& j, PopulationSpec& s) {
  s = PopulationSpec{};
  for (const auto& gj : j.at("groups")) {
    GroupComposition g;
    g.group_id = gj.at("id").get<std::string>();
    g.valid = gj.value("valid", 0);
    g.inattentive = gj.value("inattentive", 0);
    g.replay_bots = gj.value("replay_bots", 0);
    g.smart_bots = gj.value("smart_bots", 0);
    g.genai_bots = gj.value("genai_bots", 0);
    if (gj.contains("puppeteers")) {
      for (const auto& pj : gj.at("puppeteers")) {
        PuppeteerSpec p;
        if (pj.is_number_integer()) {
          p.k = pj.get<int>();
        } else {
          p.k = pj.at("k").get<int>();
          p.occurrences = pj.value("occurrences", std::uint64_t{0});
        }
        g.puppeteers.push_back(p);
      }
    }
    s.groups.push_back(std::move(g));
  }
  const auto mode = j.value("secret_mode", std::string("password"));
  if (mode == "password") s.secret_mode = SecretMode::password;
  else if (mode == "pin") s.secret_mode = SecretMode::pin;
  else throw std::invalid_argument("population: secret_mode must be 'password' or 'pin'");
  s.secret_sharing_prob = j.value("secret_sharing_prob", s.secret_sharing_prob);
  s.token_sharing_prob = j.value("token_sharing_prob", s.token_sharing_prob);
  if (j.contains("freeform_questions")) s.freeform_questions = j.at("freeform_questions").get<std::vector<std::string>>();
  s.seed = j.value("seed", s.seed);
  if (j.contains("behavior")) {
    const auto& bj = j.at("behavior");
    auto& b = s.behavior;
    read_scale(bj, "key_interval_ms", b.key_interval_ms);
    read_scale(bj, "key_cv", b.key_cv);
    read_scale(bj, "pointer_speed_px_s", b.pointer_speed_px_s);
    read_scale(bj, "idle_fraction", b.idle_fraction);
    read_scale(bj, "scroll_up", b.scroll_up);
    read_scale(bj, "scroll_down", b.scroll_down);
    read_scale(bj, "response_mean_ms", b.response_mean_ms);
    read_scale(bj, "response_cv", b.response_cv);
    b.puppet_jitter = bj.value("puppet_jitter", b.puppet_jitter);
    b.smart_bot_response_ms = bj.value("smart_bot_response_ms", b.smart_bot_response_ms);
    b.genai_bot_response_ms = bj.value("genai_bot_response_ms", b.genai_bot_response_ms);
    b.bot_timing_jitter = bj.value("bot_timing_jitter", b.bot_timing_jitter);
    b.human_search_prob = bj.value("human_search_prob", b.human_search_prob);
    b.human_failed_login_prob = bj.value("human_failed_login_prob", b.human_failed_login_prob);
    b.return_prob = bj.value("return_prob", b.return_prob);
  }
  validate_population(s);
}

Preset load_preset_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open preset '" + path + "'");
  Json j;
  try {
    j = Json::parse(in);
  } catch (const Json::parse_error& e) {
    throw std::invalid_argument("preset '" + path + "': " + e.what());
  }
  Preset p;
  p.name = j.value("name", std::filesystem::path(path).stem().string());
  p.study = j.at("study").get<StudySpec>();
  p.population = j.at("population").get<PopulationSpec>();
  return p;
}

Preset load_preset(std::string_view name) {
  std::vector<std::filesystem::path> dirs;
  if (const char* env = std::getenv("PUPPETSCAN_PRESET_DIR"); env != nullptr && *env != '\0') dirs.emplace_back(env);
#ifdef PUPPETSCAN_PRESET_DIR
  dirs.emplace_back(PUPPETSCAN_PRESET_DIR);
#endif
  for (const auto& d : dirs) {
    const auto candidate = d / (std::string(name) + ".json");
    if (std::filesystem::exists(candidate)) return load_preset_file(candidate.string());
  }
  throw std::invalid_argument("unknown preset '" + std::string(name) + "'");
}

// ---------------------------------------------------------------------------
// Labels

std::string_view to_string(BotKind k) {
  switch (k) {
    case BotKind::replay: return "replay";
    case BotKind::smart: return "smart";
    case BotKind::genai: return "genai";
  }
  return "replay";
}

Json truth_to_json(const GroundTruth& truth) {
  Json j = Json::object();
  for (const auto& [id, t] : truth) {
    Json row{{"label", std::string(to_string(t.label))}};
    if (!t.operator_id.empty()) row["operator"] = t.operator_id;
    if (t.bot_kind) row["bot_kind"] = std::string(to_string(*t.bot_kind));
    j[id] = std::move(row);
  }
  return j;
}

GroundTruth truth_from_json(const Json& j) {
  GroundTruth truth;
  for (const auto& [id, row] : j.items()) {
    TruthLabel t;
    t.label = parse_label_class(row.at("label").get<std::string>());
    t.operator_id = row.value("operator", std::string());
    if (row.contains("bot_kind")) {
      const auto k = row.at("bot_kind").get<std::string>();
      if (k == "replay") t.bot_kind = BotKind::replay;
      else if (k == "smart") t.bot_kind = BotKind::smart;
      else if (k == "genai") t.bot_kind = BotKind::genai;
      else throw std::invalid_argument("unknown bot kind '" + k + "'");
    }
    truth.emplace(id, std::move(t));
  }
  return truth;
}

// ---------------------------------------------------------------------------
// Generator

namespace {

constexpr std::string_view kAlnum = "ABCDEFGHIJKLMNOPQRSTUVWXYZ0123456789";
constexpr std::string_view kPasswordChars = "abcdefghijklmnopqrstuvwxyzABCDEFGHIJKLMNOPQRSTUVWXYZ0123456789!#$%&*?@";
constexpr double kScreenW = 1920.0;
constexpr double kScreenH = 1080.0;
constexpr int kPointerSamples = 40;

std::string random_string(Rng& rng, std::size_t n, std::string_view alphabet) {
  std::string s;
  s.reserve(n);
  for (std::size_t i = 0; i < n; ++i) s.push_back(alphabet[rng.below(alphabet.size())]);
  return s;
}

/// Log-normal values at evenly spaced normal quantiles, in random order, so
/// a short event stream still carries its profile.
std::vector<double> matched_lognormal(Rng& rng, std::size_t m, double mean, double cv) {
  const boost::math::normal_distribution<double> unit;
  std::vector<double> z(m);
  for (std::size_t i = 0; i < m; ++i)
    z[i] = m == 1 ? 0.0 : boost::math::quantile(unit, (static_cast<double>(i) + 0.5) / static_cast<double>(m));
  for (std::size_t i = m; i > 1; --i) std::swap(z[i - 1], z[rng.below(i)]);
  const double s2 = std::log1p(cv * cv);
  const double mu = std::log(mean) - 0.5 * s2;
  for (auto& v : z) v = std::exp(mu + std::sqrt(s2) * v);
  return z;
}

/// Constant with a uniform relative jitter.
std::vector<double> jittered_constant(Rng& rng, std::size_t m, double value, double jitter) {
  std::vector<double> out(m);
  for (auto& v : out) v = value * (1.0 + jitter * (2.0 * rng.uniform() - 1.0));
  return out;
}

struct Profile {
  double key_interval_ms = 0.0;
  double key_cv = 0.0;
  double pointer_speed = 0.0;
  double idle_fraction = 0.0;
  double scroll_up = 0.0;
  double scroll_down = 0.0;
  double response_mean_ms = 0.0;
  double response_cv = 0.0;
};

double draw_scale(Rng& rng, const LatentScale& s) { return s.median * std::exp(rng.normal(0.0, s.log_sd)); }

Profile draw_profile(Rng& rng, const BehaviorModel& b) {
  Profile p;
  p.key_interval_ms = draw_scale(rng, b.key_interval_ms);
  p.key_cv = std::min(draw_scale(rng, b.key_cv), 0.9);
  p.pointer_speed = draw_scale(rng, b.pointer_speed_px_s);
  p.idle_fraction = std::min(draw_scale(rng, b.idle_fraction), 0.6);
  p.scroll_up = draw_scale(rng, b.scroll_up);
  p.scroll_down = draw_scale(rng, b.scroll_down);
  p.response_mean_ms = draw_scale(rng, b.response_mean_ms);
  p.response_cv = std::min(draw_scale(rng, b.response_cv), 1.5);
  return p;
}

Profile perturb_profile(Rng& rng, const Profile& base, const BehaviorModel& b) {
  const double f = b.puppet_jitter;
  auto nudge = [&](double v, const LatentScale& s) { return v * std::exp(rng.normal(0.0, f * s.log_sd)); };
  Profile p;
  p.key_interval_ms = nudge(base.key_interval_ms, b.key_interval_ms);
  p.key_cv = std::min(nudge(base.key_cv, b.key_cv), 0.9);
  p.pointer_speed = nudge(base.pointer_speed, b.pointer_speed_px_s);
  p.idle_fraction = std::min(nudge(base.idle_fraction, b.idle_fraction), 0.6);
  p.scroll_up = nudge(base.scroll_up, b.scroll_up);
  p.scroll_down = nudge(base.scroll_down, b.scroll_down);
  p.response_mean_ms = nudge(base.response_mean_ms, b.response_mean_ms);
  p.response_cv = std::min(nudge(base.response_cv, b.response_cv), 1.5);
  return p;
}

// Free-form text pieces.
constexpr std::array<std::string_view, 8> kOpeners = {"I think",     "Honestly,",      "In my opinion", "To be fair,",
                                                      "Overall",     "From what I saw", "I felt that",   "It seems like"};
constexpr std::array<std::string_view, 8> kSubjects = {
    "the password system", "the login page",        "the survey",    "the layout",
    "the instructions",    "the search feature",    "the sign-up step", "the menu"};
constexpr std::array<std::string_view, 4> kVerbs = {"was", "felt", "seemed", "looked"};
constexpr std::array<std::string_view, 8> kAdjectives = {
    "easy to use",  "a bit confusing", "pretty straightforward", "slow at times",
    "well organized", "harder than expected", "clear enough",   "quite intuitive"};
constexpr std::array<std::string_view, 8> kClosers = {"I would use it again.",
                                                      "The colors could be better.",
                                                      "It took me a while to remember my password.",
                                                      "Nothing else to add.",
                                                      "Typing the password twice was annoying.",
                                                      "The font was small on my screen.",
                                                      "I liked the progress bar.",
                                                      "Maybe add a hint option."};
constexpr std::array<std::string_view, 4> kStubs = {"good", "ok", "Good", "ok."};

template <std::size_t N>
std::string_view pick(Rng& rng, const std::array<std::string_view, N>& xs) {
  return xs[rng.below(N)];
}

std::string human_text(Rng& rng) {
  std::string s;
  s += pick(rng, kOpeners);
  s += ' ';
  s += pick(rng, kSubjects);
  s += ' ';
  s += pick(rng, kVerbs);
  s += ' ';
  s += pick(rng, kAdjectives);
  s += ". ";
  s += pick(rng, kClosers);
  s += " I spent about " + std::to_string(rng.between(2, 25)) + " minutes on it.";
  return s;
}

std::string genai_text(Rng& rng) {
  std::string s = "Overall, I found ";
  s += pick(rng, kSubjects);
  s += " to be ";
  s += pick(rng, kAdjectives);
  s += ", while ";
  s += pick(rng, kSubjects);
  s += ' ';
  s += pick(rng, kVerbs);
  s += ' ';
  s += pick(rng, kAdjectives);
  s += ". ";
  s += pick(rng, kClosers);
  s += ' ';
  s += pick(rng, kClosers);
  s += " Thank you for the opportunity to share my thoughts.";
  return s;
}

enum class Archetype { valid, inattentive, puppet, replay_bot, smart_bot, genai_bot };

struct Actor {
  std::string pid;
  std::string group_id;
  Archetype archetype = Archetype::valid;
  std::string operator_id;
  Profile profile;
  std::string secret;  // plaintext password, or PIN digits
  std::string fingerprint;
  std::string storage;
  /// Per-question preferred option shared within a puppeteer's accounts.
  std::vector<int> preferred;
  std::uint64_t seed = 0;
};

class EventWriter {
 public:
  EventWriter(std::string pid, int session, std::int64_t t0) : pid_(std::move(pid)), session_(session), t_(t0) {}

  void at(std::int64_t t, EventKind kind, Json payload) {
    UiEvent ev;
    ev.participant_id = pid_;
    ev.session = session_;
    ev.t_ms = std::max(t, t_);
    ev.kind = kind;
    ev.kind_name = std::string(to_string(kind));
    ev.payload = std::move(payload);
    t_ = ev.t_ms;
    events_.push_back(std::move(ev));
  }
  void now(EventKind kind, Json payload) { at(t_, kind, std::move(payload)); }
  void advance(double ms) { t_ += std::max<std::int64_t>(0, std::llround(ms)); }
  std::int64_t t() const { return t_; }
  std::vector<UiEvent>& events() { return events_; }
  void set_session(int s, std::int64_t t0) {
    session_ = s;
    t_ = t0;
  }

 private:
  std::string pid_;
  int session_;
  std::int64_t t_;
  std::vector<UiEvent> events_;
};

struct Timed {
  std::int64_t t;
  EventKind kind;
  Json payload;
};

struct Context {
  const PopulationSpec& pop;
  const StudySpec& study;
  std::vector<const QuestionSpec*> items;
};

void type_burst(EventWriter& w, const std::vector<double>& intervals) {
  w.now(EventKind::keydown, Json::object());
  for (double gap : intervals) {
    w.advance(gap);
    w.now(EventKind::keydown, Json::object());
  }
}

int attention_option(Rng& rng, const QuestionSpec& q, const AttentionCheck& check, bool pass) {
  std::vector<int> ok;
  std::vector<int> bad;
  for (int i = 0; i < static_cast<int>(q.options.size()); ++i)
    (std::find(check.accepted.begin(), check.accepted.end(), q.options[i]) != check.accepted.end() ? ok : bad)
        .push_back(i);
  const auto& pool = pass ? ok : bad;
  if (pool.empty()) return pass ? 0 : static_cast<int>(q.options.size()) - 1;
  return pool[rng.below(pool.size())];
}

std::vector<UiEvent> script_actor(const Actor& a, const Context& ctx, const std::string& secret_hash) {
  Rng rng(a.seed);
  const auto& b = ctx.pop.behavior;
  const bool human = a.archetype == Archetype::valid || a.archetype == Archetype::inattentive ||
                     a.archetype == Archetype::puppet || a.archetype == Archetype::replay_bot;
  const bool smart = a.archetype == Archetype::smart_bot;
  const bool genai = a.archetype == Archetype::genai_bot;

  EventWriter w(a.pid, 1, rng.between(0, 3'600'000));
  w.now(EventKind::page_nav, {{"page", "consent"}});
  w.advance(rng.between(5, 40));
  w.now(EventKind::fingerprint_token, {{"token", a.fingerprint}});
  w.now(EventKind::storage_token, {{"token", a.storage}});
  w.advance(human ? rng.between(800, 3000) : 200);

  auto type = [&](std::size_t n) {
    const std::size_t gaps = n > 0 ? n - 1 : 0;
    type_burst(w, human ? matched_lognormal(rng, gaps, a.profile.key_interval_ms, a.profile.key_cv)
                        : jittered_constant(rng, gaps, genai ? 80.0 : 30.0, b.bot_timing_jitter));
  };

  const bool pin = ctx.pop.secret_mode == SecretMode::pin;
  w.now(EventKind::page_nav, {{"page", "register"}});
  if (pin) {
    w.now(EventKind::pin_assigned, {{"group_id", a.group_id}, {"secret_hash", secret_hash}});
  } else {
    type(a.secret.size());
    w.advance(300);
    w.now(EventKind::secret_set, {{"group_id", a.group_id}, {"secret_hash", secret_hash}});
  }

  auto login = [&](double fail_prob) {
    w.advance(human ? rng.between(2500, 5000) : 150);
    w.now(EventKind::page_nav, {{"page", "login"}});
    while (human && rng.bernoulli(fail_prob)) {
      type(pin ? 4 : a.secret.size());
      w.advance(250);
      w.now(EventKind::login_attempt, {{"success", false}});
      w.advance(rng.between(2500, 5000));
      fail_prob *= 0.5;
    }
    type(pin ? 4 : a.secret.size());
    w.advance(human ? 250 : 20);
    w.now(EventKind::login_attempt, {{"success", true}});
  };
  login(b.human_failed_login_prob);
  w.advance(human ? rng.between(1000, 3000) : 100);
  w.now(EventKind::page_nav, {{"page", "survey"}});

  // Questionnaire: answers, pointer trace, scrolling and searching share one timeline.
  const std::size_t nq = ctx.items.size();
  std::vector<double> durations;
  if (human) {
    const double mean = a.archetype == Archetype::inattentive ? a.profile.response_mean_ms * 0.7
                                                               : a.profile.response_mean_ms;
    durations = matched_lognormal(rng, nq, mean, a.profile.response_cv);
  } else {
    durations = jittered_constant(rng, nq, smart ? b.smart_bot_response_ms : b.genai_bot_response_ms,
                                  b.bot_timing_jitter);
  }

  const std::int64_t t0 = w.t();
  std::vector<Timed> timed;
  double t = static_cast<double>(t0);
  for (std::size_t i = 0; i < nq; ++i) {
    const QuestionSpec& q = *ctx.items[i];
    t += durations[i];
    int option = 0;
    const AttentionCheck* check = ctx.study.find_check(q.id);
    if (check != nullptr) {
      const bool pass = a.archetype == Archetype::inattentive ? false : smart ? rng.bernoulli(0.5) : true;
      option = attention_option(rng, q, *check, pass);
    } else if (a.archetype == Archetype::puppet && !a.preferred.empty() && rng.bernoulli(0.7)) {
      option = a.preferred[i];
    } else {
      option = static_cast<int>(rng.below(q.options.size()));
    }
    Json payload{{"question_id", q.id},
                 {"option_id", option},
                 {"shown_position", option},
                 {"duration_ms", std::llround(durations[i])}};
    if (!human) {
      // Bots click straight on the option they pick.
      timed.push_back({std::llround(t) - 5, EventKind::click, {{"x", 400.0}, {"y", 300.0 + 40.0 * option}}});
    }
    timed.push_back({std::llround(t), EventKind::answer, std::move(payload)});
  }
  const double t_end = t;

  if (human) {
    // Pointer trace: active moves at the profile speed, plus idle pauses.
    const int idle_n = static_cast<int>(std::lround(a.profile.idle_fraction * (kPointerSamples - 1)));
    const auto active = matched_lognormal(rng, kPointerSamples - 1 - idle_n, 450.0, 0.3);
    std::vector<double> gaps(active);
    for (int i = 0; i < idle_n; ++i) gaps.push_back(1500.0 + 2000.0 * (i + 0.5) / idle_n);
    for (std::size_t i = gaps.size(); i > 1; --i) std::swap(gaps[i - 1], gaps[rng.below(i)]);
    double x = 200.0 + (kScreenW - 400.0) * rng.uniform();
    double y = 200.0 + (kScreenH - 400.0) * rng.uniform();
    double pt = static_cast<double>(t0) + 200.0;
    timed.push_back({std::llround(pt), EventKind::click, {{"x", std::round(x)}, {"y", std::round(y)}}});
    for (double gap : gaps) {
      const double moving = std::min(gap, kMouseIdleGapMs);
      const double dist = a.profile.pointer_speed * moving / 1000.0;
      double nx = x;
      double ny = y;
      for (int attempt = 0; attempt < 64; ++attempt) {
        const double ang = 2.0 * 3.14159265358979323846 * rng.uniform();
        nx = x + dist * std::cos(ang);
        ny = y + dist * std::sin(ang);
        if (nx >= 0.0 && nx <= kScreenW && ny >= 0.0 && ny <= kScreenH) break;
      }
      nx = std::clamp(nx, 0.0, kScreenW);
      ny = std::clamp(ny, 0.0, kScreenH);
      pt += gap;
      x = nx;
      y = ny;
      timed.push_back({std::llround(pt), EventKind::click, {{"x", std::round(x)}, {"y", std::round(y)}}});
    }
    const auto span = std::max(1.0, t_end - static_cast<double>(t0));
    const auto ups = std::lround(a.profile.scroll_up);
    const auto downs = std::lround(a.profile.scroll_down);
    for (long i = 0; i < ups; ++i)
      timed.push_back({t0 + std::llround(span * rng.uniform()), EventKind::scroll_up, Json::object()});
    for (long i = 0; i < downs; ++i)
      timed.push_back({t0 + std::llround(span * rng.uniform()), EventKind::scroll_down, Json::object()});
    if (rng.bernoulli(b.human_search_prob)) {
      const int searches = static_cast<int>(rng.between(1, 2));
      for (int i = 0; i < searches; ++i)
        timed.push_back({t0 + std::llround(span * rng.uniform()), EventKind::search,
                         {{"term_hash", sha1_hex("term-" + std::to_string(rng.below(40)))}}});
    }
  } else if (genai) {
    for (std::size_t i = 0; i < nq; ++i)
      timed.push_back({t0 + std::llround((t_end - static_cast<double>(t0)) * (static_cast<double>(i) + 0.5) /
                                          static_cast<double>(nq)),
                       EventKind::scroll_down, Json::object()});
  }
  std::stable_sort(timed.begin(), timed.end(), [](const Timed& l, const Timed& r) { return l.t < r.t; });
  for (auto& ev : timed) w.at(ev.t, ev.kind, std::move(ev.payload));

  // Free-form feedback, typed.
  for (const auto& fq : ctx.pop.freeform_questions) {
    std::string text;
    if (smart) text = std::string(pick(rng, kStubs));
    else if (genai) text = genai_text(rng);
    else if (a.archetype == Archetype::inattentive && rng.bernoulli(0.3)) text = std::string(pick(rng, kStubs));
    else text = human_text(rng);
    w.advance(human ? rng.between(2500, 5000) : 200);
    type(std::min<std::size_t>(text.size(), 60));
    w.advance(200);
    w.now(EventKind::freeform, {{"question_id", fq}, {"text", text}});
  }
  w.advance(500);
  w.now(EventKind::page_nav, {{"page", "done"}});

  if (human && rng.bernoulli(b.return_prob)) {
    w.set_session(2, rng.between(86'400'000, 3 * 86'400'000));
    // Puppeteers juggling many accounts forget passwords more often.
    login(a.archetype == Archetype::puppet ? std::min(1.0, 3.0 * b.human_failed_login_prob)
                                           : b.human_failed_login_prob);
    w.advance(rng.between(1000, 3000));
    w.now(EventKind::page_nav, {{"page", "done"}});
  }
  return std::move(w.events());
}

std::string pin_digits(std::uint64_t pin, std::int64_t space) {
  const auto width = std::to_string(std::max<std::int64_t>(space - 1, 0)).size();
  auto s = std::to_string(pin);
  if (s.size() < width) s.insert(0, width - s.size(), '0');
  return s;
}

}  // namespace

SyntheticStudy generate(const PopulationSpec& population, const StudySpec& study) {
  validate_population(population);
  for (const auto& g : population.groups)
    if (!study.groups.empty() && !study.has_group(g.group_id))
      throw std::invalid_argument("population group '" + g.group_id + "' is not declared in the study spec");

  Context ctx{population, study, {}};
  for (const auto& q : study.questions) ctx.items.push_back(&q);

  Rng rng(mix_seed(population.seed, 0x5eed));
  std::unordered_set<std::string> used_ids;
  auto new_pid = [&] {
    std::string id;
    do id = "A" + random_string(rng, 13, kAlnum);
    while (!used_ids.insert(id).second);
    return id;
  };
  auto new_token = [&](std::string_view prefix) { return std::string(prefix) + random_string(rng, 16, kAlnum); };
  auto new_password = [&] { return random_string(rng, static_cast<std::size_t>(rng.between(9, 14)), kPasswordChars); };

  const bool pin_mode = population.secret_mode == SecretMode::pin;
  std::map<std::string, std::unordered_set<std::uint64_t>> pins_used;
  auto new_pin = [&](const std::string& group) {
    auto& used = pins_used[group];
    if (static_cast<std::int64_t>(used.size()) >= study.pin_space_size)
      throw std::invalid_argument("group '" + group + "' needs more distinct PINs than the PIN space holds");
    std::uint64_t pin;
    do pin = rng.below(static_cast<std::uint64_t>(study.pin_space_size));
    while (!used.insert(pin).second);
    return pin_digits(pin, study.pin_space_size);
  };
  auto secret_for = [&](const std::string& group) { return pin_mode ? new_pin(group) : new_password(); };

  SyntheticStudy out;
  std::vector<Actor> actors;
  const auto& b = population.behavior;

  auto make_human = [&](const std::string& group, Archetype kind) {
    Actor a;
    a.pid = new_pid();
    a.group_id = group;
    a.archetype = kind;
    a.profile = draw_profile(rng, b);
    a.secret = secret_for(group);
    a.fingerprint = new_token("fp-");
    a.storage = new_token("st-");
    a.seed = rng.next();
    return a;
  };

  // Replay bots of the whole population replay one recorded session.
  std::optional<Actor> recording;
  int puppeteer_no = 0;
  for (const auto& g : population.groups) {
    for (int i = 0; i < g.valid; ++i) actors.push_back(make_human(g.group_id, Archetype::valid));
    for (int i = 0; i < g.inattentive; ++i) actors.push_back(make_human(g.group_id, Archetype::inattentive));

    for (const auto& ps : g.puppeteers) {
      const std::string op = "puppeteer-" + std::to_string(++puppeteer_no);
      const Profile base = draw_profile(rng, b);
      const std::string shared_password = pin_mode ? std::string() : new_password();
      const std::string shared_pin = pin_mode ? new_pin(g.group_id) : std::string();
      const std::string fp = new_token("fp-");
      const std::string st = new_token("st-");
      std::vector<int> preferred;
      for (const auto* q : ctx.items) preferred.push_back(static_cast<int>(rng.below(q->options.size())));
      if (!pin_mode && ps.occurrences > 0) out.frequency_table.set(sha1_hex(shared_password), ps.occurrences);

      for (int j = 0; j < ps.k; ++j) {
        Actor a;
        a.pid = new_pid();
        a.group_id = g.group_id;
        a.archetype = Archetype::puppet;
        a.operator_id = op;
        a.profile = perturb_profile(rng, base, b);
        a.preferred = preferred;
        const bool same_browser = rng.bernoulli(population.token_sharing_prob);
        a.fingerprint = same_browser ? fp : new_token("fp-");
        a.storage = same_browser ? st : new_token("st-");
        if (pin_mode) {
          // The stored PIN only carries over inside the shared browser.
          a.secret = same_browser ? shared_pin : new_pin(g.group_id);
        } else {
          a.secret = rng.bernoulli(population.secret_sharing_prob) ? shared_password : new_password();
        }
        a.seed = rng.next();
        actors.push_back(std::move(a));
      }
    }

    for (int i = 0; i < g.replay_bots; ++i) {
      if (!recording) {
        recording = make_human(g.group_id, Archetype::replay_bot);
        recording->operator_id = "replay-operator";
      }
      Actor a = *recording;
      a.pid = new_pid();
      a.group_id = g.group_id;
      if (pin_mode) a.secret = new_pin(g.group_id);
      actors.push_back(std::move(a));
    }
    for (int i = 0; i < g.smart_bots; ++i) {
      Actor a = make_human(g.group_id, Archetype::smart_bot);
      actors.push_back(std::move(a));
    }
    for (int i = 0; i < g.genai_bots; ++i) {
      Actor a = make_human(g.group_id, Archetype::genai_bot);
      actors.push_back(std::move(a));
    }
  }

  // Interleave participants so no archetype sits in a contiguous block.
  for (std::size_t i = actors.size(); i > 1; --i) std::swap(actors[i - 1], actors[rng.below(i)]);

  std::ostringstream log;
  for (const auto& a : actors) {
    const std::string hash = sha1_hex(a.secret);
    for (const auto& ev : script_actor(a, ctx, hash)) log << event_to_json(ev).dump() << '\n';

    TruthLabel label;
    label.operator_id = a.operator_id;
    switch (a.archetype) {
      case Archetype::valid: label.label = LabelClass::valid; break;
      case Archetype::inattentive: label.label = LabelClass::inattentive; break;
      case Archetype::puppet: label.label = LabelClass::puppet; break;
      case Archetype::replay_bot:
        label.label = LabelClass::bot;
        label.bot_kind = BotKind::replay;
        break;
      case Archetype::smart_bot:
        label.label = LabelClass::bot;
        label.bot_kind = BotKind::smart;
        break;
      case Archetype::genai_bot:
        label.label = LabelClass::bot;
        label.bot_kind = BotKind::genai;
        break;
    }
    out.truth.emplace(a.pid, std::move(label));
  }
  out.log = log.str();

  auto ingested = ingest_events(out.log, study);
  for (const auto& d : ingested.diagnostics)
    if (d.severity == Severity::error)
      throw std::logic_error("generated log failed ingestion: " + d.message);
  out.dataset = std::move(ingested.dataset);
  return out;
}

// ---------------------------------------------------------------------------
// Evaluation

namespace {

LabelScores scores(std::int64_t tp, std::int64_t predicted, std::int64_t actual) {
  LabelScores s;
  s.support = static_cast<int>(actual);
  s.precision = predicted > 0 ? static_cast<double>(tp) / static_cast<double>(predicted) : 1.0;
  s.recall = actual > 0 ? static_cast<double>(tp) / static_cast<double>(actual) : 1.0;
  s.f1 = s.precision + s.recall > 0.0 ? 2.0 * s.precision * s.recall / (s.precision + s.recall) : 0.0;
  return s;
}

}  // namespace

EvalMetrics evaluate(const std::map<std::string, LabelClass>& predicted, const GroundTruth& truth) {
  for (const auto& [id, _] : predicted)
    if (!truth.contains(id)) throw std::domain_error("evaluate: prediction for unknown id '" + id + "'");
  EvalMetrics m;
  for (const auto& [id, t] : truth) {
    const auto it = predicted.find(id);
    if (it == predicted.end()) throw std::domain_error("evaluate: no prediction for '" + id + "'");
    ++m.confusion[static_cast<int>(t.label)][static_cast<int>(it->second)];
  }
  for (int c = 0; c < kLabelClassCount; ++c) {
    std::int64_t predicted_c = 0;
    std::int64_t actual_c = 0;
    for (int o = 0; o < kLabelClassCount; ++o) {
      predicted_c += m.confusion[o][c];
      actual_c += m.confusion[c][o];
    }
    m.per_label[static_cast<LabelClass>(c)] = scores(m.confusion[c][c], predicted_c, actual_c);
  }
  return m;
}

Json metrics_to_json(const EvalMetrics& m) {
  Json labels = Json::object();
  for (const auto& [c, sc] : m.per_label)
    labels[std::string(to_string(c))] = {
        {"precision", sc.precision}, {"recall", sc.recall}, {"f1", sc.f1}, {"support", sc.support}};
  Json confusion = Json::object();
  for (int t = 0; t < kLabelClassCount; ++t) {
    Json row = Json::object();
    for (int p = 0; p < kLabelClassCount; ++p)
      row[std::string(to_string(static_cast<LabelClass>(p)))] = m.confusion[t][p];
    confusion[std::string(to_string(static_cast<LabelClass>(t)))] = row;
  }
  return {{"per_label", labels}, {"confusion", confusion}};
}

Json pairwise_to_json(const PairwiseScores& s) {
  return {{"precision", s.precision},         {"recall", s.recall},
          {"f1", s.f1},                       {"true_pairs", s.true_pairs},
          {"predicted_pairs", s.predicted_pairs}, {"correct_pairs", s.correct_pairs}};
}

PairwiseScores evaluate_pairs(const std::vector<std::vector<std::string>>& predicted_groups, const GroundTruth& truth) {
  auto op_of = [&](const std::string& id) -> const std::string& {
    const auto it = truth.find(id);
    if (it == truth.end()) throw std::domain_error("evaluate_pairs: unknown id '" + id + "'");
    return it->second.operator_id;
  };

  std::map<std::string, std::int64_t> per_operator;
  for (const auto& [id, t] : truth)
    if (!t.operator_id.empty()) ++per_operator[t.operator_id];

  PairwiseScores s;
  for (const auto& [_, n] : per_operator) s.true_pairs += n * (n - 1) / 2;

  // A pair predicted by several groups counts once.
  std::set<std::pair<std::string, std::string>> predicted;
  for (const auto& g : predicted_groups) {
    std::vector<std::string> members(g.begin(), g.end());
    std::sort(members.begin(), members.end());
    members.erase(std::unique(members.begin(), members.end()), members.end());
    for (std::size_t i = 0; i < members.size(); ++i) {
      op_of(members[i]);
      for (std::size_t j = i + 1; j < members.size(); ++j) predicted.emplace(members[i], members[j]);
    }
  }
  s.predicted_pairs = static_cast<std::int64_t>(predicted.size());
  for (const auto& [x, y] : predicted) {
    const auto& ox = op_of(x);
    if (!ox.empty() && ox == op_of(y)) ++s.correct_pairs;
  }
  const auto sc = scores(s.correct_pairs, s.predicted_pairs, s.true_pairs);
  s.precision = sc.precision;
  s.recall = sc.recall;
  s.f1 = sc.f1;
  return s;
}

}  // namespace puppetscan
