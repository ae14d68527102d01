#include "puppetscan/collisions.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <stdexcept>

#include "puppetscan/hashing.hpp"

namespace puppetscan {
namespace {

std::string upper(std::string_view s) {
  std::string out(s);
  for (auto& c : out) c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
  return out;
}

bool is_sha1_hex(std::string_view s) {
  return s.size() == 40 && std::all_of(s.begin(), s.end(), [](unsigned char c) { return std::isxdigit(c); });
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

std::uint64_t parse_count(std::string_view s, std::size_t line_no) {
  std::uint64_t v = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || ptr != s.data() + s.size())
    throw std::invalid_argument("frequency table line " + std::to_string(line_no) + ": bad count");
  return v;
}

}  // namespace

int SignalVector::count() const {
  return identical_search_term + no_search + identical_scrolling + no_scrolling + default_first_item_only +
         identical_patterns + no_incorrect_login_attempts;
}

std::string_view to_string(Evidence e) {
  switch (e) {
    case Evidence::secret_collision: return "secret_collision";
    case Evidence::pin_collision: return "pin_collision";
    case Evidence::machine_token: return "machine_token";
    case Evidence::behavioral: return "behavioral";
  }
  return "behavioral";
}

Evidence parse_evidence(std::string_view name) {
  for (auto e : {Evidence::secret_collision, Evidence::pin_collision, Evidence::machine_token, Evidence::behavioral})
    if (to_string(e) == name) return e;
  throw std::invalid_argument("unknown evidence kind: " + std::string(name));
}

FrequencyTable::FrequencyTable(std::uint64_t total) : total_(total) {
  if (total == 0) throw std::invalid_argument("frequency table total must be positive");
}

void FrequencyTable::set(std::string_view hash, std::uint64_t count) {
  if (count > total_) throw std::invalid_argument("occurrence count exceeds corpus total");
  counts_[upper(hash)] = count;
}

std::uint64_t FrequencyTable::occurrences(std::string_view hash) const {
  const auto it = counts_.find(upper(hash));
  return it == counts_.end() ? 0 : it->second;
}

bool FrequencyTable::contains(std::string_view hash) const { return counts_.contains(upper(hash)); }

void FrequencyTable::write(std::ostream& out) const {
  std::map<std::string, std::uint64_t> sorted(counts_.begin(), counts_.end());
  out << "# total: " << total_ << '\n';
  for (const auto& [h, c] : sorted) out << h << ':' << c << '\n';
}

namespace {

FrequencyTable parse_frequency_table(std::istream& in, FrequencyFormat format,
                                     std::optional<std::uint64_t> sidecar_total) {
  std::optional<std::uint64_t> total;
  std::vector<std::pair<std::string, std::uint64_t>> rows;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto body = trim(line);
    if (body.empty()) continue;
    if (body.front() == '#') {
      auto directive = trim(body.substr(1));
      const auto colon = directive.find(':');
      if (colon == std::string_view::npos) continue;
      const auto key = trim(directive.substr(0, colon));
      const auto value = trim(directive.substr(colon + 1));
      if (key == "total") total = parse_count(value, line_no);
      if (key == "format" && format == FrequencyFormat::automatic)
        format = value == "plaintext" ? FrequencyFormat::plaintext : FrequencyFormat::hashed;
      continue;
    }
    // Plaintext secrets may contain ':'; the count follows the last one.
    const auto colon = body.rfind(':');
    if (colon == std::string_view::npos || colon == 0)
      throw std::invalid_argument("frequency table line " + std::to_string(line_no) + ": expected KEY:COUNT");
    const auto key = body.substr(0, colon);
    const auto count = parse_count(trim(body.substr(colon + 1)), line_no);
    bool hashed = format == FrequencyFormat::hashed || (format == FrequencyFormat::automatic && is_sha1_hex(key));
    if (hashed && !is_sha1_hex(key))
      throw std::invalid_argument("frequency table line " + std::to_string(line_no) + ": expected 40-hex SHA-1");
    rows.emplace_back(hashed ? upper(key) : sha1_hex(key), count);
  }
  if (!total) total = sidecar_total;
  if (!total) {
    std::uint64_t sum = 0;
    for (const auto& [_, c] : rows) sum += c;
    total = std::max<std::uint64_t>(sum, 1);
  }
  FrequencyTable table(*total);
  for (const auto& [h, c] : rows) table.set(h, c);
  return table;
}

}  // namespace

FrequencyTable load_frequency_table(std::istream& in, FrequencyFormat format) {
  return parse_frequency_table(in, format, std::nullopt);
}

FrequencyTable load_frequency_table(const std::string& path, FrequencyFormat format) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open frequency table " + path);
  std::optional<std::uint64_t> sidecar;
  if (std::ifstream side(path + ".total"); side) {
    std::string t;
    side >> t;
    sidecar = parse_count(t, 1);
  }
  return parse_frequency_table(in, format, sidecar);
}

double secret_probability(std::string_view secret_hash, const FrequencyTable& table) {
  const auto t = static_cast<double>(table.total());
  const auto o = table.occurrences(secret_hash);
  return o == 0 ? 1.0 / t : static_cast<double>(o) / t;
}

std::vector<PuppetCluster> detect_secret_collisions(const Dataset& dataset, const FrequencyTable& table,
                                                    const DetectorConfig& config) {
  std::map<std::string, std::vector<std::string>> by_hash;
  for (const auto& rec : dataset)
    if (rec.secret_kind == SecretKind::password && rec.secret_hash)
      by_hash[upper(*rec.secret_hash)].push_back(rec.participant_id);

  const auto n_cohort = config.cohort_size > 0 ? config.cohort_size : static_cast<std::int64_t>(dataset.size());
  const long double ln_alpha = std::log(static_cast<long double>(config.collision_alpha));

  std::vector<PuppetCluster> out;
  for (auto& [hash, members] : by_hash) {
    const auto k = static_cast<std::int64_t>(members.size());
    if (k < config.min_cluster_size) continue;
    PuppetCluster c;
    c.evidence = Evidence::secret_collision;
    c.p = secret_probability(hash, table);
    c.tail_prob = binomial_tail(std::max(n_cohort, k), k, *c.p);
    if (!(c.tail_prob->log() < ln_alpha)) continue;
    std::sort(members.begin(), members.end());
    c.members = std::move(members);
    c.artifact = hash;
    out.push_back(std::move(c));
  }
  std::stable_sort(out.begin(), out.end(), [](const PuppetCluster& a, const PuppetCluster& b) {
    if (*a.tail_prob < *b.tail_prob) return true;
    if (*b.tail_prob < *a.tail_prob) return false;
    return a.members.front() < b.members.front();
  });
  return out;
}

std::vector<PuppetCluster> detect_pin_collisions(const Dataset& dataset, const StudySpec& spec) {
  std::map<std::pair<std::string, std::string>, std::vector<std::string>> by_group_pin;
  for (const auto& rec : dataset)
    if (rec.secret_kind == SecretKind::pin && rec.secret_hash)
      by_group_pin[{rec.group_id, upper(*rec.secret_hash)}].push_back(rec.participant_id);

  std::vector<PuppetCluster> out;
  for (auto& [key, members] : by_group_pin) {
    if (members.size() < 2) continue;
    std::sort(members.begin(), members.end());
    PuppetCluster c;
    c.evidence = Evidence::pin_collision;
    c.members = std::move(members);
    c.p = 1.0 / static_cast<double>(spec.pin_space_size);
    c.group_id = key.first;
    c.artifact = key.second;
    out.push_back(std::move(c));
  }
  return out;
}

}  // namespace puppetscan
