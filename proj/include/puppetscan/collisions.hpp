#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "puppetscan/clusters.hpp"
#include "puppetscan/core_model.hpp"

namespace puppetscan {

/// Total prevalence count of the Pwned Passwords corpus; used when a table
/// carries no total of its own.
inline constexpr std::uint64_t kPwnedCorpusTotal = 5'579'399'834ULL;

/// Leaked-secret occurrence counts keyed by uppercase hex SHA-1.
class FrequencyTable {
 public:
  explicit FrequencyTable(std::uint64_t total = kPwnedCorpusTotal);

  /// Throws std::invalid_argument if count would exceed the total.
  void set(std::string_view hash, std::uint64_t count);
  std::uint64_t occurrences(std::string_view hash) const;
  bool contains(std::string_view hash) const;
  std::uint64_t total() const { return total_; }
  std::size_t size() const { return counts_.size(); }

  void write(std::ostream& out) const;

 private:
  std::uint64_t total_;
  std::unordered_map<std::string, std::uint64_t> counts_;
};

enum class FrequencyFormat { automatic, hashed, plaintext };

/// Parses `HEXHASH:COUNT` lines (or `secret:count` in plaintext mode, hashed
/// on load). The total comes from a `# total: N` header, else a `<path>.total`
/// sidecar, else the sum of counts. `# format: plaintext` switches modes.
FrequencyTable load_frequency_table(std::istream& in, FrequencyFormat format = FrequencyFormat::automatic);
FrequencyTable load_frequency_table(const std::string& path, FrequencyFormat format = FrequencyFormat::automatic);

/// o / t for a known secret, floored at 1 / t for unseen or zero-count secrets.
double secret_probability(std::string_view secret_hash, const FrequencyTable& table);

/// Password-hash collision clusters whose chance probability is below alpha,
/// ascending by tail probability.
std::vector<PuppetCluster> detect_secret_collisions(const Dataset& dataset, const FrequencyTable& table,
                                                    const DetectorConfig& config);

/// Accounts sharing a PIN within one group. Equal PINs in different groups are independent draws.
std::vector<PuppetCluster> detect_pin_collisions(const Dataset& dataset, const StudySpec& spec);

}  // namespace puppetscan
