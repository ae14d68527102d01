#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "puppetscan/binomial.hpp"

namespace puppetscan {

/// The seven human-vs-bot indicators, evaluated over a whole cluster.
struct SignalVector {
  bool identical_search_term = false;
  bool no_search = false;
  bool identical_scrolling = false;
  bool no_scrolling = false;
  bool default_first_item_only = false;
  bool identical_patterns = false;
  bool no_incorrect_login_attempts = false;

  int count() const;
  bool operator==(const SignalVector&) const = default;
};

enum class Evidence { secret_collision, pin_collision, machine_token, behavioral };

std::string_view to_string(Evidence e);
Evidence parse_evidence(std::string_view name);

struct PuppetCluster {
  /// Sorted participant ids; size() == k.
  std::vector<std::string> members;
  Evidence evidence = Evidence::secret_collision;
  /// Probability of the shared artifact (secret frequency or 1/PIN space).
  std::optional<double> p;
  /// Present iff evidence == secret_collision.
  std::optional<LogProbability> tail_prob;
  std::optional<std::string> group_id;
  /// The shared hash or token behind the cluster, when there is one.
  std::optional<std::string> artifact;
  std::optional<SignalVector> signals;

  std::size_t k() const { return members.size(); }
};

}  // namespace puppetscan
