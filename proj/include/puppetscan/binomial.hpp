#pragma once

#include <cstdint>

namespace puppetscan {

/// A probability carried as its natural logarithm so that values far below
/// the smallest double (e.g. 1e-6000) keep full relative precision.
class LogProbability {
 public:
  LogProbability() = default;
  static LogProbability from_log(long double ln) { return LogProbability(ln); }
  static LogProbability zero();
  static LogProbability one() { return LogProbability(0.0L); }

  long double log() const { return ln_; }
  double log10() const;
  /// May underflow to 0 (or a subnormal) for very small probabilities.
  double value() const;
  bool is_zero() const;

  friend bool operator<(LogProbability a, LogProbability b) { return a.ln_ < b.ln_; }
  friend bool operator==(LogProbability a, LogProbability b) { return a.ln_ == b.ln_; }

 private:
  explicit LogProbability(long double ln) : ln_(ln) {}
  long double ln_ = 0.0L;
};

/// Upper binomial tail P(X >= k) for X ~ Binomial(n, p).
///
/// Summed directly over x = k..n in log space with compensated accumulation;
/// never formed as 1 - P(X < k), which loses everything below ~1e-16.
/// Throws std::domain_error unless 0 <= k <= n and 0 <= p <= 1.
LogProbability binomial_tail(std::int64_t n, std::int64_t k, double p);

/// Probability that at least two of n uniform draws from space_size values coincide.
double birthday_collision_prob(std::int64_t n_participants, std::int64_t space_size);

}  // namespace puppetscan
