#include "puppetscan/binomial.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>
#include <vector>

namespace puppetscan {
namespace {

// Terms this far below the running maximum no longer move a long double sum.
constexpr long double kNegligibleLog = -100.0L;

}  // namespace

LogProbability LogProbability::zero() { return LogProbability(-std::numeric_limits<long double>::infinity()); }

double LogProbability::log10() const { return static_cast<double>(ln_ / std::log(10.0L)); }

double LogProbability::value() const { return static_cast<double>(std::exp(ln_)); }

bool LogProbability::is_zero() const { return std::isinf(ln_) && ln_ < 0; }

LogProbability binomial_tail(std::int64_t n, std::int64_t k, double p) {
  if (n < 0 || k < 0 || k > n) throw std::domain_error("binomial_tail: requires 0 <= k <= n");
  if (!(p >= 0.0 && p <= 1.0)) throw std::domain_error("binomial_tail: requires 0 <= p <= 1");
  if (k == 0) return LogProbability::one();
  if (p == 0.0) return LogProbability::zero();
  if (p == 1.0) return LogProbability::one();

  const long double lp = std::log(static_cast<long double>(p));
  const long double lq = std::log1p(-static_cast<long double>(p));

  // ln C(n, k) accumulated as a product of ratios, then the x = k term.
  long double lchoose = 0.0L;
  for (std::int64_t i = 1; i <= k; ++i)
    lchoose += std::log(static_cast<long double>(n - k + i) / static_cast<long double>(i));
  long double term = lchoose + static_cast<long double>(k) * lp + static_cast<long double>(n - k) * lq;

  // Terms are unimodal in x; keep them until we are past the mode and negligible.
  std::vector<long double> terms;
  long double max_term = term;
  for (std::int64_t x = k;; ++x) {
    terms.push_back(term);
    if (term > max_term) max_term = term;
    if (x == n) break;
    const long double next =
        term + std::log(static_cast<long double>(n - x) / static_cast<long double>(x + 1)) + lp - lq;
    if (next < term && next - max_term < kNegligibleLog) break;
    term = next;
  }

  // Neumaier-compensated sum of exp(term - max).
  long double sum = 0.0L;
  long double comp = 0.0L;
  for (long double t : terms) {
    const long double v = std::exp(t - max_term);
    const long double s = sum + v;
    if (std::fabs(sum) >= std::fabs(v))
      comp += (sum - s) + v;
    else
      comp += (v - s) + sum;
    sum = s;
  }
  long double ln = max_term + std::log(sum + comp);
  if (ln > 0.0L) ln = 0.0L;
  return LogProbability::from_log(ln);
}

double birthday_collision_prob(std::int64_t n_participants, std::int64_t space_size) {
  if (n_participants < 0 || space_size < 1)
    throw std::domain_error("birthday_collision_prob: requires n >= 0 and space_size >= 1");
  if (n_participants <= 1) return 0.0;
  if (n_participants > space_size) return 1.0;
  // ln prod (1 - i/m), then 1 - exp(.) via expm1 to keep small results exact.
  long double ln_no_collision = 0.0L;
  const auto m = static_cast<long double>(space_size);
  for (std::int64_t i = 1; i < n_participants; ++i) ln_no_collision += std::log1p(-static_cast<long double>(i) / m);
  const long double prob = -std::expm1(ln_no_collision);
  if (prob < 0.0L) return 0.0;
  if (prob > 1.0L) return 1.0;
  return static_cast<double>(prob);
}

}  // namespace puppetscan
