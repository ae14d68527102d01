#include <doctest.h>

#include <cmath>
#include <random>
#include <stdexcept>

#include "oracles.hpp"
#include "puppetscan/binomial.hpp"

using puppetscan::binomial_tail;
using puppetscan::birthday_collision_prob;

namespace {

double ln_tail(std::int64_t n, std::int64_t k, double p) { return static_cast<double>(binomial_tail(n, k, p).log()); }

}  // namespace

TEST_CASE("binomial_tail: k = 0 is certain") {
  CHECK(binomial_tail(558, 0, 0.3).value() == 1.0);
  CHECK(binomial_tail(0, 0, 0.0).value() == 1.0);
}

TEST_CASE("binomial_tail: closed form for n = 10, k = 2, p = 1/2") {
  // 1 - (C(10,0) + C(10,1)) / 2^10
  CHECK(binomial_tail(10, 2, 0.5).value() == doctest::Approx(1013.0 / 1024.0).epsilon(1e-14));
}

TEST_CASE("binomial_tail: degenerate probabilities") {
  CHECK(binomial_tail(5, 3, 0.0).is_zero());
  CHECK(binomial_tail(5, 5, 1.0).value() == 1.0);
  CHECK(binomial_tail(5, 5, 0.5).value() == doctest::Approx(1.0 / 32.0).epsilon(1e-15));
}

TEST_CASE("binomial_tail: domain errors") {
  CHECK_THROWS_AS(binomial_tail(10, 11, 0.5), std::domain_error);
  CHECK_THROWS_AS(binomial_tail(10, -1, 0.5), std::domain_error);
  CHECK_THROWS_AS(binomial_tail(10, 2, -0.1), std::domain_error);
  CHECK_THROWS_AS(binomial_tail(10, 2, 1.5), std::domain_error);
  CHECK_THROWS_AS(binomial_tail(10, 2, std::nan("")), std::domain_error);
}

TEST_CASE("binomial_tail: agrees with the 50-digit oracle on the reference grid") {
  for (std::int64_t n : {10, 100, 558, 698}) {
    std::vector<std::int64_t> ks;
    for (std::int64_t k = 0; k <= 10; ++k) ks.push_back(k);
    ks.push_back(n);
    for (double p : {1e-10, 1e-5, 0.01, 0.5, 1.0}) {
      for (auto k : ks) {
        CAPTURE(n);
        CAPTURE(k);
        CAPTURE(p);
        const double want = oracle::ln_binomial_tail(n, k, p);
        const double got = ln_tail(n, k, p);
        // |d ln P| bounds the relative error of P.
        CHECK(std::fabs(got - want) <= 1e-9);
      }
    }
  }
}

TEST_CASE("binomial_tail: results far below the double range keep their precision") {
  // p = 1e-10, every one of 698 trials succeeds: ln P = 698 ln(1e-10).
  const double want = 698.0 * std::log(1e-10);
  CHECK(ln_tail(698, 698, 1e-10) == doctest::Approx(want).epsilon(1e-14));
  CHECK(binomial_tail(698, 698, 1e-10).log10() == doctest::Approx(-6980.0).epsilon(1e-12));
}

TEST_CASE("binomial_tail: a three-way collision at p = 4.12e-5 among 558") {
  const double want = oracle::ln_binomial_tail(558, 3, 4.12e-5);
  CHECK(std::fabs(ln_tail(558, 3, 4.12e-5) - want) <= 1e-9);
  // About 1.98e-6; the printed figure for this setting is 1.6e-5.
  CHECK(binomial_tail(558, 3, 4.12e-5).value() == doctest::Approx(1.98e-6).epsilon(0.01));
}

TEST_CASE("binomial_tail: agrees with Monte Carlo within 3 standard errors") {
  for (std::int64_t n : {10, 100}) {
    for (double p : {0.01, 0.5, 1.0}) {
      if (p * static_cast<double>(n) < 0.1) continue;
      const auto est = oracle::binomial_tail_mc(n, p, 1'000'000, 0xC0FFEE + static_cast<std::uint64_t>(n));
      for (std::int64_t k = 0; k <= 10; ++k) {
        CAPTURE(n);
        CAPTURE(p);
        CAPTURE(k);
        const double truth = binomial_tail(n, k, p).value();
        CHECK(std::fabs(est.tail[static_cast<std::size_t>(k)] - truth) <= oracle::three_se(truth, est.draws));
      }
    }
  }
}

TEST_CASE("binomial_tail: non-increasing in k, non-decreasing in p") {
  std::mt19937_64 rng(7);
  std::uniform_int_distribution<std::int64_t> nd(1, 700);
  std::uniform_real_distribution<double> pd(0.0, 1.0);
  for (int trial = 0; trial < 2000; ++trial) {
    const auto n = nd(rng);
    const auto k = std::uniform_int_distribution<std::int64_t>(0, n - 1)(rng);
    const double p1 = std::pow(pd(rng), 4.0);
    const double p2 = std::min(1.0, p1 + pd(rng) * (1.0 - p1));
    CAPTURE(n);
    CAPTURE(k);
    CAPTURE(p1);
    CAPTURE(p2);
    CHECK(ln_tail(n, k + 1, p1) <= ln_tail(n, k, p1) + 1e-12);
    CHECK(ln_tail(n, k, p1) <= ln_tail(n, k, p2) + 1e-12);
  }
}

TEST_CASE("birthday_collision_prob: boundaries") {
  CHECK(birthday_collision_prob(0, 10000) == 0.0);
  CHECK(birthday_collision_prob(1, 10000) == 0.0);
  CHECK(birthday_collision_prob(10001, 10000) == 1.0);
  CHECK(birthday_collision_prob(2, 1) == 1.0);
  CHECK(birthday_collision_prob(2, 2) == doctest::Approx(0.5));
  CHECK_THROWS_AS(birthday_collision_prob(-1, 10), std::domain_error);
  CHECK_THROWS_AS(birthday_collision_prob(3, 0), std::domain_error);
}

TEST_CASE("birthday_collision_prob: the classic 23 people") {
  CHECK(birthday_collision_prob(23, 365) == doctest::Approx(0.507297).epsilon(1e-5));
}

TEST_CASE("birthday_collision_prob: 181 PINs from 10^4 is far from the printed 0.00016") {
  const double p = birthday_collision_prob(181, 10000);
  CHECK(p == doctest::Approx(0.8058).epsilon(1e-3));
  CHECK(p > 1000 * 0.00016);
}

TEST_CASE("birthday_collision_prob: monotone in n and m") {
  for (std::int64_t m : {50, 365, 10000}) {
    double prev = 0.0;
    for (std::int64_t n = 0; n <= 400; n += 7) {
      const double cur = birthday_collision_prob(n, m);
      CHECK(cur >= prev);
      CHECK(birthday_collision_prob(n, m + 13) <= cur);
      prev = cur;
    }
  }
}

TEST_CASE("birthday_collision_prob: agrees with Monte Carlo") {
  struct Case {
    std::int64_t n, m;
  };
  for (auto [n, m] : {Case{23, 365}, Case{181, 10000}, Case{100, 1000000}}) {
    const std::int64_t trials = 1'000'000;
    const double mc = oracle::birthday_mc(n, m, trials, 99 + static_cast<std::uint64_t>(n));
    const double exact = birthday_collision_prob(n, m);
    CAPTURE(n);
    CAPTURE(m);
    CHECK(std::fabs(mc - exact) <= oracle::three_se(exact, trials));
  }
}
