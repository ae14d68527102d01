#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>

#include "oracles.hpp"
#include "puppetscan/collisions.hpp"
#include "puppetscan/hashing.hpp"

using namespace puppetscan;

namespace {

ParticipantRecord account(const std::string& id, const std::string& secret, const std::string& group = "g1",
                          SecretKind kind = SecretKind::password) {
  ParticipantRecord r;
  r.participant_id = id;
  r.group_id = group;
  r.secret_hash = secret;
  r.secret_kind = kind;
  return r;
}

Dataset cohort(std::size_t n) {
  Dataset ds;
  for (std::size_t i = 0; i < n; ++i) ds.push_back(account("u" + std::to_string(i), sha1_hex("pw" + std::to_string(i))));
  return ds;
}

}  // namespace

TEST_CASE("sha1_hex is uppercase Pwned-style") {
  CHECK(sha1_hex("password") == "5BAA61E4C9B93F3F0682250B6CF8331B7EE68FD8");
  CHECK(sha256_hex("abc") == "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
}

TEST_CASE("secret_probability") {
  FrequencyTable t;
  REQUIRE(t.total() == kPwnedCorpusTotal);

  SUBCASE("present with o = t") {
    FrequencyTable small(1000);
    small.set("AA", 1000);
    CHECK(secret_probability("AA", small) == 1.0);
  }
  SUBCASE("absent secret gets the 1/t floor") {
    const double p = secret_probability("FFFF", t);
    CHECK(p == doctest::Approx(1.0 / 5'579'399'834.0));
    CHECK(p == doctest::Approx(1.79e-10).epsilon(0.01));
    // Rounds to the smallest printed p at one significant figure.
    CHECK(std::round(p * 1e10) == 2.0);
  }
  SUBCASE("zero count is floored") {
    t.set("AB", 0);
    CHECK(secret_probability("AB", t) == 1.0 / static_cast<double>(kPwnedCorpusTotal));
  }
  SUBCASE("o / t") {
    t.set("AB", 229'872);
    CHECK(secret_probability("AB", t) == doctest::Approx(229'872.0 / 5'579'399'834.0));
  }
  SUBCASE("count above total is rejected") {
    FrequencyTable small(10);
    CHECK_THROWS_AS(small.set("AA", 11), std::invalid_argument);
  }
}

TEST_CASE("frequency table loader") {
  SUBCASE("hashed with total header") {
    std::istringstream in("# total: 1000\n5BAA61E4C9B93F3F0682250B6CF8331B7EE68FD8:12\n11f6ad8ec52a2984abaafd7c3b516503785c2072:3\n");
    const auto t = load_frequency_table(in);
    CHECK(t.total() == 1000);
    CHECK(t.occurrences("5BAA61E4C9B93F3F0682250B6CF8331B7EE68FD8") == 12);
    // Hashes are normalized to uppercase.
    CHECK(t.occurrences("11F6AD8EC52A2984ABAAFD7C3B516503785C2072") == 3);
  }
  SUBCASE("total defaults to the sum of counts") {
    std::istringstream in(sha1_hex("a") + ":2\n" + sha1_hex("b") + ":5\n");
    CHECK(load_frequency_table(in).total() == 7);
  }
  SUBCASE("plaintext is hashed on load") {
    std::istringstream in("# format: plaintext\n# total: 100\npassword:40\n");
    const auto t = load_frequency_table(in);
    CHECK(t.occurrences(sha1_hex("password")) == 40);
    std::istringstream in2("letmein:4\n");
    CHECK(load_frequency_table(in2, FrequencyFormat::plaintext).occurrences(sha1_hex("letmein")) == 4);
  }
  SUBCASE("malformed lines") {
    std::istringstream in("AA-2\n");
    CHECK_THROWS_AS(load_frequency_table(in), std::invalid_argument);
    std::istringstream short_hash("ABCD:2\n");
    CHECK_THROWS_AS(load_frequency_table(short_hash, FrequencyFormat::hashed), std::invalid_argument);
  }
  SUBCASE("automatic mode hashes keys that are not SHA-1") {
    std::istringstream in("hunter2:9\n");
    CHECK(load_frequency_table(in).occurrences(sha1_hex("hunter2")) == 9);
  }
  SUBCASE("write and reload") {
    FrequencyTable t(500);
    t.set(sha1_hex("a"), 2);
    t.set(sha1_hex("b"), 7);
    std::stringstream ss;
    t.write(ss);
    const auto back = load_frequency_table(ss);
    CHECK(back.total() == 500);
    CHECK(back.occurrences(sha1_hex("b")) == 7);
    CHECK(back.size() == 2);
  }
}

TEST_CASE("detect_secret_collisions: a three-way collision among 558") {
  auto ds = cohort(558);
  const std::string shared = sha1_hex("shared");
  for (int i = 0; i < 3; ++i) ds[static_cast<std::size_t>(i * 100)].secret_hash = shared;
  FrequencyTable t;
  t.set(shared, static_cast<std::uint64_t>(std::llround(4.12e-5 * static_cast<double>(kPwnedCorpusTotal))));
  const auto clusters = detect_secret_collisions(ds, t, DetectorConfig{});
  REQUIRE(clusters.size() == 1);
  const auto& c = clusters[0];
  CHECK(c.k() == 3);
  CHECK(c.evidence == Evidence::secret_collision);
  CHECK(c.p.value() == doctest::Approx(4.12e-5).epsilon(1e-6));
  REQUIRE(c.tail_prob.has_value());
  CHECK(std::fabs(static_cast<double>(c.tail_prob->log()) - oracle::ln_binomial_tail(558, 3, *c.p)) <= 1e-9);
  CHECK(c.members == std::vector<std::string>{"u0", "u100", "u200"});
  CHECK(c.artifact == shared);
}

TEST_CASE("detect_secret_collisions: distinct secrets give nothing") {
  CHECK(detect_secret_collisions(cohort(200), FrequencyTable{}, DetectorConfig{}).empty());
  CHECK(detect_secret_collisions(Dataset{}, FrequencyTable{}, DetectorConfig{}).empty());
}

TEST_CASE("detect_secret_collisions: common secrets above alpha are not clusters") {
  auto ds = cohort(558);
  ds[1].secret_hash = ds[0].secret_hash;
  FrequencyTable t;
  // A top-of-the-list password, roughly 1 in 60 leaked accounts.
  t.set(*ds[0].secret_hash, kPwnedCorpusTotal / 60);
  CHECK(detect_secret_collisions(ds, t, DetectorConfig{}).empty());
  DetectorConfig loose;
  loose.collision_alpha = 0.9999;
  CHECK(detect_secret_collisions(ds, t, loose).size() == 1);
}

TEST_CASE("detect_secret_collisions: sorted ascending by tail and a partition") {
  auto ds = cohort(300);
  // Groups of 2, 5 and 3 accounts.
  for (int i = 1; i < 2; ++i) ds[static_cast<std::size_t>(i)].secret_hash = ds[0].secret_hash;
  for (int i = 11; i < 15; ++i) ds[static_cast<std::size_t>(i)].secret_hash = ds[10].secret_hash;
  for (int i = 21; i < 23; ++i) ds[static_cast<std::size_t>(i)].secret_hash = ds[20].secret_hash;
  const auto clusters = detect_secret_collisions(ds, FrequencyTable{}, DetectorConfig{});
  REQUIRE(clusters.size() == 3);
  CHECK(clusters[0].k() == 5);
  CHECK(clusters[1].k() == 3);
  CHECK(clusters[2].k() == 2);
  std::set<std::string> seen;
  for (std::size_t i = 0; i < clusters.size(); ++i) {
    if (i > 0) CHECK(!(*clusters[i].tail_prob < *clusters[i - 1].tail_prob));
    CHECK(clusters[i].k() >= 2);
    for (const auto& m : clusters[i].members) CHECK(seen.insert(m).second);
  }
}

TEST_CASE("detect_secret_collisions: cohort size overrides n") {
  auto ds = cohort(10);
  ds[1].secret_hash = ds[0].secret_hash;
  DetectorConfig c;
  c.cohort_size = 10'000;
  const auto clusters = detect_secret_collisions(ds, FrequencyTable{}, c);
  REQUIRE(clusters.size() == 1);
  const double p = 1.0 / static_cast<double>(kPwnedCorpusTotal);
  CHECK(std::fabs(static_cast<double>(clusters[0].tail_prob->log()) - oracle::ln_binomial_tail(10'000, 2, p)) <= 1e-9);
}

TEST_CASE("detect_secret_collisions ignores PIN records") {
  Dataset ds{account("a", "P1", "g1", SecretKind::pin), account("b", "P1", "g1", SecretKind::pin)};
  CHECK(detect_secret_collisions(ds, FrequencyTable{}, DetectorConfig{}).empty());
}

TEST_CASE("detect_pin_collisions") {
  StudySpec spec;
  spec.groups = {{"g1", 2}, {"g2", 2}};
  SUBCASE("same group, same PIN") {
    Dataset ds{account("a", "P1", "g1", SecretKind::pin), account("b", "P1", "g1", SecretKind::pin)};
    const auto c = detect_pin_collisions(ds, spec);
    REQUIRE(c.size() == 1);
    CHECK(c[0].k() == 2);
    CHECK(c[0].evidence == Evidence::pin_collision);
    CHECK_FALSE(c[0].tail_prob.has_value());
    CHECK(c[0].group_id == "g1");
    CHECK(c[0].p.value() == doctest::Approx(1e-4));
  }
  SUBCASE("different groups, same PIN") {
    Dataset ds{account("a", "P1", "g1", SecretKind::pin), account("b", "P1", "g2", SecretKind::pin)};
    CHECK(detect_pin_collisions(ds, spec).empty());
  }
  SUBCASE("passwords are not PINs") {
    Dataset ds{account("a", "P1", "g1"), account("b", "P1", "g1")};
    CHECK(detect_pin_collisions(ds, spec).empty());
  }
}
