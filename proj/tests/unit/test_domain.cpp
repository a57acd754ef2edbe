#include <doctest.h>

#include <cmath>
#include <set>

#include "echosim/domain.hpp"
#include "echosim/errors.hpp"
#include "echosim/rng.hpp"
#include "fixtures.hpp"

using namespace echosim;
using echosim::testing::base_config;

TEST_SUITE("domain") {
  TEST_CASE("scale rejects malformed entry sets") {
    CHECK_THROWS_AS(StanceScale::from_entries({{"a", 0}}), ConfigError);
    CHECK_THROWS_AS(StanceScale::from_entries({{"a", 2}, {"b", 1}, {"c", 0}, {"d", -1}, {"e", 3}}), ConfigError);
    CHECK_THROWS_AS(StanceScale::from_entries({{"a", 2}, {"b", 1}, {"c", 0}, {"d", -1}, {"e", -1}}), ConfigError);
    CHECK_THROWS_AS(StanceScale::from_entries({{"a", 2}, {"b", 1}, {"c", 0}, {"d", -1}, {"a", -2}}), ConfigError);
    CHECK_THROWS_AS(StanceScale::from_entries({{"a", 2}, {"b", 1}, {"", 0}, {"d", -1}, {"e", -2}}), ConfigError);

    const auto scale = echosim::testing::ai_topic().scale;
    CHECK(scale.label_of(1) == "Better not to give");
    CHECK(scale.value_of("Better to give") == -1);
    CHECK_FALSE(scale.value_of("Maybe give").has_value());
    CHECK(scale.values_ascending() == std::vector<StanceValue>{-2, -1, 0, 1, 2});
  }

  TEST_CASE("uniform allocation over 100 agents gives 20 per stance") {
    auto c = base_config();
    Rng rng(7);
    const auto pop = build_population(c, c.reason_bank, rng);
    const auto h = histogram(pop.stances());
    for (StanceValue s = kMinStance; s <= kMaxStance; ++s) CHECK(h.at(s) == 20);
  }

  TEST_CASE("degenerate distribution puts everyone on one stance") {
    auto c = base_config();
    c.M = 10;
    c.initial_distribution = {{-2, 1.0}};
    Rng rng(3);
    const auto pop = build_population(c, c.reason_bank, rng);
    for (const auto& a : pop.agents) CHECK(a.opinion.stance == -2);
  }

  TEST_CASE("skewed distribution: 60 percent at better-to-give") {
    auto c = base_config();
    c.initial_distribution = {{-2, 0.1}, {-1, 0.6}, {0, 0.1}, {1, 0.1}, {2, 0.1}};
    Rng rng(11);
    const auto h = histogram(build_population(c, c.reason_bank, rng).stances());
    CHECK(h.at(-2) == 10);
    CHECK(h.at(-1) == 60);
    CHECK(h.at(0) == 10);
    CHECK(h.at(1) == 10);
    CHECK(h.at(2) == 10);
    CHECK(c.topic.scale.label_of(-1) == "Better to give");
  }

  TEST_CASE("largest remainder stays within one agent of the exact share") {
    std::mt19937_64 gen(99);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::uniform_int_distribution<int> m_dist(1, 257);
    for (int iter = 0; iter < 500; ++iter) {
      std::vector<double> raw(5);
      double sum = 0;
      for (auto& r : raw) sum += (r = u(gen));
      std::vector<DistributionEntry> dist;
      for (int s = 0; s < 5; ++s) dist.push_back({s - 2, raw[s] / sum});
      const int m = m_dist(gen);
      const auto counts = allocate_counts(dist, m);
      int total = 0;
      for (const auto& e : dist) {
        CHECK(std::abs(counts.at(e.stance) - e.fraction * m) < 1.0);
        total += counts.at(e.stance);
      }
      CHECK(total == m);
    }
  }

  TEST_CASE("remainder ties go to the lower stance") {
    // 0.2 * 7 = 1.4 everywhere: two leftover agents go to -2 and -1.
    std::vector<DistributionEntry> dist;
    for (int s = -2; s <= 2; ++s) dist.push_back({s, 0.2});
    const auto counts = allocate_counts(dist, 7);
    CHECK(counts.at(-2) == 2);
    CHECK(counts.at(-1) == 2);
    CHECK(counts.at(0) == 1);
    CHECK(counts.at(1) == 1);
    CHECK(counts.at(2) == 1);
  }

  TEST_CASE("population is deterministic and on-scale") {
    auto c = base_config();
    c.M = 57;
    Rng a(42), b(42);
    const auto p1 = build_population(c, c.reason_bank, a);
    const auto p2 = build_population(c, c.reason_bank, b);
    CHECK(p1 == p2);
    std::set<int> ids;
    for (const auto& agent : p1.agents) {
      CHECK(c.topic.scale.contains(agent.opinion.stance));
      CHECK_FALSE(agent.name.empty());
      CHECK_FALSE(agent.opinion.reason.empty());
      ids.insert(agent.id);
    }
    CHECK(ids.size() == 57);
  }

  TEST_CASE("validation catches bounds and bad fractions") {
    auto c = base_config();
    c.M = 10;
    c.N = 5;
    CHECK(validate_config(c).empty());

    c.N = 0;
    auto v = validate_config(c);
    REQUIRE(v.size() == 1);
    CHECK(v[0].rule == "N must be >= 1");

    c.N = 10;
    v = validate_config(c);
    REQUIRE(v.size() == 1);
    CHECK(v[0].rule == "N must be <= M-1");

    c.N = 5;
    c.initial_distribution = {{-2, 0.3}, {0, 0.3}, {2, 0.3}};
    v = validate_config(c);
    REQUIRE(v.size() == 1);
    CHECK(v[0].field == "initial_distribution");
  }

  TEST_CASE("validation reports every violation at once") {
    auto c = base_config();
    c.M = 0;
    c.K = -1;
    c.trials = 0;
    c.frequency_penalty = 5;
    CHECK(validate_config(c).size() >= 4);
  }
}
