#include <doctest.h>

#include <cmath>

#include "echosim/rng.hpp"
#include "echosim/update.hpp"
#include "fixtures.hpp"

using namespace echosim;

namespace {

UpdateContext ctx_with(StanceValue self, std::vector<StanceValue> partners) {
  UpdateContext ctx;
  ctx.topic = echosim::testing::ai_topic();
  ctx.self_opinion = {self, "keep"};
  for (std::size_t i = 0; i < partners.size(); ++i) ctx.partners.push_back({"p" + std::to_string(i), {partners[i], ""}});
  return ctx;
}

SurrogateParams weights(double wb, double wa, double sigma = 0.0) {
  SurrogateParams p;
  p.w_before = wb;
  p.w_around = wa;
  p.noise_sigma = sigma;
  return p;
}

// Partner stances whose mean is exactly `mean` (a multiple of 0.25), using
// four partners.
std::vector<StanceValue> partners_with_mean(double mean) {
  int total = static_cast<int>(std::lround(mean * 4));
  std::vector<StanceValue> out(4, 0);
  for (auto& s : out) {
    const int step = std::clamp(total, -2, 2);
    s = step;
    total -= step;
  }
  return out;
}

}  // namespace

TEST_SUITE("surrogate") {
  TEST_CASE("identity weights keep the stance") {
    Rng rng(1);
    for (int s = -2; s <= 2; ++s) {
      const auto op = surrogate_update(ctx_with(s, {2, -2, 0, 1}), weights(1, 0), rng);
      CHECK(op.stance == s);
      CHECK(op.reason == "keep");
    }
  }

  TEST_CASE("gpt4 weights overshoot and clamp at +2") {
    Rng rng(1);
    // 0.724*2 + 0.526*2 = 2.5
    CHECK(surrogate_update(ctx_with(2, {2, 2, 2}), weights(0.724, 0.526), rng).stance == 2);
  }

  TEST_CASE("stubborn weights hold a minority stance") {
    Rng rng(1);
    // 0.999*-1 + 0.00864*2 = -0.98172
    CHECK(surrogate_update(ctx_with(-1, {2, 2, 2, 2, 2}), weights(0.999, 0.00864), rng).stance == -1);
  }

  TEST_CASE("rounding is half away from zero") {
    Rng rng(1);
    CHECK(surrogate_update(ctx_with(1, {0}), weights(0.5, 0), rng).stance == 1);
    CHECK(surrogate_update(ctx_with(-1, {0}), weights(0.5, 0), rng).stance == -1);
    CHECK(surrogate_update(ctx_with(1, {0}), weights(0.49, 0), rng).stance == 0);
  }

  TEST_CASE("monotone in partner mean and always on-scale") {
    for (double wa : {0.1, 0.409, 0.526, 0.9}) {
      for (int self = -2; self <= 2; ++self) {
        int prev = -3;
        for (double mean = -2.0; mean <= 2.0 + 1e-9; mean += 0.25) {
          Rng rng(3);
          const auto partners = partners_with_mean(mean);
          const auto op = surrogate_update(ctx_with(self, partners), weights(0.724, wa), rng);
          CHECK(op.stance >= prev);
          prev = op.stance;
        }
      }
    }
    Rng rng(8);
    for (int i = 0; i < 2000; ++i) {
      const auto op = surrogate_update(ctx_with(i % 5 - 2, {2, 2, -2}), weights(1.5, 1.5, 2.0), rng);
      CHECK(op.stance >= -2);
      CHECK(op.stance <= 2);
    }
  }

  TEST_CASE("stochastic rounding matches the fractional part on average") {
    auto p = weights(0.3, 0);
    p.rounding = Rounding::kStochastic;
    Rng rng(5);
    int ones = 0;
    const int n = 20000;
    for (int i = 0; i < n; ++i) ones += surrogate_update(ctx_with(1, {0}), p, rng).stance;
    CHECK(std::abs(ones / double(n) - 0.3) < 0.02);
  }

  TEST_CASE("noise is reproducible per stream") {
    Rng a(99), b(99);
    const auto p = weights(0.724, 0.526, 0.3);
    for (int i = 0; i < 100; ++i) {
      CHECK(surrogate_update(ctx_with(i % 5 - 2, {1, 0}), p, a) == surrogate_update(ctx_with(i % 5 - 2, {1, 0}), p, b));
    }
  }

  TEST_CASE("preset weights") {
    auto check = [](const char* name, double wb, double wa) {
      const auto p = find_surrogate_preset(name);
      REQUIRE(p.has_value());
      CHECK(p->w_before == doctest::Approx(wb));
      CHECK(p->w_around == doctest::Approx(wa));
    };
    check("gpt35-en", 0.685, 0.409);
    check("gpt4-en", 0.724, 0.526);
    check("gpt35-ja", 0.0758, 0.901);
    check("gpt4-ja", 0.787, 0.410);
    check("stubborn", 0.999, 0.00864);
    check("swayed", 0.203, 0.895);
    check("neutral", 0.724, 0.526);
    check("identity", 1.0, 0.0);
    CHECK_FALSE(find_surrogate_preset("gpt5").has_value());

    const auto stubborn = find_persona_preset("stubborn");
    REQUIRE(stubborn.has_value());
    CHECK(stubborn->persona_text == "You are a stubborn person and always think you are right.");
    CHECK(stubborn->surrogate_preset == "stubborn");
    const auto swayed = find_persona_preset("swayed");
    REQUIRE(swayed.has_value());
    CHECK(swayed->persona_text ==
          "You are easily swayed by your surroundings and immediately assume that other people's opinions are "
          "correct.");
    CHECK(find_persona_preset("neutral")->persona_text.empty());
  }
}
