#include <doctest.h>

#include "echosim/errors.hpp"
#include "echosim/rng.hpp"
#include "echosim/update.hpp"
#include "sample_prompt.hpp"
#include "scripted_client.hpp"

using namespace echosim;
using echosim::testing::ScriptedClient;

namespace {

LlmUpdateParams params() {
  LlmUpdateParams p;
  p.model = "mock";
  p.frequency_penalty = 0.25;
  return p;
}

}  // namespace

TEST_SUITE("llm_update") {
  TEST_CASE("well-formed reply is recorded") {
    ScriptedClient client;
    client.push("My stance after the discussion is: Neutral, and my reason is: Both views have merit.");
    const auto ctx = echosim::testing::sample_context();
    const auto out = llm_update(ctx, client, params(), PromptTemplate::bundled("en"));
    CHECK(out.status == UpdateStatus::kOk);
    CHECK(out.attempts == 1);
    CHECK(out.opinion == Opinion{0, "Both views have merit."});

    const auto reqs = client.requests();
    REQUIRE(reqs.size() == 1);
    CHECK(reqs[0].model == "mock");
    CHECK(reqs[0].frequency_penalty == doctest::Approx(0.25));
    CHECK(reqs[0].messages[0].content == build_prompt(ctx));
  }

  TEST_CASE("garbage three times keeps the prior opinion") {
    ScriptedClient client;
    for (int i = 0; i < 3; ++i) client.push("I cannot answer that.");
    const auto ctx = echosim::testing::sample_context();
    const auto out = llm_update(ctx, client, params(), PromptTemplate::bundled("en"));
    CHECK(out.status == UpdateStatus::kParseFallback);
    CHECK(out.attempts == 3);
    CHECK(out.opinion == ctx.self_opinion);
    CHECK(client.requests().size() == 3);
  }

  TEST_CASE("off-scale label counts as a parse failure and is retried") {
    ScriptedClient client;
    client.push("My stance after the discussion is: Maybe give, and my reason is: unsure");
    client.push("My stance after the discussion is: Better to give, and my reason is: convinced");
    const auto out = llm_update(echosim::testing::sample_context(), client, params(), PromptTemplate::bundled("en"));
    CHECK(out.status == UpdateStatus::kOk);
    CHECK(out.attempts == 2);
    CHECK(out.opinion.stance == -1);
  }

  TEST_CASE("transport errors propagate") {
    ScriptedClient client;  // empty script throws TransportError
    CHECK_THROWS_AS(llm_update(echosim::testing::sample_context(), client, params(), PromptTemplate::bundled("en")),
                    TransportError);
  }

  TEST_CASE("reasons disabled yields an empty reason") {
    ScriptedClient client;
    client.push("My stance after the discussion is: Absolutely must give");
    auto ctx = echosim::testing::sample_context();
    ctx.reasons_enabled = false;
    const auto out = llm_update(ctx, client, params(), PromptTemplate::bundled("en"));
    CHECK(out.opinion == Opinion{-2, ""});
  }

  TEST_CASE("updater adapter delegates") {
    auto client = std::make_shared<ScriptedClient>();
    client->push("My stance after the discussion is: Better not to give, and my reason is: r");
    LlmUpdater updater(client, params(), PromptTemplate::bundled("en"));
    Rng rng(0);
    CHECK(updater.update(echosim::testing::sample_context(), rng).opinion.stance == 1);
  }
}
