#include <doctest.h>

#include <random>
#include <string>
#include <vector>

#include "echosim/errors.hpp"
#include "echosim/update.hpp"
#include "fixtures.hpp"

using namespace echosim;

namespace {

const StanceScale& scale() {
  static const auto s = echosim::testing::ai_topic().scale;
  return s;
}

// Reasons of 1..50 words drawn from a vocabulary with punctuation, digits and
// label fragments.
std::string random_reason(std::mt19937_64& gen) {
  static const std::vector<std::string> vocab = {
      "AI",      "rights",   "must",  "give",     "not",   "Neutral", "society", "humans,", "trust.",
      "\"fair\"", "50%",      "it's",  "better",   "we",    "should",  "(maybe)", "laws;",   "and",
      "reason",  "emotions!", "self",  "Absolutely", "dignity", "2024", "-",     "unclear?", "résumé"};
  std::uniform_int_distribution<int> len(1, 50);
  std::uniform_int_distribution<std::size_t> pick(0, vocab.size() - 1);
  const int n = len(gen);
  std::string out;
  for (int i = 0; i < n; ++i) {
    if (i) out += ' ';
    out += vocab[pick(gen)];
  }
  return out;
}

}  // namespace

TEST_SUITE("parse") {
  TEST_CASE("well-formed reply") {
    const auto op = parse_reply("My stance after the discussion is: Neutral, and my reason is: Both paths are valid.",
                                scale(), {});
    CHECK(op.stance == 0);
    CHECK(op.reason == "Both paths are valid.");
  }

  TEST_CASE("lowercase label") {
    const auto op = parse_reply("My stance after the discussion is: better not to give, and my reason is: x", scale(), {});
    CHECK(op.stance == 1);
  }

  TEST_CASE("tolerates quotes, double spaces and a trailing period") {
    CHECK(parse_reply("My stance after the discussion is:  \"Better to give\".", scale(), {.reasons_enabled = false})
              .stance == -1);
    CHECK(parse_reply("my stance after the discussion is: 'Absolutely must give', and my reason is: y", scale(), {})
              .stance == -2);
  }

  TEST_CASE("longest label wins over its substring") {
    // "Better not to give" contains neither "Better to give" nor vice versa,
    // but "Absolutely must not give" contains "not give" fragments.
    CHECK(parse_reply("My stance after the discussion is: Absolutely must not give, and my reason is: z", scale(), {})
              .stance == 2);
  }

  TEST_CASE("malformed replies raise ParseFailure") {
    CHECK_THROWS_AS(parse_reply("I think we should wait.", scale(), {}), ParseFailure);
    CHECK_THROWS_AS(parse_reply("My stance after the discussion is: Maybe give, and my reason is: hmm", scale(), {}),
                    ParseFailure);
    CHECK_THROWS_AS(parse_reply("", scale(), {}), ParseFailure);
    try {
      parse_reply("garbage", scale(), {});
    } catch (const ParseFailure& e) {
      CHECK(e.raw() == "garbage");
    }
  }

  TEST_CASE("strict mode wants the exact label case") {
    ParseOptions strict{.reasons_enabled = true, .strict = true};
    CHECK(parse_reply("My stance after the discussion is: Neutral, and my reason is: r", scale(), strict).stance == 0);
    CHECK_THROWS_AS(parse_reply("My stance after the discussion is: neutral, and my reason is: r", scale(), strict),
                    ParseFailure);
  }

  TEST_CASE("format then parse is the identity") {
    std::mt19937_64 gen(5150);
    const auto& entries = scale().entries();
    for (int i = 0; i < 1000; ++i) {
      const auto& e = entries[i % entries.size()];
      const auto reason = random_reason(gen);
      CHECK(word_count(reason) <= 50);
      const auto op = parse_reply(format_reply(e.label, reason, true), scale(), {});
      CHECK(op.stance == e.value);
      CHECK(op.reason == reason);

      const auto bare = parse_reply(format_reply(e.label, reason, false), scale(), {.reasons_enabled = false});
      CHECK(bare.stance == e.value);
      CHECK(bare.reason.empty());
    }
  }

  TEST_CASE("word count") {
    CHECK(word_count("") == 0);
    CHECK(word_count("  a b\tc\n") == 3);
  }
}
