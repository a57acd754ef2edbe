// Acceptance checks, one line per criterion. Exit status is non-zero if any
// criterion fails.
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "echosim/analysis.hpp"
#include "echosim/assets.hpp"
#include "echosim/commands.hpp"
#include "echosim/errors.hpp"
#include "echosim/rng.hpp"
#include "echosim/sampler.hpp"
#include "echosim/update.hpp"
#include "sample_prompt.hpp"
#include "fixtures.hpp"
#include "scripted_client.hpp"

using namespace echosim;
namespace fs = std::filesystem;

namespace {

struct Verdict {
  bool pass = true;
  std::string detail;
};

double oracle_sigmoid(int si, int sj, double alpha) {
  const double d = sj - si;
  if (si > 0) return 1.0 / (1.0 + std::exp(-alpha * d));
  if (si < 0) return 1.0 / (1.0 + std::exp(alpha * d));
  return 1.0 / (1.0 + std::exp(alpha * std::abs(d)));
}

std::string fmt(const char* f, double a, double b = 0, double c = 0) {
  char buf[256];
  std::snprintf(buf, sizeof buf, f, a, b, c);
  return buf;
}

Verdict sampler_statistics() {
  const auto start = std::chrono::steady_clock::now();
  double worst = 0.0;
  for (double alpha : {0.5, 1.0}) {
    for (int si = -2; si <= 2; ++si) {
      // Agent 0 holds si; candidates 1..5 hold -2..2.
      std::vector<StanceValue> stances{si, -2, -1, 0, 1, 2};
      SamplerParams p;
      p.alpha = alpha;
      double total = 0;
      for (int j = 1; j <= 5; ++j) total += oracle_sigmoid(si, stances[j], alpha);
      std::vector<int> counts(6, 0);
      Rng rng(derive_seed(1000, static_cast<std::uint64_t>(si + 2), 0, 0, StreamPurpose::kSample) ^
              static_cast<std::uint64_t>(alpha * 10));
      const int draws = 100000;
      for (int i = 0; i < draws; ++i) counts[sample_partners(0, stances, 1, p, rng)[0]]++;
      for (int j = 1; j <= 5; ++j) {
        worst = std::max(worst, std::abs(counts[j] / double(draws) - oracle_sigmoid(si, stances[j], alpha) / total));
      }
    }
  }
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return {worst <= 0.01 && secs < 5.0, fmt("max |freq - p| = %.4f, %.2f s", worst, secs)};
}

std::vector<TransitionSample> synthetic(double wb, double wa, double sigma, int n, std::uint64_t seed) {
  std::mt19937_64 gen(seed);
  std::uniform_real_distribution<double> u(-2.0, 2.0);
  std::normal_distribution<double> noise(0.0, 1.0);
  std::vector<TransitionSample> out(n);
  for (auto& s : out) {
    s.s_before = u(gen);
    s.s_around_mean = u(gen);
    s.s_after = wb * s.s_before + wa * s.s_around_mean + sigma * noise(gen);
  }
  return out;
}

Verdict regression_recovery() {
  const auto fit = fit_transitions(synthetic(0.724, 0.526, 0.05, 5000, 42), false);
  bool ok = std::abs(fit.w_before - 0.724) <= 0.02 && std::abs(fit.w_around - 0.526) <= 0.02 && fit.pearson_r >= 0.95;
  std::mt19937_64 gen(4242);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  int good = 0;
  for (int i = 0; i < 100; ++i) {
    const double wb = u(gen), wa = u(gen);
    const auto f = fit_transitions(synthetic(wb, wa, 0.1 * u(gen), 5000, 9000 + i), false);
    if (std::abs(f.w_before - wb) <= 0.03 && std::abs(f.w_around - wa) <= 0.03) ++good;
  }
  ok = ok && good == 100;
  return {ok, fmt("fit (%.4f, %.4f) r=%.4f", fit.w_before, fit.w_around, fit.pearson_r) +
                  ", random cases " + std::to_string(good) + "/100"};
}

RunConfig surrogate_config(std::uint64_t seed) {
  RunConfig c = echosim::testing::base_config();
  c.topic = load_topic("t_ai", "");
  c.reason_bank = load_reason_bank("t_ai", "");
  const auto preset = find_surrogate_preset("gpt4-en");
  c.surrogate.w_before = preset->w_before;
  c.surrogate.w_around = preset->w_around;
  c.surrogate.noise_sigma = 0.3;
  c.seed = seed;
  c.trials = 1;
  return c;
}

Histogram final_histogram(const RunConfig& c) {
  SurrogateUpdater u(c.surrogate);
  return run_trial(c, 0, u).histograms.back();
}

Verdict echo_chamber_effect() {
  int wider = 0, polarized = 0;
  std::ostringstream detail;
  detail.precision(2);
  detail << std::fixed << "std(0.5 -> 1.0):";
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    auto lo = surrogate_config(seed);
    lo.sampler.alpha = 0.5;
    auto hi = surrogate_config(seed);
    hi.sampler.alpha = 1.0;
    const auto h_lo = final_histogram(lo), h_hi = final_histogram(hi);
    const double sd_lo = dispersion(h_lo).stddev, sd_hi = dispersion(h_hi).stddev;
    if (sd_hi > sd_lo) ++wider;
    if (classify_outcome(h_hi) == Outcome::kPolarization) ++polarized;
    detail << " " << sd_lo << "->" << sd_hi;
  }
  detail << "; wider " << wider << "/5, polarized " << polarized << "/5";
  return {wider >= 4 && polarized >= 3, detail.str()};
}

Verdict stubborn_persona() {
  int exact = 0, runs = 0;
  for (double alpha : {0.5, 1.0}) {
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
      auto c = surrogate_config(seed);
      const auto preset = find_surrogate_preset("stubborn");
      c.surrogate.w_before = preset->w_before;
      c.surrogate.w_around = preset->w_around;
      c.surrogate.noise_sigma = 0.0;
      c.sampler.alpha = alpha;
      c.K = 10;
      SurrogateUpdater u(c.surrogate);
      const auto t = run_trial(c, 0, u);
      ++runs;
      if (t.histograms.back() == t.histograms.front()) ++exact;
    }
  }
  return {exact == runs, std::to_string(exact) + "/" + std::to_string(runs) + " runs end on the initial histogram"};
}

Verdict identity_limit() {
  int exact = 0, runs = 0;
  for (double alpha : {-1.0, 0.0, 0.5, 1.0, 3.0}) {
    for (int n : {1, 5, 20}) {
      for (int k : {0, 1, 10, 25}) {
        auto c = surrogate_config(static_cast<std::uint64_t>(runs) + 1);
        c.surrogate = {1.0, 0.0, 0.0, 0.0, Rounding::kNearest};
        c.sampler.alpha = alpha;
        c.N = n;
        c.K = k;
        c.M = 40;
        SurrogateUpdater u(c.surrogate);
        const auto t = run_trial(c, 0, u);
        ++runs;
        if (t.final_population.agents == t.initial.agents) ++exact;
      }
    }
  }
  return {exact == runs, std::to_string(exact) + "/" + std::to_string(runs) + " populations unchanged"};
}

Verdict prompt_golden() {
  const auto golden = read_text_file(fs::path(ECHOSIM_TEST_DIR) / "golden" / "sample_prompt.txt");
  const auto prompt = build_prompt(echosim::testing::sample_context());
  if (prompt == golden) return {true, std::to_string(prompt.size()) + " bytes identical"};
  std::size_t i = 0;
  while (i < prompt.size() && i < golden.size() && prompt[i] == golden[i]) ++i;
  return {false, "first difference at byte " + std::to_string(i)};
}

Verdict parser_round_trip() {
  const auto scale = echosim::testing::ai_topic().scale;
  static const std::vector<std::string> vocab = {"AI", "rights", "must", "give", "Neutral", "society,", "trust.",
                                                 "\"fair\"", "it's", "should", "and", "(maybe)", "2030", "?"};
  std::mt19937_64 gen(777);
  std::uniform_int_distribution<int> len(1, 50);
  std::uniform_int_distribution<std::size_t> pick(0, vocab.size() - 1);
  int ok = 0;
  for (int i = 0; i < 1000; ++i) {
    const auto& e = scale.entries()[i % 5];
    std::string reason;
    for (int w = len(gen); w > 0; --w) reason += (reason.empty() ? "" : " ") + vocab[pick(gen)];
    const auto op = parse_reply(format_reply(e.label, reason, true), scale, {});
    if (op.stance == e.value && op.reason == reason) ++ok;
  }

  const std::vector<std::string> malformed = {
      "I think we should wait.",
      "My stance after the discussion is: Maybe give, and my reason is: unsure.",
      "",
  };
  int failures = 0, retained = 0;
  for (const auto& m : malformed) {
    try {
      parse_reply(m, scale, {});
    } catch (const ParseFailure&) {
      ++failures;
    }
    echosim::testing::ScriptedClient client;
    for (int i = 0; i < 3; ++i) client.push(m);
    LlmUpdateParams p;
    p.model = "mock";
    const auto ctx = echosim::testing::sample_context();
    const auto out = llm_update(ctx, client, p, PromptTemplate::bundled("en"));
    if (out.status == UpdateStatus::kParseFallback && out.opinion == ctx.self_opinion) ++retained;
  }
  return {ok == 1000 && failures == 3 && retained == 3,
          std::to_string(ok) + "/1000 round trips, " + std::to_string(failures) + "/3 rejected, " +
              std::to_string(retained) + "/3 fell back"};
}

Verdict determinism() {
  const auto dir = fs::temp_directory_path() / "echosim_acceptance_determinism";
  fs::remove_all(dir);
  RunRequest req;
  req.config = surrogate_config(8);
  req.config.trials = 3;
  req.config.sampler.alpha = 1.0;
  req.out_dir = dir;
  int identical = 0;
  const std::vector<std::pair<std::string, int>> runs = {{"a", 1}, {"b", 1}, {"c", 8}};
  for (const auto& [id, workers] : runs) {
    req.run_id = id;
    req.workers = workers;
    cmd_run(req);
  }
  for (int t = 0; t < 3; ++t) {
    const auto name = "trial_" + std::to_string(t) + ".jsonl";
    const auto a = read_text_file(dir / "a" / name);
    if (!a.empty() && a == read_text_file(dir / "b" / name) && a == read_text_file(dir / "c" / name)) ++identical;
  }
  fs::remove_all(dir);
  return {identical == 3, std::to_string(identical) + "/3 trial logs identical (1 vs 1 vs 8 workers)"};
}

Verdict clustering() {
  const double t = std::acos(0.95);
  const double cy = (0.95 - 0.95 * 0.81) / std::sin(t);
  const std::vector<std::vector<double>> chain{
      {1, 0, 0}, {0.95, std::sin(t), 0}, {0.81, cy, std::sqrt(1 - 0.81 * 0.81 - cy * cy)}};
  const bool chain_ok = cluster_vectors(chain, 0.9) == Clusters{{0, 1, 2}};
  const bool ortho_ok = cluster_vectors({{1, 0, 0}, {0, 1, 0}, {0, 0, 1}}, 0.9) == Clusters{{0}, {1}, {2}};

  std::mt19937_64 gen(99);
  std::normal_distribution<double> g(0, 1);
  std::uniform_int_distribution<int> size(0, 40);
  int partitions = 0;
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<std::vector<double>> v(size(gen), std::vector<double>(4));
    for (auto& x : v) {
      double n = 0;
      for (auto& e : x) n += (e = g(gen)) * e;
      for (auto& e : x) e /= std::sqrt(n);
    }
    std::vector<int> seen(v.size(), 0);
    for (const auto& c : cluster_vectors(v, 0.6)) {
      for (int i : c) seen[i]++;
    }
    if (std::all_of(seen.begin(), seen.end(), [](int s) { return s == 1; })) ++partitions;
  }
  return {chain_ok && ortho_ok && partitions == 200,
          std::string("chain ") + (chain_ok ? "one cluster" : "split") + ", orthogonal " +
              (ortho_ok ? "singletons" : "merged") + ", partitions " + std::to_string(partitions) + "/200"};
}

Verdict small_community() {
  int not_polarized = 0;
  std::string labels;
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    auto c = surrogate_config(seed);
    c.M = 10;
    c.N = 5;
    c.sampler.alpha = 1.0;
    const auto outcome = classify_outcome(final_histogram(c));
    if (outcome != Outcome::kPolarization) ++not_polarized;
    labels += (labels.empty() ? "" : ",") + std::string(to_string(outcome));
  }
  return {not_polarized >= 4, std::to_string(not_polarized) + "/5 not polarized (" + labels + ")"};
}

}  // namespace

int main() {
  const std::vector<std::pair<const char*, std::function<Verdict()>>> criteria = {
      {"sampler statistics", sampler_statistics},
      {"regression recovery", regression_recovery},
      {"echo-chamber effect", echo_chamber_effect},
      {"stubborn persona", stubborn_persona},
      {"identity limit", identity_limit},
      {"prompt golden", prompt_golden},
      {"parser round trip", parser_round_trip},
      {"determinism", determinism},
      {"clustering", clustering},
      {"small community", small_community},
  };
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    Verdict v;
    try {
      v = criteria[i].second();
    } catch (const std::exception& e) {
      v = {false, std::string("exception: ") + e.what()};
    }
    if (!v.pass) ++failed;
    std::printf("criterion %2zu %-20s %s  %s\n", i + 1, criteria[i].first, v.pass ? "PASS" : "FAIL", v.detail.c_str());
  }
  std::printf("%zu/%zu criteria passed\n", criteria.size() - failed, criteria.size());
  return failed == 0 ? 0 : 1;
}
