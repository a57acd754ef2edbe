#pragma once

#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "echosim/engine.hpp"

namespace echosim {

enum class Outcome { kUnification, kPolarization, kMixed };
std::string_view to_string(Outcome o);

struct OutcomeThresholds {
  double unification = 0.90;   // max stance share
  double polarization = 0.30;  // share required at each of +2 and -2
};

// Polarization needs both extremes at or above the threshold; unification
// needs one stance at or above its threshold. Polarization wins if both fire.
Outcome classify_outcome(const Histogram& final_histogram, const OutcomeThresholds& thresholds = {});

struct TransitionSample {
  double s_before = 0.0;
  double s_around_mean = 0.0;
  double s_after = 0.0;
};

struct RegressionFit {
  double w_before = 0.0;
  double w_around = 0.0;
  double intercept = 0.0;
  std::optional<double> ratio;  // w_before / w_around, when |w_around| > 1e-12
  double r2 = 0.0;
  double pearson_r = 0.0;  // between fitted and observed s_after
  std::size_t n_samples = 0;
};

// OLS of s_after on (s_before, s_around_mean) with intercept, solved from the
// 2x2 centred normal equations. With `standardize` every variable is z-scored
// first, which forces the intercept to zero. Throws DegenerateFit for fewer
// than 3 samples or a constant / collinear predictor.
RegressionFit fit_transitions(std::span<const TransitionSample> samples, bool standardize);

std::vector<TransitionSample> extract_samples(std::span<const TurnRecord> records);

// Maps texts to unit-norm vectors of one fixed dimension.
class Embedder {
 public:
  virtual ~Embedder() = default;
  virtual std::vector<std::vector<double>> embed(const std::vector<std::string>& texts) = 0;
};

// Offline embedder: every lower-cased alphanumeric token contributes a
// pseudo-random Gaussian vector seeded by its hash; the sum is normalized.
// Good enough to exercise clustering logic, not a semantic encoder.
class HashEmbedder : public Embedder {
 public:
  explicit HashEmbedder(std::size_t dim = 64, std::uint64_t seed = 0x5EEDULL) : dim_(dim), seed_(seed) {}
  std::vector<std::vector<double>> embed(const std::vector<std::string>& texts) override;

 private:
  std::size_t dim_;
  std::uint64_t seed_;
};

// Sends {"texts": [...]} to an HTTP endpoint and expects either
// {"embeddings": [[...], ...]} or a bare array of vectors back.
class HttpEmbedder : public Embedder {
 public:
  explicit HttpEmbedder(std::string url) : url_(std::move(url)) {}
  std::vector<std::vector<double>> embed(const std::vector<std::string>& texts) override;

 private:
  std::string url_;
};

// Runs a shell command with the same JSON request on stdin and reads the
// response from stdout.
class CommandEmbedder : public Embedder {
 public:
  explicit CommandEmbedder(std::string command) : command_(std::move(command)) {}
  std::vector<std::vector<double>> embed(const std::vector<std::string>& texts) override;

 private:
  std::string command_;
};

// "hash", "http://..." / "https://...", or "cmd:<shell command>".
std::unique_ptr<Embedder> make_embedder(const std::string& spec);

// Parses an embedder response and normalizes each vector; throws Error on a
// malformed body, wrong count, mixed dimensions or zero vectors.
std::vector<std::vector<double>> parse_embeddings(const std::string& body, std::size_t expected);

using Clusters = std::vector<std::vector<int>>;

// Single-link clustering of unit vectors: an edge joins i and j when their
// cosine similarity is >= threshold; clusters are the connected components,
// sorted by size descending then smallest member.
Clusters cluster_vectors(const std::vector<std::vector<double>>& vectors, double threshold);

Clusters cluster_reasons(const std::vector<std::string>& reasons, Embedder& embedder,
                         double threshold = 0.9);

struct LengthSeries {
  // per_trial[t][k] is the mean word count of reasons at turn k (k = 0 is the
  // initial population).
  std::map<int, std::vector<double>> per_trial;
  std::vector<double> mean;
};

LengthSeries reason_length_series(std::span<const TurnRecord> records);

// Per-trial, per-turn histograms rebuilt from a log; turn 0 comes from the
// first turn's stance_before values.
std::map<int, std::vector<Histogram>> histogram_series(std::span<const TurnRecord> records);

struct Dispersion {
  double mean_stance = 0.0;
  double stddev = 0.0;  // population standard deviation of stances
  double share_pos2 = 0.0;
  double share_neg2 = 0.0;
  double max_share = 0.0;
};

Dispersion dispersion(const Histogram& h);

}  // namespace echosim
