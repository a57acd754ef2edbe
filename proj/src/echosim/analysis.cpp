#include "echosim/analysis.hpp"

#include <httplib.h>

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <numeric>

#include <json.hpp>

#include "echosim/assets.hpp"
#include "echosim/errors.hpp"
#include "echosim/rng.hpp"

namespace echosim {
namespace {

using json = nlohmann::json;

std::uint64_t fnv1a(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

void normalize_in_place(std::vector<double>& v) {
  double n = 0.0;
  for (double x : v) n += x * x;
  n = std::sqrt(n);
  if (!(n > 0.0) || !std::isfinite(n)) throw Error("embedder returned a zero or non-finite vector");
  for (double& x : v) x /= n;
}

class DisjointSets {
 public:
  explicit DisjointSets(std::size_t n) : parent_(n) { std::iota(parent_.begin(), parent_.end(), 0); }

  std::size_t find(std::size_t x) {
    while (parent_[x] != x) {
      parent_[x] = parent_[parent_[x]];
      x = parent_[x];
    }
    return x;
  }

  void unite(std::size_t a, std::size_t b) {
    a = find(a);
    b = find(b);
    if (a == b) return;
    if (b < a) std::swap(a, b);
    parent_[b] = a;
  }

 private:
  std::vector<std::size_t> parent_;
};

std::string embed_request(const std::vector<std::string>& texts) { return json{{"texts", texts}}.dump(); }

}  // namespace

std::string_view to_string(Outcome o) {
  switch (o) {
    case Outcome::kUnification: return "unification";
    case Outcome::kPolarization: return "polarization";
    case Outcome::kMixed: return "mixed";
  }
  return "mixed";
}

Outcome classify_outcome(const Histogram& h, const OutcomeThresholds& t) {
  long total = 0;
  int max_count = 0;
  for (const auto& [_, c] : h) {
    total += c;
    max_count = std::max(max_count, c);
  }
  if (total <= 0) return Outcome::kMixed;
  auto share = [&](StanceValue v) {
    auto it = h.find(v);
    return it == h.end() ? 0.0 : static_cast<double>(it->second) / static_cast<double>(total);
  };
  if (share(kMaxStance) >= t.polarization && share(kMinStance) >= t.polarization) {
    return Outcome::kPolarization;
  }
  if (static_cast<double>(max_count) / static_cast<double>(total) >= t.unification) {
    return Outcome::kUnification;
  }
  return Outcome::kMixed;
}

RegressionFit fit_transitions(std::span<const TransitionSample> samples, bool standardize) {
  const std::size_t n = samples.size();
  if (n < 3) throw DegenerateFit("regression needs at least 3 samples");

  std::vector<double> x1(n), x2(n), y(n);
  for (std::size_t i = 0; i < n; ++i) {
    x1[i] = samples[i].s_before;
    x2[i] = samples[i].s_around_mean;
    y[i] = samples[i].s_after;
  }
  auto mean_of = [n](const std::vector<double>& v) {
    return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(n);
  };
  auto sd_of = [n](const std::vector<double>& v, double m) {
    double ss = 0.0;
    for (double x : v) ss += (x - m) * (x - m);
    return std::sqrt(ss / static_cast<double>(n));
  };

  double m1 = mean_of(x1), m2 = mean_of(x2), my = mean_of(y);
  const double sd1 = sd_of(x1, m1), sd2 = sd_of(x2, m2), sdy = sd_of(y, my);
  constexpr double kTiny = 1e-12;
  if (sd1 <= kTiny) throw DegenerateFit("s_before is constant");
  if (sd2 <= kTiny) throw DegenerateFit("s_around_mean is constant");

  if (standardize) {
    const double ys = sdy > kTiny ? sdy : 1.0;
    for (std::size_t i = 0; i < n; ++i) {
      x1[i] = (x1[i] - m1) / sd1;
      x2[i] = (x2[i] - m2) / sd2;
      y[i] = (y[i] - my) / ys;
    }
    m1 = mean_of(x1);
    m2 = mean_of(x2);
    my = mean_of(y);
  }

  double s11 = 0, s12 = 0, s22 = 0, s1y = 0, s2y = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const double a = x1[i] - m1, b = x2[i] - m2, c = y[i] - my;
    s11 += a * a;
    s12 += a * b;
    s22 += b * b;
    s1y += a * c;
    s2y += b * c;
  }
  const double det = s11 * s22 - s12 * s12;
  if (!(det > 1e-12 * s11 * s22)) throw DegenerateFit("predictors are collinear");

  RegressionFit fit;
  fit.n_samples = n;
  fit.w_before = (s22 * s1y - s12 * s2y) / det;
  fit.w_around = (s11 * s2y - s12 * s1y) / det;
  fit.intercept = my - fit.w_before * m1 - fit.w_around * m2;
  if (std::abs(fit.w_around) > 1e-12) fit.ratio = fit.w_before / fit.w_around;

  std::vector<double> fitted(n);
  double ss_res = 0.0, ss_tot = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    fitted[i] = fit.intercept + fit.w_before * x1[i] + fit.w_around * x2[i];
    ss_res += (y[i] - fitted[i]) * (y[i] - fitted[i]);
    ss_tot += (y[i] - my) * (y[i] - my);
  }
  if (ss_tot > 0.0) {
    fit.r2 = 1.0 - ss_res / ss_tot;
  } else {
    fit.r2 = ss_res <= 1e-18 ? 1.0 : 0.0;
  }

  const double mf = mean_of(fitted);
  double sfy = 0.0, sff = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    sfy += (fitted[i] - mf) * (y[i] - my);
    sff += (fitted[i] - mf) * (fitted[i] - mf);
  }
  fit.pearson_r = (sff > 0.0 && ss_tot > 0.0) ? sfy / std::sqrt(sff * ss_tot) : 0.0;
  return fit;
}

std::vector<TransitionSample> extract_samples(std::span<const TurnRecord> records) {
  std::vector<TransitionSample> out;
  out.reserve(records.size());
  for (const auto& r : records) {
    TransitionSample s;
    s.s_before = r.stance_before;
    s.s_after = r.stance_after;
    if (!r.partner_stances.empty()) {
      double sum = 0.0;
      for (auto p : r.partner_stances) sum += p;
      s.s_around_mean = sum / static_cast<double>(r.partner_stances.size());
    }
    out.push_back(s);
  }
  return out;
}

std::vector<std::vector<double>> HashEmbedder::embed(const std::vector<std::string>& texts) {
  std::vector<std::vector<double>> out;
  out.reserve(texts.size());
  for (const auto& text : texts) {
    std::vector<double> v(dim_, 0.0);
    std::string token;
    bool any = false;
    auto flush = [&] {
      if (token.empty()) return;
      Rng rng(splitmix64(fnv1a(token) ^ seed_));
      for (auto& x : v) x += rng.normal(0.0, 1.0);
      token.clear();
      any = true;
    };
    for (char c : text) {
      if (std::isalnum(static_cast<unsigned char>(c))) {
        token += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
      } else {
        flush();
      }
    }
    flush();
    if (!any) v[0] = 1.0;
    normalize_in_place(v);
    out.push_back(std::move(v));
  }
  return out;
}

std::vector<std::vector<double>> parse_embeddings(const std::string& body, std::size_t expected) {
  json j;
  try {
    j = json::parse(body);
  } catch (const json::exception& e) {
    throw Error(std::string("embedder response is not JSON: ") + e.what());
  }
  const json& arr = j.is_object() ? j.value("embeddings", json::array()) : j;
  if (!arr.is_array() || arr.size() != expected) {
    throw Error("embedder returned " + std::to_string(arr.is_array() ? arr.size() : 0) +
                " vectors, expected " + std::to_string(expected));
  }
  std::vector<std::vector<double>> out;
  std::size_t dim = 0;
  for (const auto& row : arr) {
    auto v = row.get<std::vector<double>>();
    if (out.empty()) dim = v.size();
    if (v.empty() || v.size() != dim) throw Error("embedder vectors must share one non-zero dimension");
    normalize_in_place(v);
    out.push_back(std::move(v));
  }
  return out;
}

std::vector<std::vector<double>> HttpEmbedder::embed(const std::vector<std::string>& texts) {
  const auto scheme_end = url_.find("://");
  const auto path_start = url_.find('/', scheme_end == std::string::npos ? 0 : scheme_end + 3);
  const std::string host = path_start == std::string::npos ? url_ : url_.substr(0, path_start);
  const std::string path = path_start == std::string::npos ? "/" : url_.substr(path_start);
  httplib::Client cli(host);
  auto res = cli.Post(path, embed_request(texts), "application/json");
  if (!res) throw TransportError("embedder unreachable: " + httplib::to_string(res.error()));
  if (res->status != 200) throw Error("embedder returned HTTP " + std::to_string(res->status));
  return parse_embeddings(res->body, texts.size());
}

std::vector<std::vector<double>> CommandEmbedder::embed(const std::vector<std::string>& texts) {
  const auto tmp = std::filesystem::temp_directory_path() /
                   ("echosim_embed_" + std::to_string(reinterpret_cast<std::uintptr_t>(this)) + ".json");
  write_text_file(tmp, embed_request(texts));
  const std::string cmd = "(" + command_ + ") < '" + tmp.string() + "'";
  std::string body;
  FILE* pipe = ::popen(cmd.c_str(), "r");
  if (!pipe) {
    std::filesystem::remove(tmp);
    throw Error("cannot start embedder command");
  }
  char buf[4096];
  std::size_t n;
  while ((n = std::fread(buf, 1, sizeof buf, pipe)) > 0) body.append(buf, n);
  const int status = ::pclose(pipe);
  std::filesystem::remove(tmp);
  if (status != 0) throw Error("embedder command exited with status " + std::to_string(status));
  return parse_embeddings(body, texts.size());
}

std::unique_ptr<Embedder> make_embedder(const std::string& spec) {
  if (spec == "hash") return std::make_unique<HashEmbedder>();
  if (spec.rfind("http://", 0) == 0 || spec.rfind("https://", 0) == 0) {
    return std::make_unique<HttpEmbedder>(spec);
  }
  if (spec.rfind("cmd:", 0) == 0) return std::make_unique<CommandEmbedder>(spec.substr(4));
  throw ConfigError("unknown embedder '" + spec + "' (expected hash, http(s)://..., or cmd:...)");
}

Clusters cluster_vectors(const std::vector<std::vector<double>>& vectors, double threshold) {
  if (!(threshold > 0.0 && threshold <= 1.0)) throw ConfigError("cluster threshold must be in (0, 1]");
  const std::size_t n = vectors.size();
  DisjointSets sets(n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      if (vectors[i].size() != vectors[j].size()) throw Error("embedding dimensions differ");
      double dot = 0.0;
      for (std::size_t d = 0; d < vectors[i].size(); ++d) dot += vectors[i][d] * vectors[j][d];
      if (dot >= threshold) sets.unite(i, j);
    }
  }
  std::map<std::size_t, std::vector<int>> groups;
  for (std::size_t i = 0; i < n; ++i) groups[sets.find(i)].push_back(static_cast<int>(i));
  Clusters out;
  for (auto& [_, members] : groups) out.push_back(std::move(members));
  std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) {
    if (a.size() != b.size()) return a.size() > b.size();
    return a.front() < b.front();
  });
  return out;
}

Clusters cluster_reasons(const std::vector<std::string>& reasons, Embedder& embedder, double threshold) {
  if (reasons.empty()) return {};
  auto vectors = embedder.embed(reasons);
  if (vectors.size() != reasons.size()) throw Error("embedder returned wrong number of vectors");
  return cluster_vectors(vectors, threshold);
}

LengthSeries reason_length_series(std::span<const TurnRecord> records) {
  // trial -> turn -> (sum, count)
  std::map<int, std::map<int, std::pair<double, int>>> acc;
  for (const auto& r : records) {
    if (r.turn == 1) {
      auto& slot = acc[r.trial][0];
      slot.first += static_cast<double>(word_count(r.reason_before));
      slot.second += 1;
    }
    auto& slot = acc[r.trial][r.turn];
    slot.first += static_cast<double>(word_count(r.reason_after));
    slot.second += 1;
  }
  LengthSeries out;
  std::size_t longest = 0;
  for (const auto& [trial, turns] : acc) {
    auto& series = out.per_trial[trial];
    const int max_turn = turns.empty() ? -1 : turns.rbegin()->first;
    series.assign(static_cast<std::size_t>(max_turn + 1), 0.0);
    for (const auto& [turn, sc] : turns) series[turn] = sc.second ? sc.first / sc.second : 0.0;
    longest = std::max(longest, series.size());
  }
  out.mean.assign(longest, 0.0);
  for (std::size_t k = 0; k < longest; ++k) {
    double sum = 0.0;
    int n = 0;
    for (const auto& [_, series] : out.per_trial) {
      if (k < series.size()) {
        sum += series[k];
        ++n;
      }
    }
    out.mean[k] = n ? sum / n : 0.0;
  }
  return out;
}

std::map<int, std::vector<Histogram>> histogram_series(std::span<const TurnRecord> records) {
  std::map<int, std::map<int, std::vector<StanceValue>>> stances;
  for (const auto& r : records) {
    if (r.turn == 1) stances[r.trial][0].push_back(r.stance_before);
    stances[r.trial][r.turn].push_back(r.stance_after);
  }
  std::map<int, std::vector<Histogram>> out;
  for (const auto& [trial, turns] : stances) {
    auto& series = out[trial];
    for (const auto& [turn, values] : turns) {
      if (static_cast<std::size_t>(turn) >= series.size()) series.resize(turn + 1);
      series[turn] = histogram(values);
    }
  }
  return out;
}

Dispersion dispersion(const Histogram& h) {
  Dispersion d;
  double total = 0.0;
  for (const auto& [v, c] : h) {
    total += c;
    d.mean_stance += v * static_cast<double>(c);
  }
  if (total <= 0.0) return d;
  d.mean_stance /= total;
  double ss = 0.0;
  int max_count = 0;
  for (const auto& [v, c] : h) {
    ss += c * (v - d.mean_stance) * (v - d.mean_stance);
    max_count = std::max(max_count, c);
  }
  d.stddev = std::sqrt(ss / total);
  auto count_at = [&](StanceValue v) {
    auto it = h.find(v);
    return it == h.end() ? 0 : it->second;
  };
  d.share_pos2 = count_at(kMaxStance) / total;
  d.share_neg2 = count_at(kMinStance) / total;
  d.max_share = max_count / total;
  return d;
}

}  // namespace echosim
