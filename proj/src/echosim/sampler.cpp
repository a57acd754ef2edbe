#include "echosim/sampler.hpp"

#include <cmath>
#include <cstdlib>
#include <string>

#include "echosim/errors.hpp"
#include "echosim/rng.hpp"

namespace echosim {

double sigmoid_weight(StanceValue self, StanceValue other, double alpha) {
  const double diff = static_cast<double>(other - self);
  double exponent;
  if (self > 0) {
    exponent = -alpha * diff;
  } else if (self < 0) {
    exponent = alpha * diff;
  } else {
    exponent = alpha * std::abs(diff);
  }
  return 1.0 / (1.0 + std::exp(exponent));
}

double powerlaw_weight(StanceValue self, StanceValue other, double beta, double epsilon) {
  const double dist = std::max(static_cast<double>(std::abs(self - other)), epsilon);
  return std::pow(dist, -beta);
}

double partner_weight(StanceValue self, StanceValue other, const SamplerParams& params) {
  return params.kind == SamplerKind::kSigmoid
             ? sigmoid_weight(self, other, params.alpha)
             : powerlaw_weight(self, other, params.beta, params.epsilon);
}

std::vector<int> sample_partners(int agent_index, std::span<const StanceValue> stances, int n,
                                 const SamplerParams& params, Rng& rng) {
  const int m = static_cast<int>(stances.size());
  if (agent_index < 0 || agent_index >= m) throw ConfigError("agent index out of range");
  if (n < 0 || n > m - 1) {
    throw ConfigError("cannot sample " + std::to_string(n) + " partners from " +
                      std::to_string(m - 1) + " candidates");
  }

  const StanceValue self = stances[agent_index];
  std::vector<int> candidates;
  std::vector<double> weights;
  candidates.reserve(m - 1);
  weights.reserve(m - 1);
  double total = 0.0;
  for (int j = 0; j < m; ++j) {
    if (j == agent_index) continue;
    const double w = partner_weight(self, stances[j], params);
    candidates.push_back(j);
    weights.push_back(w);
    total += w;
  }

  std::vector<int> picked;
  picked.reserve(n);
  for (int draw = 0; draw < n; ++draw) {
    const double target = rng.uniform() * total;
    double acc = 0.0;
    std::size_t chosen = candidates.size() - 1;
    for (std::size_t k = 0; k < candidates.size(); ++k) {
      acc += weights[k];
      if (target < acc) {
        chosen = k;
        break;
      }
    }
    picked.push_back(candidates[chosen]);
    total -= weights[chosen];
    candidates.erase(candidates.begin() + static_cast<std::ptrdiff_t>(chosen));
    weights.erase(weights.begin() + static_cast<std::ptrdiff_t>(chosen));
    // Recompute instead of trusting the running subtraction so rounding error
    // never accumulates across draws.
    if (draw + 1 < n) {
      total = 0.0;
      for (double w : weights) total += w;
    }
  }
  return picked;
}

}  // namespace echosim
