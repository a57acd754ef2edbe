#pragma once

#include <span>
#include <vector>

#include "echosim/domain.hpp"

namespace echosim {

class Rng;

// Echo-chamber partner weight. Agents with a positive stance favour partners
// further toward +2, negative agents favour -2, neutral agents favour
// neutral partners. Always in (0, 1).
double sigmoid_weight(StanceValue self, StanceValue other, double alpha);

// Distance power law max(|self - other|, epsilon)^-beta. The epsilon floor
// keeps identical stances finite.
double powerlaw_weight(StanceValue self, StanceValue other, double beta, double epsilon);

double partner_weight(StanceValue self, StanceValue other, const SamplerParams& params);

// Draws `n` distinct partners for `agent_index` from `stances` (the
// start-of-turn snapshot), excluding the agent itself. Each draw is a
// categorical draw over the remaining candidates with weights renormalized,
// so the returned order is the emission order. Throws ConfigError if
// n > stances.size() - 1.
std::vector<int> sample_partners(int agent_index, std::span<const StanceValue> stances, int n,
                                 const SamplerParams& params, Rng& rng);

}  // namespace echosim
