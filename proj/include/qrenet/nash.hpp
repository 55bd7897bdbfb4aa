#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "qrenet/game.hpp"

namespace qrenet {

using PureProfile = std::vector<int>; // entries in {-1, +1}

// All pure Nash equilibria of the noise-free game, by exhaustive Gray-code
// enumeration of the 2^n profiles.  Agent i best-responds when
// s_i (H_i + sum_j w_ij s_j) >= 0, so a zero incentive (|incentive| below
// 1e-12 of its scale) admits both actions.  Profiles are returned in
// increasing bitmask order (bit i set <=> s_i = +1).  n is capped at `max_agents`.
std::vector<PureProfile> pure_nash_bruteforce(const GameModel& model, std::size_t max_agents = 24);

bool is_pure_nash(const GameModel& model, std::span<const int> profile);

// V(s) = sum_i H_i s_i + 1/2 sum_ij w_ij s_i s_j; requires symmetric weights.
double potential(const GameModel& model, std::span<const int> profile);

} // namespace qrenet
