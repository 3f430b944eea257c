#pragma once

#include <cmath>
#include <random>
#include <vector>

#include "s2k/selective.hpp"

namespace s2k::testing {

/// Hand-derived values for the two-token toy: (0.97, .01, .01, .01) with
/// target 0, then (0.7, 0.3, 0, 0) with target 1.
struct SelectiveOracle {
  double h_uniform4 = std::log(4.0);
  double h_peaked = -(0.97 * std::log(0.97) + 3 * 0.01 * std::log(0.01));
  double omega_peaked = h_peaked / std::log(4.0);
  double nll0 = -std::log(0.97);
  double nll1 = -std::log(0.3);
  double loss_ref = (omega_peaked * nll0 + 1.0 * nll1) / 2;
};

inline std::vector<TokenDistribution> toy_distributions() {
  return {TokenDistribution::full({0.97, 0.01, 0.01, 0.01}), TokenDistribution::full({0.7, 0.3, 0.0, 0.0})};
}
inline std::vector<TokenId> toy_targets() { return {0, 1}; }

/// Random full distribution over `v` outcomes, sometimes sharply peaked.
inline TokenDistribution random_distribution(std::mt19937_64& rng, std::size_t v) {
  std::gamma_distribution<double> g(std::uniform_real_distribution<double>(0.05, 3.0)(rng));
  std::vector<double> p(v);
  double s = 0;
  for (auto& x : p) s += (x = g(rng) + 1e-300);
  for (auto& x : p) x /= s;
  return TokenDistribution::full(std::move(p));
}

}  // namespace s2k::testing
