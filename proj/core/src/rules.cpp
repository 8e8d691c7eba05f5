#include "groundrl/rules.hpp"

#include <algorithm>
#include <cmath>

#include "groundrl/errors.hpp"

namespace groundrl {

void RuleConfig::validate() const {
  if (!std::isfinite(alpha) || !std::isfinite(beta) || !std::isfinite(eta)) {
    throw ConfigError("rule config: alpha, beta and eta must be finite");
  }
}

double citation_reward(std::span<const TokenId> tokens, std::span<const int> supporting_ids,
                       const Vocabulary& vocab) {
  if (supporting_ids.empty()) throw ConfigError("citation_reward: empty supporting set");
  std::size_t hits = 0;
  for (int doc : supporting_ids) {
    const TokenId marker = vocab.cite(doc);
    if (std::find(tokens.begin(), tokens.end(), marker) != tokens.end()) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(supporting_ids.size());
}

std::vector<TokenId> strip_think(std::span<const TokenId> tokens, const Vocabulary& vocab) {
  std::vector<TokenId> out;
  out.reserve(tokens.size());
  bool inside = false;
  for (TokenId t : tokens) {
    if (inside) {
      if (t == vocab.think_close()) inside = false;
      continue;
    }
    if (t == vocab.think_open()) {
      inside = true;
      continue;
    }
    out.push_back(t);
  }
  return out;
}

double correctness_reward(std::span<const TokenId> tokens, std::span<const TokenId> answer,
                          const Vocabulary& vocab) {
  if (answer.empty()) throw ConfigError("correctness_reward: empty answer");
  const auto visible = strip_think(tokens, vocab);
  const auto it = std::search(visible.begin(), visible.end(), answer.begin(), answer.end());
  return it != visible.end() ? 1.0 : 0.0;
}

double cost(std::span<const TokenId> tokens) { return static_cast<double>(tokens.size()); }

double total_reward(double r_cite, double r_acc, std::span<const TokenId> tokens,
                    const RuleConfig& config) {
  return config.alpha * r_cite + config.beta * r_acc - config.eta * cost(tokens);
}

}  // namespace groundrl
