#pragma once

#include <span>
#include <vector>

#include "groundrl/vocabulary.hpp"

namespace groundrl {

struct RuleConfig {
  double alpha = 0.5;
  double beta = 0.5;
  double eta = 0.0;

  void validate() const;
};

// Share of supporting documents whose CITE marker occurs anywhere in y.
double citation_reward(std::span<const TokenId> tokens, std::span<const int> supporting_ids,
                       const Vocabulary& vocab);

// Removes every THINK_OPEN ... THINK_CLOSE span; an unmatched THINK_OPEN
// strips to the end of the sequence. A stray THINK_CLOSE is kept.
std::vector<TokenId> strip_think(std::span<const TokenId> tokens, const Vocabulary& vocab);

// 1 when the answer is a contiguous run of the think-stripped response.
double correctness_reward(std::span<const TokenId> tokens, std::span<const TokenId> answer,
                          const Vocabulary& vocab);

// Length regularizer: the token count.
double cost(std::span<const TokenId> tokens);

double total_reward(double r_cite, double r_acc, std::span<const TokenId> tokens,
                    const RuleConfig& config);

}  // namespace groundrl
