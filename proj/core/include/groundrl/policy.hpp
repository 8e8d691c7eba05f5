#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "groundrl/context.hpp"
#include "groundrl/vocabulary.hpp"

namespace groundrl {

/// Conditional autoregressive policy P(y_t | y_<t, q, D).
///
/// Implementations must be pure in (prompt, prefix): scoring and sampling
/// are called concurrently from many threads on one instance.
class Policy {
 public:
  virtual ~Policy() = default;

  virtual const Vocabulary& vocabulary() const = 0;

  // Probability vector of length V. Throws InvalidTokenError when a
  // prefix token is outside the vocabulary.
  virtual std::vector<double> next_token_distribution(
      const Prompt& prompt, std::span<const TokenId> prefix) const = 0;
};

struct SequenceLogProb {
  std::vector<double> per_token;
  double sum = 0.0;  // accumulated in token order
};

SequenceLogProb log_prob_sequence(const Policy& policy, const Prompt& prompt,
                                  std::span<const TokenId> tokens);
SequenceLogProb log_prob_sequence(const Policy& policy, const RagContext& context,
                                  std::span<const TokenId> tokens);

// Ancestral sampling until EOS or max_len tokens.
Rollout sample_rollout(const Policy& policy, const Prompt& prompt, int max_len,
                       std::uint64_t seed);
Rollout sample_rollout(const Policy& policy, const RagContext& context, int max_len,
                       std::uint64_t seed);

// Inverse-CDF draw from a probability vector given u in [0, 1).
TokenId draw_token(std::span<const double> probs, double u);

}  // namespace groundrl
