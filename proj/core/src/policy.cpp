#include "groundrl/policy.hpp"

#include <cmath>

#include "groundrl/errors.hpp"
#include "groundrl/rng.hpp"

namespace groundrl {

SequenceLogProb log_prob_sequence(const Policy& policy, const Prompt& prompt,
                                  std::span<const TokenId> tokens) {
  if (tokens.empty()) throw ConfigError("log_prob_sequence: empty rollout");
  const Vocabulary& vocab = policy.vocabulary();
  vocab.check(tokens);
  SequenceLogProb out;
  out.per_token.reserve(tokens.size());
  for (std::size_t t = 0; t < tokens.size(); ++t) {
    const auto probs = policy.next_token_distribution(prompt, tokens.first(t));
    const double lp = std::log(probs[static_cast<std::size_t>(tokens[t])]);
    out.per_token.push_back(lp);
    out.sum += lp;
  }
  return out;
}

SequenceLogProb log_prob_sequence(const Policy& policy, const RagContext& context,
                                  std::span<const TokenId> tokens) {
  return log_prob_sequence(policy, Prompt::build(context, policy.vocabulary()), tokens);
}

TokenId draw_token(std::span<const double> probs, double u) {
  double cumulative = 0.0;
  for (std::size_t v = 0; v < probs.size(); ++v) {
    cumulative += probs[v];
    if (u < cumulative) return static_cast<TokenId>(v);
  }
  // Rounding left u above the accumulated mass: take the last positive entry.
  for (std::size_t v = probs.size(); v-- > 0;) {
    if (probs[v] > 0.0) return static_cast<TokenId>(v);
  }
  return 0;
}

Rollout sample_rollout(const Policy& policy, const Prompt& prompt, int max_len,
                       std::uint64_t seed) {
  if (max_len < 1) throw ConfigError("sample_rollout: max_len must be >= 1");
  const TokenId eos = policy.vocabulary().eos();
  Rng rng = Rng(seed).split("rollout", 0);
  Rollout rollout;
  rollout.seed = seed;
  rollout.tokens.reserve(static_cast<std::size_t>(max_len));
  while (static_cast<int>(rollout.tokens.size()) < max_len) {
    const auto probs = policy.next_token_distribution(prompt, rollout.tokens);
    const TokenId token = draw_token(probs, rng.uniform());
    rollout.tokens.push_back(token);
    if (token == eos) {
      rollout.terminated_by = Termination::Eos;
      return rollout;
    }
  }
  rollout.terminated_by = Termination::MaxLength;
  return rollout;
}

Rollout sample_rollout(const Policy& policy, const RagContext& context, int max_len,
                       std::uint64_t seed) {
  return sample_rollout(policy, Prompt::build(context, policy.vocabulary()), max_len, seed);
}

}  // namespace groundrl
