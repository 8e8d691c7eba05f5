#pragma once

#include <cstdint>
#include <vector>

#include "groundrl/context.hpp"
#include "groundrl/copy_mixture.hpp"
#include "groundrl/rng.hpp"
#include "groundrl/vocabulary.hpp"

namespace groundrl::testing {

// Random label-bearing context: content tokens only, doc ids 0..n-1,
// `n_supporting` of them flagged. The query starts with the QUERY marker
// and shares a token with the first supporting document so both
// relevance features get exercised.
RagContext random_context(Rng& rng, const Vocabulary& vocab, int n_docs, int n_supporting);

// Uniform tokens over the whole vocabulary (reserved ids included).
std::vector<TokenId> random_tokens(Rng& rng, const Vocabulary& vocab, std::size_t length);

PolicyParameters random_params(const Vocabulary& vocab, std::uint64_t seed, double scale = 1.0);

// Straight-line re-evaluation of the mixture from the raw context. Shares
// no code with the library beyond Vocabulary.
std::vector<double> oracle_distribution(const PolicyParameters& params, const Vocabulary& vocab,
                                        const RagContext& context, const std::vector<TokenId>& prefix);

// Sum of oracle log-probabilities of `tokens`, token by token.
std::vector<double> oracle_logprobs(const PolicyParameters& params, const Vocabulary& vocab,
                                    const RagContext& context, const std::vector<TokenId>& tokens);

}  // namespace groundrl::testing
