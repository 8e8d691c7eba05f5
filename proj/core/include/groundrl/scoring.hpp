#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "groundrl/clr.hpp"
#include "groundrl/rules.hpp"

namespace groundrl {

struct ScoreConfig {
  ClrConfig clr;
  RuleConfig rules;

  void validate() const {
    clr.validate();
    rules.validate();
  }
};

/// Everything computed while scoring one group, in rollout order.
struct GroupScore {
  std::vector<LikelihoodProfile> profiles;
  std::vector<EvidentialScore> evidence;
  std::vector<RewardBundle> bundles;  // advantage left at 0
};

// Composition order per rollout: likelihood_profile, evidential_contribution,
// clr_reward, citation_reward, correctness_reward, total_reward; then
// normalize_group over the G raw CLR values and hybrid_reward per rollout.
GroupScore score_group(const Policy& policy, const RagContext& context,
                       std::span<const Rollout> rollouts, const ScoreConfig& config,
                       std::span<const TokenId> answer);

// Same composition with externally supplied likelihood profiles.
GroupScore score_group_from_profiles(const RagContext& context,
                                     std::span<const std::vector<TokenId>> rollouts,
                                     std::vector<LikelihoodProfile> profiles,
                                     const ScoreConfig& config,
                                     std::span<const TokenId> answer, const Vocabulary& vocab);

struct ScoreRequest {
  RagContext context;
  std::vector<std::vector<TokenId>> rollouts;
  std::vector<TokenId> answer;
  ScoreConfig config;
  std::optional<std::vector<LikelihoodProfile>> profiles;
  bool return_eps = false;
};

struct ScoreResponse {
  std::vector<RewardBundle> bundles;
  std::optional<std::vector<std::vector<double>>> eps;
  std::string engine_version;
  ScoreConfig config;
};

// Validates the request against the vocabulary and scores it. `policy` may
// be null when every request carries its own profiles.
ScoreResponse process_request(const ScoreRequest& request, const Policy* policy,
                              const Vocabulary& vocab);

}  // namespace groundrl
