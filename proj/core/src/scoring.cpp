#include "groundrl/scoring.hpp"

#include <set>

#include "groundrl/errors.hpp"
#include "groundrl/version.hpp"

namespace groundrl {

namespace {

GroupScore assemble(const RagContext& context, const std::vector<std::span<const TokenId>>& rollouts,
                    std::vector<LikelihoodProfile> profiles, const ScoreConfig& config,
                    std::span<const TokenId> answer, const Vocabulary& vocab) {
  const auto supporting = context.supporting_ids();
  GroupScore out;
  out.profiles = std::move(profiles);
  const std::size_t G = rollouts.size();
  std::vector<double> raw(G);
  out.evidence.reserve(G);
  out.bundles.resize(G);
  for (std::size_t i = 0; i < G; ++i) {
    const auto tokens = rollouts[i];
    out.evidence.push_back(evidential_contribution(out.profiles[i], config.clr.loo_mode));
    RewardBundle& b = out.bundles[i];
    b.r_clr_raw = clr_reward(out.evidence.back(), tokens.size(), config.clr.tau, config.clr.length_norm);
    b.r_cite = citation_reward(tokens, supporting, vocab);
    b.r_acc = correctness_reward(tokens, answer, vocab);
    b.r_total = total_reward(b.r_cite, b.r_acc, tokens, config.rules);
    raw[i] = b.r_clr_raw;
  }
  const auto norm = normalize_group(raw, config.clr.norm_epsilon);
  for (std::size_t i = 0; i < G; ++i) {
    out.bundles[i].r_clr_norm = norm[i];
    out.bundles[i].r_hybrid = hybrid_reward(norm[i], out.bundles[i].r_acc, config.clr.fusion);
  }
  return out;
}

}  // namespace

GroupScore score_group(const Policy& policy, const RagContext& context,
                       std::span<const Rollout> rollouts, const ScoreConfig& config,
                       std::span<const TokenId> answer) {
  config.validate();
  if (rollouts.empty()) throw ConfigError("score_group: empty group");
  std::vector<LikelihoodProfile> profiles;
  std::vector<std::span<const TokenId>> tokens;
  profiles.reserve(rollouts.size());
  for (const auto& r : rollouts) {
    profiles.push_back(likelihood_profile(policy, context, r.tokens));
    tokens.emplace_back(r.tokens);
  }
  return assemble(context, tokens, std::move(profiles), config, answer, policy.vocabulary());
}

GroupScore score_group_from_profiles(const RagContext& context,
                                     std::span<const std::vector<TokenId>> rollouts,
                                     std::vector<LikelihoodProfile> profiles,
                                     const ScoreConfig& config, std::span<const TokenId> answer,
                                     const Vocabulary& vocab) {
  config.validate();
  if (rollouts.empty()) throw ConfigError("score_group: empty group");
  if (profiles.size() != rollouts.size()) {
    throw ConfigError("profiles: " + std::to_string(profiles.size()) + " profiles for " +
                      std::to_string(rollouts.size()) + " rollouts");
  }
  const auto supporting = context.supporting_ids();
  if (supporting.empty()) throw ConfigError("score_group: context has no supporting document");
  const std::set<int> expected(supporting.begin(), supporting.end());
  std::vector<std::span<const TokenId>> tokens;
  for (std::size_t i = 0; i < rollouts.size(); ++i) {
    const auto& p = profiles[i];
    if (p.full.size() != rollouts[i].size()) {
      throw ConfigError("profiles[" + std::to_string(i) + "]: length " + std::to_string(p.full.size()) +
                        " does not match rollout length " + std::to_string(rollouts[i].size()));
    }
    std::set<int> keys;
    for (const auto& [doc, v] : p.loo) keys.insert(doc);
    if (keys != expected) {
      throw ConfigError("profiles[" + std::to_string(i) + "]: loo keys differ from the supporting doc ids");
    }
    p.validate();
    tokens.emplace_back(rollouts[i]);
  }
  return assemble(context, tokens, std::move(profiles), config, answer, vocab);
}

ScoreResponse process_request(const ScoreRequest& request, const Policy* policy,
                              const Vocabulary& vocab) {
  request.config.validate();
  vocab.check(request.context.query);
  std::set<int> ids;
  for (const auto& doc : request.context.documents) {
    vocab.check(doc.tokens);
    vocab.cite(doc.doc_id);
    if (!ids.insert(doc.doc_id).second) {
      throw ConfigError("context: duplicate doc_id " + std::to_string(doc.doc_id));
    }
  }
  if (request.rollouts.empty()) throw ConfigError("request: no rollouts");
  for (const auto& r : request.rollouts) {
    if (r.empty()) throw ConfigError("request: empty rollout");
    vocab.check(r);
  }
  if (request.answer.empty()) throw ConfigError("request: empty answer");
  vocab.check(request.answer);

  GroupScore scored;
  if (request.profiles) {
    scored = score_group_from_profiles(request.context, request.rollouts, *request.profiles, request.config,
                                       request.answer, vocab);
  } else {
    if (policy == nullptr) throw ConfigError("request: no profiles and no policy loaded");
    if (!(policy->vocabulary() == vocab)) throw ConfigError("request: vocabulary mismatch with loaded policy");
    std::vector<Rollout> rollouts;
    rollouts.reserve(request.rollouts.size());
    for (const auto& r : request.rollouts) rollouts.push_back(Rollout{r, Termination::MaxLength, 0});
    scored = score_group(*policy, request.context, rollouts, request.config, request.answer);
  }

  ScoreResponse response;
  response.bundles = std::move(scored.bundles);
  if (request.return_eps) {
    std::vector<std::vector<double>> eps;
    eps.reserve(scored.evidence.size());
    for (auto& e : scored.evidence) eps.push_back(std::move(e.token_scores));
    response.eps = std::move(eps);
  }
  response.engine_version = kEngineVersion;
  response.config = request.config;
  return response;
}

}  // namespace groundrl
