#include "groundrl/clr.hpp"

#include <algorithm>
#include <cmath>

#include "groundrl/errors.hpp"

namespace groundrl {

void ClrConfig::validate() const {
  if (!(tau >= 0.0) || !std::isfinite(tau)) throw ConfigError("clr config: tau must be finite and >= 0");
  if (!(norm_epsilon > 0.0) || !std::isfinite(norm_epsilon)) {
    throw ConfigError("clr config: norm_epsilon must be finite and > 0");
  }
}

void LikelihoodProfile::validate() const {
  const std::size_t T = full.size();
  if (T == 0) throw ConfigError("likelihood profile: empty rollout");
  if (loo.empty()) throw ConfigError("likelihood profile: no leave-one-out entries");
  auto check = [T](const std::vector<double>& v, const std::string& what) {
    if (v.size() != T) {
      throw ConfigError("likelihood profile: " + what + " has length " + std::to_string(v.size()) +
                        ", expected " + std::to_string(T));
    }
    for (double x : v) {
      if (!std::isfinite(x)) throw ConfigError("likelihood profile: non-finite entry in " + what);
    }
  };
  check(full, "full");
  for (const auto& [doc, v] : loo) check(v, "loo[" + std::to_string(doc) + "]");
}

LikelihoodProfile likelihood_profile(const Policy& policy, const RagContext& context,
                                     std::span<const TokenId> tokens) {
  const auto supporting = context.supporting_ids();
  if (supporting.empty()) throw ConfigError("likelihood_profile: context has no supporting document");
  LikelihoodProfile profile;
  profile.full = log_prob_sequence(policy, context, tokens).per_token;
  for (int doc : supporting) {
    profile.loo[doc] = log_prob_sequence(policy, context.without_document(doc), tokens).per_token;
  }
  return profile;
}

namespace {

double ordered_sum(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x;
  return s;
}

}  // namespace

EvidentialScore evidential_contribution(const LikelihoodProfile& profile, LooMode mode) {
  profile.validate();
  const std::size_t T = profile.length();
  const double full_sum = ordered_sum(profile.full);
  EvidentialScore score;
  score.mode = mode;
  score.token_scores.resize(T);

  if (mode == LooMode::Min) {
    // std::map iterates doc ids ascending, so strict < keeps the smallest id on ties.
    int critical = profile.loo.begin()->first;
    double min_sum = ordered_sum(profile.loo.begin()->second);
    for (const auto& [doc, v] : profile.loo) {
      const double s = ordered_sum(v);
      if (s < min_sum) {
        min_sum = s;
        critical = doc;
      }
    }
    score.critical_doc = critical;
    score.contribution = full_sum - min_sum;
    const auto& loo = profile.loo.at(critical);
    for (std::size_t t = 0; t < T; ++t) score.token_scores[t] = profile.full[t] - loo[t];
    return score;
  }

  const double n = static_cast<double>(profile.loo.size());
  double loo_total = 0.0;
  for (const auto& [doc, v] : profile.loo) loo_total += ordered_sum(v);
  score.contribution = full_sum - loo_total / n;
  for (std::size_t t = 0; t < T; ++t) {
    double mean_t = 0.0;
    for (const auto& [doc, v] : profile.loo) mean_t += v[t];
    score.token_scores[t] = profile.full[t] - mean_t / n;
  }
  return score;
}

double loo_sequence_score(const LikelihoodProfile& profile, LooMode mode) {
  profile.validate();
  if (mode == LooMode::Min) {
    double best = INFINITY;
    for (const auto& [doc, v] : profile.loo) best = std::min(best, ordered_sum(v));
    return best;
  }
  double total = 0.0;
  for (const auto& [doc, v] : profile.loo) total += ordered_sum(v);
  return total / static_cast<double>(profile.loo.size());
}

double clr_reward(double contribution, std::size_t length, double tau, LengthNorm norm) {
  if (length == 0) throw ConfigError("clr_reward: length must be >= 1");
  if (!(contribution > tau)) return 0.0;
  switch (norm) {
    case LengthNorm::None: return contribution;
    case LengthNorm::Sqrt: return contribution / std::sqrt(static_cast<double>(length));
    case LengthNorm::Linear: return contribution / static_cast<double>(length);
  }
  return 0.0;
}

double clr_reward(const EvidentialScore& score, std::size_t length, double tau, LengthNorm norm) {
  return clr_reward(score.contribution, length, tau, norm);
}

std::vector<double> normalize_group(std::span<const double> raw, double norm_epsilon) {
  if (raw.empty()) throw ConfigError("normalize_group: empty group");
  if (!(norm_epsilon > 0.0)) throw ConfigError("normalize_group: norm_epsilon must be > 0");
  const auto [lo, hi] = std::minmax_element(raw.begin(), raw.end());
  const double min = *lo;
  const double denom = (*hi - min) + norm_epsilon;
  std::vector<double> out(raw.size());
  constexpr double kBelowOne = 0x1.fffffffffffffp-1;
  for (std::size_t i = 0; i < raw.size(); ++i) {
    // Ranges beyond ~1e8 * norm_epsilon would otherwise round the maximum up to 1.
    out[i] = std::min((raw[i] - min) / denom, kBelowOne);
  }
  return out;
}

double hybrid_reward(double r_norm, double r_acc, Fusion fusion) {
  return fusion == Fusion::Mul ? r_norm * r_acc : r_norm + r_acc;
}

}  // namespace groundrl
