#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <span>
#include <vector>

#include "groundrl/context.hpp"
#include "groundrl/policy.hpp"

namespace groundrl {

enum class LooMode { Min, Avg };
enum class Fusion { Mul, Add };
// Divisor applied to the thresholded contribution: 1, sqrt(T) or T.
enum class LengthNorm { None, Sqrt, Linear };

struct ClrConfig {
  double tau = 1.0;
  LooMode loo_mode = LooMode::Min;
  double norm_epsilon = 1e-8;
  Fusion fusion = Fusion::Mul;
  LengthNorm length_norm = LengthNorm::Sqrt;

  void validate() const;
};

/// Per-token log-probabilities of one rollout under the full context and
/// under each context with a single supporting document removed.
struct LikelihoodProfile {
  std::vector<double> full;
  std::map<int, std::vector<double>> loo;  // keyed by supporting doc_id

  std::size_t length() const { return full.size(); }
  // Throws ConfigError unless every vector has length T, entries are finite
  // and at least one LOO entry exists.
  void validate() const;
};

struct EvidentialScore {
  double contribution = 0.0;         // E(y)
  std::vector<double> token_scores;  // eps(y_t), sums to E
  std::optional<int> critical_doc;   // argmin document in min mode
  LooMode mode = LooMode::Min;
};

struct RewardBundle {
  double r_clr_raw = 0.0;
  double r_clr_norm = 0.0;
  double r_acc = 0.0;
  double r_cite = 0.0;
  double r_hybrid = 0.0;
  double r_total = 0.0;
  double advantage = 0.0;

  bool operator==(const RewardBundle&) const = default;
};

LikelihoodProfile likelihood_profile(const Policy& policy, const RagContext& context,
                                     std::span<const TokenId> tokens);

EvidentialScore evidential_contribution(const LikelihoodProfile& profile, LooMode mode);

// S-(y | D): the minimum (or mean) of the leave-one-out sequence scores.
double loo_sequence_score(const LikelihoodProfile& profile, LooMode mode);

// E * 1(E > tau) / norm(T). Exactly 0 whenever E <= tau.
double clr_reward(const EvidentialScore& score, std::size_t length, double tau,
                  LengthNorm norm = LengthNorm::Sqrt);
double clr_reward(double contribution, std::size_t length, double tau,
                  LengthNorm norm = LengthNorm::Sqrt);

// Group min-max scaling into [0, 1).
std::vector<double> normalize_group(std::span<const double> raw, double norm_epsilon);

double hybrid_reward(double r_norm, double r_acc, Fusion fusion);

}  // namespace groundrl
