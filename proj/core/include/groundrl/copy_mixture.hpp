#pragma once

#include <array>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "groundrl/policy.hpp"

namespace groundrl {

/// Gate features, evaluated per decoding step.
enum GateFeature : std::size_t {
  kGateBias = 0,
  kGateStep,              // 0.1 * step index
  kGatePrevInContext,     // last output token occurs in the prompt
  kGateHasContinuation,   // some prompt position follows the last output token
  kGateCopiedFraction,    // share of output tokens so far found in the prompt
  kGateRelevantOpen,      // share of query-matching document positions still open for copying
  kGateFeatureCount
};

/// Copy-attention features, evaluated per prompt position and step.
enum CopyFeature : std::size_t {
  kCopyQueryMatch = 0,    // token is a query content token
  kCopyAfterQueryMatch,   // previous position in the segment is a query content token
  kCopyContinues1,        // previous position equals the last output token
  kCopyContinues2,        // previous two positions equal the last two output tokens
  kCopyInQuery,           // position lies in the query segment
  kCopyRelativePosition,  // offset / (segment length - 1)
  kCopyIsMarker,          // CITE marker position
  kCopyDocMatchesQuery,   // position's document shares a content token with the query
  kCopyFeatureCount
};

/// Parameters of the copy/generate mixture. The gradient uses the same
/// type, so layouts always agree.
struct PolicyParameters {
  std::vector<double> gate;     // kGateFeatureCount
  std::vector<double> unigram;  // V
  std::vector<double> copy;     // kCopyFeatureCount
  std::string version = "init";

  static PolicyParameters zeros(int vocab_size);

  std::size_t size() const { return gate.size() + unigram.size() + copy.size(); }
  // Flat layout: gate, unigram, copy.
  std::vector<double> flat() const;
  void assign_flat(std::span<const double> values);
  double& at(std::size_t flat_index);
  double at(std::size_t flat_index) const;

  // this += scale * other
  void axpy(double scale, const PolicyParameters& other);
  void scale(double factor);
  bool all_finite() const;
  double mean_abs() const;
  bool same_layout(const PolicyParameters& other) const;

  bool operator==(const PolicyParameters&) const = default;
};

/// Intermediate values of one decoding step, kept for the backward pass.
struct StepForward {
  std::vector<double> probs;        // final distribution, length V
  // The three per-position arrays cover only positions open for copying.
  std::vector<double> copy_attn;    // softmax over open prompt positions
  std::vector<TokenId> copy_tokens; // token at each open position
  std::vector<double> copy_dist;    // copy mass per token, length V
  std::vector<double> unigram;      // softmax(unigram logits), length V
  std::array<double, kGateFeatureCount> gate_features{};
  std::vector<std::array<double, kCopyFeatureCount>> copy_features;
  double gate = 0.0;                // sigma(g); 0 when no position is open
};

/// P(y_t) = (1 - floor) * [s * Copy(y_t) + (1 - s) * softmax(unigram)(y_t)] + floor / V
/// where s = sigmoid(gate . gate_features) and Copy is a softmax over prompt
/// positions scored by copy . copy_features, with mass summed per token.
/// Coverage: a position whose token already occurs in the output prefix is
/// closed for copying. With no open position (empty prompt, or everything
/// already copied) the gate is forced shut.
class CopyMixturePolicy final : public Policy {
 public:
  static constexpr double kSmoothingFloor = 1e-8;

  CopyMixturePolicy(Vocabulary vocab, PolicyParameters params);

  const Vocabulary& vocabulary() const override { return vocab_; }
  const PolicyParameters& parameters() const { return params_; }

  std::vector<double> next_token_distribution(
      const Prompt& prompt, std::span<const TokenId> prefix) const override;

  StepForward forward(const Prompt& prompt, std::span<const TokenId> prefix) const;

  // Accumulates dL/dtheta into grad given dL/dp for every vocabulary entry.
  void backward(const StepForward& step, std::span<const double> dloss_dprobs,
                PolicyParameters& grad) const;

  // Gradient of sum_t log P(y_t | y_<t).
  PolicyParameters grad_log_prob(const Prompt& prompt, std::span<const TokenId> tokens) const;

  // grad += sum_t weights[t] * d log P(y_t | y_<t) / dtheta; returns the
  // per-token log-probabilities computed along the way.
  std::vector<double> accumulate_weighted_grad(const Prompt& prompt,
                                               std::span<const TokenId> tokens,
                                               std::span<const double> weights,
                                               PolicyParameters& grad) const;

 private:
  Vocabulary vocab_;
  PolicyParameters params_;
};

// Feature vectors exposed for tests and diagnostics.
std::array<double, kGateFeatureCount> gate_features(const Prompt& prompt,
                                                    std::span<const TokenId> prefix);
std::array<double, kCopyFeatureCount> copy_features(const Prompt& prompt, std::size_t position,
                                                    std::span<const TokenId> prefix);

// Seeded small-magnitude initialization; unigram logits get `eos_bias`
// added on EOS so initial rollouts have a controllable length.
PolicyParameters random_parameters(const Vocabulary& vocab, std::uint64_t seed,
                                   double scale = 0.1, double eos_bias = 0.0);

}  // namespace groundrl
