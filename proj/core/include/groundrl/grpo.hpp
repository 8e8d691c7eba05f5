#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "groundrl/copy_mixture.hpp"
#include "groundrl/scoring.hpp"
#include "groundrl/synthetic.hpp"

namespace groundrl {

enum class RewardMode { Acc, Cite, Total, Clr, HybridMul, HybridAdd };

struct GrpoConfig {
  int group_size = 8;
  double clip_epsilon = 0.2;
  double kl_beta = 0.0;
  // The 1e-6 used for billion-parameter models does not transfer to this
  // policy class. The surrogate is averaged over tokens and over the batch,
  // so per-step gradients are small; 2.0 is what the synthetic tasks need.
  double learning_rate = 2.0;
  int steps = 0;
  RewardMode reward_mode = RewardMode::Clr;
  double adv_epsilon = 1e-8;
  int max_len = 16;
  int batch_size = 8;           // questions per step
  double divergence_bound = 1e3;  // abort when mean |theta| exceeds this
  int eval_k = 1;
  int eval_max_len = 0;         // 0: use max_len

  void validate() const;
};

struct GroupSample {
  RagContext context;
  std::vector<TokenId> answer;
  std::vector<Rollout> rollouts;
  std::vector<RewardBundle> bundles;
  std::vector<std::vector<double>> old_logprobs;
  std::vector<double> advantages;
};

struct TrainRecord {
  int step = 0;
  double mean_reward = 0.0;
  double mean_len = 0.0;
  double acc_with_docs = 0.0;
  double acc_without_docs = 0.0;
  double rr = 0.0;
  double ppl_full_seq = 0.0;
  double ppl_full_tok = 0.0;
  double ppl_loo_seq = 0.0;
  double ppl_loo_tok = 0.0;

  bool operator==(const TrainRecord&) const = default;
};

using TrainLog = std::vector<TrainRecord>;

// (R_i - mean) / (population std + adv_epsilon).
std::vector<double> compute_advantages(std::span<const double> rewards, double adv_epsilon);

struct SurrogateResult {
  double objective = 0.0;
  PolicyParameters gradient;
};

/// Clipped token-level surrogate of one group, averaged per rollout length
/// then over the group, minus kl_beta times the exact per-token KL to
/// `reference`. The reference is never evaluated when kl_beta == 0.
SurrogateResult grpo_surrogate(const GroupSample& group, const Vocabulary& vocab,
                               const PolicyParameters& params,
                               const PolicyParameters& old_params, const GrpoConfig& config,
                               const PolicyParameters* reference = nullptr);

double select_reward(const RewardBundle& bundle, RewardMode mode);

struct TrainOptions {
  GrpoConfig grpo;
  ScoreConfig scoring;
  std::uint64_t seed = 0;
  std::uint64_t eval_seed = 0;  // fixed across steps
  // Tasks used for the per-step Acc/RR metrics; empty means the task stream.
  std::vector<TaskInstance> eval_tasks;
};

struct TrainResult {
  PolicyParameters params;
  TrainLog log;
};

// One optimizer update per step. `on_step` (optional) sees each record.
TrainResult train(const Vocabulary& vocab, PolicyParameters initial,
                  std::span<const TaskInstance> tasks, const TrainOptions& options,
                  const std::function<void(const TrainRecord&)>& on_step = {});

double pass_at_k(const Policy& policy, const RagContext& context, int k,
                 std::span<const TokenId> answer, int max_len, std::uint64_t seed);

struct FilterCandidate {
  double pass_rate = 0.0;    // pass@k of the candidate
  double logprob_std = 0.0;  // std of sequence log-likelihoods across its group
};

struct FilterConfig {
  double band_low = 0.1;
  double band_high = 0.875;
  double band_share = 0.9;   // rest comes from pass rate == 1.0
  double std_threshold = 10.0;
  bool require_std = true;   // CLR training keeps only std > threshold
  std::size_t target = 0;    // requested output size
};

struct FilterReport {
  std::vector<std::size_t> selected;  // candidate indices, band stratum first
  std::size_t band_requested = 0;
  std::size_t band_available = 0;
  std::size_t solved_requested = 0;
  std::size_t solved_available = 0;

  bool complete() const {
    return band_available >= band_requested && solved_available >= solved_requested;
  }
};

/// Stratified take in candidate order. A short stratum is reported, never
/// padded from the other stratum.
FilterReport filter_dataset(std::span<const FilterCandidate> candidates,
                            const FilterConfig& config);

}  // namespace groundrl
