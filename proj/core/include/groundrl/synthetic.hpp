#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "groundrl/clr.hpp"
#include "groundrl/context.hpp"
#include "groundrl/policy.hpp"
#include "groundrl/vocabulary.hpp"

namespace groundrl {

struct TaskSpec {
  int n_docs = 5;
  int n_supporting = 1;
  int hops = 1;
  int doc_len = 8;
  int key_len = 2;
  int answer_len = 2;
  int vocab_size = 64;
  int max_docs = 8;
  int n_tasks = 200;
  std::uint64_t seed = 0;

  Vocabulary vocabulary() const { return Vocabulary(vocab_size, max_docs); }
  // Throws ConfigError on violated invariants.
  void validate() const;
};

struct TaskInstance {
  RagContext context;
  std::vector<TokenId> answer;
  std::optional<TokenId> bridge;
  std::uint64_t seed = 0;
  std::uint64_t index = 0;

  bool operator==(const TaskInstance&) const = default;
};

/// Single hop: query = [QUERY, key...]; every supporting document holds the
/// run key..., answer... at a random offset.
/// Two hops: document A holds key..., bridge and document B holds
/// bridge, answer...; further supporting documents mention the key only.
/// Filler tokens never include key, answer or bridge tokens.
std::vector<TaskInstance> gen_tasks(const TaskSpec& spec);

// Empty when the instance satisfies every construction invariant;
// otherwise one message per violation.
std::vector<std::string> validate_instance(const TaskInstance& task, const Vocabulary& vocab,
                                           int hops);

struct EvalOptions {
  int k_samples = 1;
  int max_len = 16;
  std::uint64_t seed = 0;
};

// Any-of-k accuracy. Rollout seeds depend on (seed, task index, sample) only,
// so the with/without-documents calls are paired.
double accuracy(const Policy& policy, std::span<const TaskInstance> tasks, bool with_docs,
                const EvalOptions& options);

struct ReliancePoint {
  double acc_with_docs = 0.0;
  double acc_without_docs = 0.0;
  double rr = 0.0;
};

ReliancePoint reference_reliance(const Policy& policy, std::span<const TaskInstance> tasks,
                                 const EvalOptions& options);

struct Perplexities {
  double full_seq = 0.0;  // exp(-S)
  double full_tok = 0.0;  // exp(-S / T)
  double loo_seq = 0.0;   // exp(-S-)
  double loo_tok = 0.0;   // exp(-S- / T)
};

Perplexities perplexities(const Policy& policy, const RagContext& context,
                          std::span<const TokenId> tokens, LooMode mode);

// One seeded rollout per task, scored under its own context. Sequence forms
// use the mean S over tasks, token forms the pooled S / total length.
// Rollout seeds depend on (seed, task index) only.
Perplexities rollout_perplexities(const Policy& policy, std::span<const TaskInstance> tasks, int max_len,
                                  std::uint64_t seed, LooMode mode);

}  // namespace groundrl
