#include <benchmark/benchmark.h>

#include "groundrl/clr.hpp"
#include "groundrl/copy_mixture.hpp"
#include "groundrl/scoring.hpp"
#include "groundrl/synthetic.hpp"

namespace {

using namespace groundrl;

TaskInstance make_task(int n_docs, int n_supporting) {
  TaskSpec spec;
  spec.n_docs = n_docs;
  spec.n_supporting = n_supporting;
  spec.hops = n_supporting > 1 ? 2 : 1;
  spec.n_tasks = 1;
  spec.seed = 3;
  return gen_tasks(spec).front();
}

void BM_NextTokenDistribution(benchmark::State& state) {
  const TaskInstance task = make_task(static_cast<int>(state.range(0)), 1);
  const Vocabulary vocab(64, 8);
  const CopyMixturePolicy policy(vocab, random_parameters(vocab, 1, 0.5));
  const Prompt prompt = Prompt::build(task.context, vocab);
  const std::vector<TokenId> prefix{vocab.first_content(), vocab.first_content() + 1};
  for (auto _ : state) benchmark::DoNotOptimize(policy.next_token_distribution(prompt, prefix));
}
BENCHMARK(BM_NextTokenDistribution)->Arg(1)->Arg(5)->Arg(8);

// Full-context pass plus one pass per supporting document.
void BM_LikelihoodProfile(benchmark::State& state) {
  const int supporting = static_cast<int>(state.range(1));
  const TaskInstance task = make_task(6, supporting);
  const Vocabulary vocab(64, 8);
  const CopyMixturePolicy policy(vocab, random_parameters(vocab, 1, 0.5));
  const Rollout r = sample_rollout(policy, task.context, static_cast<int>(state.range(0)), 9);
  std::vector<TokenId> y = r.tokens;
  while (y.size() < static_cast<std::size_t>(state.range(0))) y.push_back(vocab.first_content());
  for (auto _ : state) benchmark::DoNotOptimize(likelihood_profile(policy, task.context, y));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(y.size()));
}
BENCHMARK(BM_LikelihoodProfile)->Args({8, 1})->Args({32, 1})->Args({32, 3});

void BM_ScoreGroup(benchmark::State& state) {
  const TaskInstance task = make_task(5, 1);
  const Vocabulary vocab(64, 8);
  const CopyMixturePolicy policy(vocab, random_parameters(vocab, 1, 0.5, 1.0));
  std::vector<Rollout> group;
  for (int i = 0; i < state.range(0); ++i) group.push_back(sample_rollout(policy, task.context, 16, 100 + i));
  const ScoreConfig config;
  for (auto _ : state) benchmark::DoNotOptimize(score_group(policy, task.context, group, config, task.answer));
}
BENCHMARK(BM_ScoreGroup)->Arg(8)->Arg(32);

void BM_EvidentialContribution(benchmark::State& state) {
  LikelihoodProfile p;
  const auto T = static_cast<std::size_t>(state.range(0));
  p.full.assign(T, -0.5);
  for (int d = 0; d < 4; ++d) p.loo[d].assign(T, -1.0 - 0.1 * d);
  for (auto _ : state) benchmark::DoNotOptimize(evidential_contribution(p, LooMode::Min));
}
BENCHMARK(BM_EvidentialContribution)->Arg(16)->Arg(256);

}  // namespace
