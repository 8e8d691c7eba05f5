#include <benchmark/benchmark.h>

#include "groundrl/grpo.hpp"

namespace {

using namespace groundrl;

// One optimizer step of the acceptance-sized task (batch of 8 questions,
// G = 8), including the per-step Acc/RR/perplexity evaluation.
void BM_TrainStep(benchmark::State& state) {
  TaskSpec spec;
  spec.n_tasks = static_cast<int>(state.range(0));
  spec.seed = 1;
  const auto tasks = gen_tasks(spec);
  const Vocabulary vocab = spec.vocabulary();
  const PolicyParameters init = random_parameters(vocab, 3, 0.1, 3.0);
  TrainOptions opt;
  opt.grpo.steps = 1;
  opt.grpo.max_len = 40;
  for (auto _ : state) benchmark::DoNotOptimize(train(vocab, init, tasks, opt));
}
BENCHMARK(BM_TrainStep)->Arg(50)->Arg(200)->Unit(benchmark::kMillisecond);

void BM_Surrogate(benchmark::State& state) {
  TaskSpec spec;
  spec.n_tasks = 1;
  const TaskInstance task = gen_tasks(spec).front();
  const Vocabulary vocab = spec.vocabulary();
  const PolicyParameters params = random_parameters(vocab, 3, 0.5, 1.0);
  const CopyMixturePolicy policy(vocab, params);
  GroupSample g;
  g.context = task.context;
  for (int i = 0; i < 8; ++i) {
    g.rollouts.push_back(sample_rollout(policy, task.context, 16, 40 + i));
    g.old_logprobs.push_back(log_prob_sequence(policy, task.context, g.rollouts.back().tokens).per_token);
    g.advantages.push_back(i % 2 == 0 ? 1.0 : -1.0);
  }
  const GrpoConfig cfg;
  for (auto _ : state) benchmark::DoNotOptimize(grpo_surrogate(g, vocab, params, params, cfg));
}
BENCHMARK(BM_Surrogate);

}  // namespace

BENCHMARK_MAIN();
