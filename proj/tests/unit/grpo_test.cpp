#include <gtest/gtest.h>

#include <cmath>
#include <limits>

#include "groundrl/errors.hpp"
#include "groundrl/grpo.hpp"
#include "groundrl/synthetic.hpp"
#include "support.hpp"

namespace groundrl {
namespace {

using testing::random_context;
using testing::random_params;

const Vocabulary kVocab(32, 4);

TEST(Advantages, AllEqualGroupIsZero) {
  const std::vector<double> r{1, 1, 1, 1};
  for (double a : compute_advantages(r, 1e-8)) EXPECT_EQ(a, 0.0);
}

TEST(Advantages, TwoElementGroup) {
  const std::vector<double> r{0, 1};
  const auto a = compute_advantages(r, 1e-8);
  const double want = 0.5 / (0.5 + 1e-8);
  EXPECT_DOUBLE_EQ(a[0], -want);
  EXPECT_DOUBLE_EQ(a[1], want);
}

TEST(Advantages, LargeGroupCenteredAndScaled) {
  Rng rng(41);
  std::vector<double> r(1000);
  for (auto& x : r) x = 3.0 * rng.normal() + 2.0;
  double mean = 0, var = 0;
  for (double x : r) mean += x;
  mean /= 1000.0;
  for (double x : r) var += (x - mean) * (x - mean);
  const double sigma = std::sqrt(var / 1000.0);
  const auto a = compute_advantages(r, 1e-8);
  double am = 0, av = 0;
  for (double x : a) am += x;
  am /= 1000.0;
  for (double x : a) av += (x - am) * (x - am);
  EXPECT_LT(std::abs(am), 1e-9);
  const double target = sigma / (sigma + 1e-8);
  const double sd = std::sqrt(av / 1000.0);
  EXPECT_GE(sd, target * (1.0 - 1e-6));
  EXPECT_LE(sd, target * (1.0 + 1e-12));
  EXPECT_THROW(compute_advantages(std::vector<double>{}, 1e-8), ConfigError);
}

GroupSample make_group(Rng& rng, const PolicyParameters& old_params, int G, int max_len) {
  GroupSample g;
  g.context = random_context(rng, kVocab, 3, 1);
  const CopyMixturePolicy old_policy(kVocab, old_params);
  std::vector<double> rewards;
  for (int i = 0; i < G; ++i) {
    g.rollouts.push_back(sample_rollout(old_policy, g.context, max_len, rng.next_u64()));
    g.old_logprobs.push_back(log_prob_sequence(old_policy, g.context, g.rollouts.back().tokens).per_token);
    rewards.push_back(rng.uniform());
  }
  g.advantages = compute_advantages(rewards, 1e-8);
  return g;
}

TEST(Surrogate, RatioIdentityAtOldParams) {
  Rng rng(42);
  const PolicyParameters params = random_params(kVocab, 3);
  const GroupSample g = make_group(rng, params, 6, 7);
  const GrpoConfig cfg;
  const auto res = grpo_surrogate(g, kVocab, params, params, cfg);
  double want_obj = 0.0;
  PolicyParameters want = PolicyParameters::zeros(kVocab.size());
  const CopyMixturePolicy policy(kVocab, params);
  const Prompt prompt = Prompt::build(g.context, kVocab);
  for (std::size_t i = 0; i < g.rollouts.size(); ++i) {
    want_obj += g.advantages[i] / 6.0;
    want.axpy(g.advantages[i] / (6.0 * static_cast<double>(g.rollouts[i].length())),
              policy.grad_log_prob(prompt, g.rollouts[i].tokens));
  }
  EXPECT_NEAR(res.objective, want_obj, 1e-12);
  const auto a = res.gradient.flat(), b = want.flat();
  for (std::size_t i = 0; i < a.size(); ++i) ASSERT_NEAR(a[i], b[i], 1e-10) << i;
}

TEST(Surrogate, ZeroAdvantagesGiveZero) {
  Rng rng(43);
  const PolicyParameters params = random_params(kVocab, 4);
  GroupSample g = make_group(rng, params, 4, 6);
  for (auto& a : g.advantages) a = 0.0;
  PolicyParameters moved = params;
  moved.gate[0] += 0.3;
  const auto res = grpo_surrogate(g, kVocab, moved, params, GrpoConfig{});
  EXPECT_EQ(res.objective, 0.0);
  for (double x : res.gradient.flat()) EXPECT_EQ(x, 0.0);
}

TEST(Surrogate, PerTokenTermRespectsClipBound) {
  // One-token rollouts make the objective the per-token term itself.
  Rng rng(44);
  const GrpoConfig cfg;
  for (int c = 0; c < 300; ++c) {
    const PolicyParameters old_params = random_params(kVocab, 1000 + c);
    GroupSample g = make_group(rng, old_params, 1, 1);
    g.advantages = {4.0 * rng.uniform() - 2.0};
    PolicyParameters params = old_params;
    for (std::size_t i = 0; i < params.size(); ++i) params.at(i) += 0.8 * rng.normal();
    const double A = g.advantages[0];
    const double obj = grpo_surrogate(g, kVocab, params, old_params, cfg).objective;
    ASSERT_LE(obj, std::max((1 + cfg.clip_epsilon) * A, (1 - cfg.clip_epsilon) * A) + 1e-12);
  }
}

double rel_err(double a, double b) { return std::abs(a - b) / std::max({std::abs(a), std::abs(b), 1e-6}); }

void check_surrogate_fd(const GrpoConfig& cfg, std::uint64_t seed, int coords) {
  Rng rng(seed);
  const PolicyParameters old_params = random_params(kVocab, seed);
  const GroupSample g = make_group(rng, old_params, 4, 6);
  PolicyParameters params = old_params;
  // Small perturbation keeps most ratios inside the clip range, so both
  // branches are exercised without sitting on a kink.
  for (std::size_t i = 0; i < params.size(); ++i) params.at(i) += 0.05 * rng.normal();
  PolicyParameters reference = old_params;
  for (std::size_t i = 0; i < reference.size(); ++i) reference.at(i) += 0.2 * rng.normal();
  const auto grad = grpo_surrogate(g, kVocab, params, old_params, cfg, &reference).gradient.flat();
  const double h = 1e-5;
  for (int k = 0; k < coords; ++k) {
    const std::size_t i = rng.below(params.size());
    PolicyParameters plus = params, minus = params;
    plus.at(i) += h;
    minus.at(i) -= h;
    const double fd = (grpo_surrogate(g, kVocab, plus, old_params, cfg, &reference).objective -
                       grpo_surrogate(g, kVocab, minus, old_params, cfg, &reference).objective) /
                      (2 * h);
    ASSERT_LT(rel_err(grad[i], fd), 1e-4) << "coordinate " << i << " analytic " << grad[i] << " fd " << fd;
  }
}

TEST(Surrogate, GradientMatchesCentralDifferences) { check_surrogate_fd(GrpoConfig{}, 45, 50); }

TEST(Surrogate, KlGradientMatchesCentralDifferences) {
  GrpoConfig cfg;
  cfg.kl_beta = 0.3;
  check_surrogate_fd(cfg, 46, 50);
}

TEST(Surrogate, KlOffNeverTouchesReference) {
  Rng rng(47);
  const PolicyParameters params = random_params(kVocab, 5);
  const GroupSample g = make_group(rng, params, 4, 5);
  PolicyParameters poisoned = params;
  poisoned.gate[0] = std::numeric_limits<double>::quiet_NaN();
  const GrpoConfig cfg;
  const auto with_ref = grpo_surrogate(g, kVocab, params, params, cfg, &poisoned);
  const auto without = grpo_surrogate(g, kVocab, params, params, cfg, nullptr);
  EXPECT_EQ(with_ref.objective, without.objective);
  EXPECT_EQ(with_ref.gradient, without.gradient);
  GrpoConfig kl = cfg;
  kl.kl_beta = 0.1;
  EXPECT_THROW(grpo_surrogate(g, kVocab, params, params, kl, nullptr), ConfigError);
}

TEST(Surrogate, LengthMismatchIsRejected) {
  Rng rng(48);
  const PolicyParameters params = random_params(kVocab, 6);
  GroupSample g = make_group(rng, params, 3, 5);
  g.old_logprobs[1].push_back(-1.0);
  EXPECT_THROW(grpo_surrogate(g, kVocab, params, params, GrpoConfig{}), ConfigError);
}

TrainOptions small_options(int steps) {
  TrainOptions o;
  o.grpo.steps = steps;
  o.grpo.batch_size = 2;
  o.grpo.max_len = 6;
  o.grpo.learning_rate = 1.0;
  o.seed = 5;
  o.eval_seed = 6;
  return o;
}

std::vector<TaskInstance> small_tasks() {
  TaskSpec spec;
  spec.n_tasks = 12;
  spec.seed = 3;
  return gen_tasks(spec);
}

TEST(Train, ZeroStepsReturnsInitial) {
  const auto tasks = small_tasks();
  const Vocabulary v = TaskSpec{}.vocabulary();
  const auto init = random_parameters(v, 1);
  const auto res = train(v, init, tasks, small_options(0));
  EXPECT_EQ(res.params, init);
  EXPECT_TRUE(res.log.empty());
}

TEST(Train, DeterministicLog) {
  const auto tasks = small_tasks();
  const Vocabulary v = TaskSpec{}.vocabulary();
  const auto a = train(v, random_parameters(v, 1), tasks, small_options(4));
  const auto b = train(v, random_parameters(v, 1), tasks, small_options(4));
  ASSERT_EQ(a.log.size(), 4u);
  EXPECT_EQ(a.log, b.log);
  EXPECT_EQ(a.params, b.params);
  for (std::size_t i = 0; i < a.log.size(); ++i) {
    EXPECT_EQ(a.log[i].step, static_cast<int>(i));
    EXPECT_EQ(a.log[i].rr, a.log[i].acc_with_docs - a.log[i].acc_without_docs);
  }
  EXPECT_NE(a.params, random_parameters(v, 1));
}

TEST(Train, DivergenceGuardAborts) {
  const auto tasks = small_tasks();
  const Vocabulary v = TaskSpec{}.vocabulary();
  auto opts = small_options(50);
  opts.grpo.learning_rate = 1e6;
  opts.grpo.divergence_bound = 5.0;
  EXPECT_THROW(train(v, random_parameters(v, 1), tasks, opts), DivergenceError);
}

TEST(PassAtK, Extremes) {
  const Vocabulary v(32, 4);
  RagContext ctx;
  ctx.query = {v.query_marker(), 20};
  ctx.documents.push_back({0, {20, 21, 22}, true});
  const std::vector<TokenId> answer{21};
  PolicyParameters always = PolicyParameters::zeros(v.size());
  always.unigram[21] = 800.0;
  EXPECT_EQ(pass_at_k(CopyMixturePolicy(v, always), RagContext{}, 8, answer, 4, 1), 1.0);
  PolicyParameters never = PolicyParameters::zeros(v.size());
  never.unigram[static_cast<std::size_t>(v.eos())] = 800.0;
  EXPECT_EQ(pass_at_k(CopyMixturePolicy(v, never), RagContext{}, 8, answer, 4, 1), 0.0);
}

TEST(PassAtK, MatchesDirectRecount) {
  const auto tasks = small_tasks();
  const Vocabulary v = TaskSpec{}.vocabulary();
  PolicyParameters p = random_parameters(v, 9, 1.0);
  p.gate[kGateBias] = 2.0;
  p.copy[kCopyAfterQueryMatch] = 4.0;
  p.copy[kCopyContinues1] = 4.0;
  const CopyMixturePolicy policy(v, p);
  for (const auto& task : tasks) {
    const double got = pass_at_k(policy, task.context, 8, task.answer, 6, 77);
    const Rng root(77);
    int hits = 0;
    for (int s = 0; s < 8; ++s) {
      const auto r = sample_rollout(policy, task.context, 6, root.split("pass", static_cast<std::uint64_t>(s)).key());
      hits += correctness_reward(r.tokens, task.answer, v) == 1.0;
    }
    ASSERT_EQ(got, hits / 8.0);
  }
}

TEST(Filter, BandAndStdRules) {
  std::vector<FilterCandidate> c{{0.9375, 50.0}, {0.5, 10.0}, {0.5, 10.5}, {1.0, 20.0}, {0.05, 30.0}};
  FilterConfig cfg;
  cfg.target = 10;
  const auto rep = filter_dataset(c, cfg);
  EXPECT_EQ(rep.band_available, 1u);
  EXPECT_EQ(rep.solved_available, 1u);
  EXPECT_EQ(rep.selected, (std::vector<std::size_t>{2, 3}));
  EXPECT_EQ(rep.band_requested, 9u);
  EXPECT_EQ(rep.solved_requested, 1u);
}

TEST(Filter, StratumProportions) {
  std::vector<FilterCandidate> c;
  Rng rng(49);
  std::size_t band = 0, solved = 0;
  for (int i = 0; i < 2000; ++i) {
    const double pass = rng.below(9) / 8.0;
    c.push_back({pass, 11.0 + rng.uniform()});
    band += (pass >= 0.1 && pass <= 0.875);
    solved += (pass == 1.0);
  }
  ASSERT_GE(band, 90u);
  ASSERT_GE(solved, 10u);
  FilterConfig cfg;
  cfg.target = 100;
  const auto rep = filter_dataset(c, cfg);
  ASSERT_EQ(rep.selected.size(), 100u);
  std::size_t got_band = 0;
  for (auto i : rep.selected) got_band += c[i].pass_rate < 1.0;
  EXPECT_EQ(got_band, 90u);
}

}  // namespace
}  // namespace groundrl
