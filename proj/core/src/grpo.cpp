#include "groundrl/grpo.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "groundrl/errors.hpp"
#include "groundrl/rng.hpp"
#include "groundrl/rules.hpp"

namespace groundrl {

void GrpoConfig::validate() const {
  auto fail = [](const std::string& msg) { throw ConfigError("grpo config: " + msg); };
  if (group_size < 1) fail("group_size must be >= 1");
  if (!(clip_epsilon > 0.0 && clip_epsilon < 1.0)) fail("clip_epsilon must lie in (0, 1)");
  if (!(kl_beta >= 0.0)) fail("kl_beta must be >= 0");
  if (!std::isfinite(learning_rate)) fail("learning_rate must be finite");
  if (steps < 0) fail("steps must be >= 0");
  if (!(adv_epsilon > 0.0)) fail("adv_epsilon must be > 0");
  if (max_len < 1) fail("max_len must be >= 1");
  if (batch_size < 1) fail("batch_size must be >= 1");
  if (!(divergence_bound > 0.0)) fail("divergence_bound must be > 0");
  if (eval_k < 1) fail("eval_k must be >= 1");
  if (eval_max_len < 0) fail("eval_max_len must be >= 0");
}

std::vector<double> compute_advantages(std::span<const double> rewards, double adv_epsilon) {
  if (rewards.empty()) throw ConfigError("compute_advantages: empty group");
  const double n = static_cast<double>(rewards.size());
  double mean = 0.0;
  for (double r : rewards) mean += r;
  mean /= n;
  double var = 0.0;
  for (double r : rewards) var += (r - mean) * (r - mean);
  const double sigma = std::sqrt(var / n);
  std::vector<double> out(rewards.size());
  for (std::size_t i = 0; i < rewards.size(); ++i) out[i] = (rewards[i] - mean) / (sigma + adv_epsilon);
  return out;
}

SurrogateResult grpo_surrogate(const GroupSample& group, const Vocabulary& vocab,
                               const PolicyParameters& params, const PolicyParameters& old_params,
                               const GrpoConfig& config, const PolicyParameters* reference) {
  const std::size_t G = group.rollouts.size();
  if (G == 0) throw ConfigError("grpo_surrogate: empty group");
  if (group.old_logprobs.size() != G || group.advantages.size() != G) {
    throw ConfigError("grpo_surrogate: rollouts, old_logprobs and advantages differ in count");
  }
  for (std::size_t i = 0; i < G; ++i) {
    if (group.old_logprobs[i].size() != group.rollouts[i].length()) {
      throw ConfigError("grpo_surrogate: rollout " + std::to_string(i) + " has " +
                        std::to_string(group.rollouts[i].length()) + " tokens but " +
                        std::to_string(group.old_logprobs[i].size()) + " old log-probabilities");
    }
    if (group.rollouts[i].tokens.empty()) throw ConfigError("grpo_surrogate: empty rollout");
  }
  if (!params.same_layout(old_params)) throw ConfigError("grpo_surrogate: old_params layout mismatch");
  const bool use_kl = config.kl_beta > 0.0;
  if (use_kl && reference == nullptr) throw ConfigError("grpo_surrogate: kl_beta > 0 needs a reference policy");

  const CopyMixturePolicy policy(vocab, params);
  std::optional<CopyMixturePolicy> ref_policy;
  if (use_kl) ref_policy.emplace(vocab, *reference);
  const Prompt prompt = Prompt::build(group.context, vocab);
  const std::size_t V = static_cast<std::size_t>(vocab.size());
  const double lo = 1.0 - config.clip_epsilon;
  const double hi = 1.0 + config.clip_epsilon;

  SurrogateResult result;
  result.gradient = PolicyParameters::zeros(vocab.size());
  std::vector<double> upstream(V, 0.0);
  for (std::size_t i = 0; i < G; ++i) {
    const auto& tokens = group.rollouts[i].tokens;
    const double advantage = group.advantages[i];
    const double scale = 1.0 / (static_cast<double>(G) * static_cast<double>(tokens.size()));
    double clipped_sum = 0.0;
    double kl_sum = 0.0;
    for (std::size_t t = 0; t < tokens.size(); ++t) {
      const std::span<const TokenId> prefix(tokens.data(), t);
      const StepForward step = policy.forward(prompt, prefix);
      const auto y = static_cast<std::size_t>(tokens[t]);
      const double ratio = std::exp(std::log(step.probs[y]) - group.old_logprobs[i][t]);
      const double unclipped = ratio * advantage;
      const double clipped = std::clamp(ratio, lo, hi) * advantage;
      clipped_sum += std::min(unclipped, clipped);

      bool any = false;
      // d(min)/d(theta): the unclipped branch carries A * r * dlog p; the
      // clipped branch is constant in theta once the ratio is clamped.
      if (unclipped <= clipped && advantage != 0.0) {
        upstream[y] += scale * advantage * ratio / step.probs[y];
        any = true;
      }
      if (use_kl) {
        const auto ref = ref_policy->next_token_distribution(prompt, prefix);
        double kl = 0.0;
        for (std::size_t v = 0; v < V; ++v) {
          const double log_ratio = std::log(step.probs[v]) - std::log(ref[v]);
          kl += step.probs[v] * log_ratio;
          upstream[v] -= config.kl_beta * scale * (log_ratio + 1.0);
        }
        kl_sum += kl;
        any = true;
      }
      if (any) {
        policy.backward(step, upstream, result.gradient);
        std::fill(upstream.begin(), upstream.end(), 0.0);
      }
    }
    result.objective += scale * clipped_sum - config.kl_beta * scale * kl_sum;
  }
  return result;
}

double select_reward(const RewardBundle& bundle, RewardMode mode) {
  switch (mode) {
    case RewardMode::Acc: return bundle.r_acc;
    case RewardMode::Cite: return bundle.r_cite;
    case RewardMode::Total: return bundle.r_total;
    case RewardMode::Clr: return bundle.r_clr_raw;
    case RewardMode::HybridMul: return hybrid_reward(bundle.r_clr_norm, bundle.r_acc, Fusion::Mul);
    case RewardMode::HybridAdd: return hybrid_reward(bundle.r_clr_norm, bundle.r_acc, Fusion::Add);
  }
  return 0.0;
}

TrainResult train(const Vocabulary& vocab, PolicyParameters initial, std::span<const TaskInstance> tasks,
                  const TrainOptions& options, const std::function<void(const TrainRecord&)>& on_step) {
  const GrpoConfig& cfg = options.grpo;
  cfg.validate();
  options.scoring.validate();
  TrainResult result;
  result.params = std::move(initial);
  if (cfg.steps == 0) return result;
  if (tasks.empty()) throw ConfigError("train: empty task stream");

  const std::span<const TaskInstance> eval_tasks =
      options.eval_tasks.empty() ? tasks : std::span<const TaskInstance>(options.eval_tasks);
  const EvalOptions eval{cfg.eval_k, cfg.eval_max_len > 0 ? cfg.eval_max_len : cfg.max_len, options.eval_seed};
  const PolicyParameters reference = result.params;
  const Rng root(options.seed);
  const std::size_t G = static_cast<std::size_t>(cfg.group_size);

  for (int step = 0; step < cfg.steps; ++step) {
    Rng step_rng = root.split("step", static_cast<std::uint64_t>(step));
    const CopyMixturePolicy policy(vocab, result.params);
    PolicyParameters grad = PolicyParameters::zeros(vocab.size());

    double reward_sum = 0.0, len_sum = 0.0;
    std::size_t n_rollouts = 0;
    for (int b = 0; b < cfg.batch_size; ++b) {
      const TaskInstance& task = tasks[step_rng.below(tasks.size())];
      const Prompt prompt = Prompt::build(task.context, vocab);
      GroupSample group;
      group.context = task.context;
      group.answer = task.answer;
      group.rollouts.reserve(G);
      for (std::size_t i = 0; i < G; ++i) {
        const std::uint64_t seed = step_rng.split("rollout", static_cast<std::uint64_t>(b) * G + i).key();
        group.rollouts.push_back(sample_rollout(policy, prompt, cfg.max_len, seed));
      }
      GroupScore scored = score_group(policy, task.context, group.rollouts, options.scoring, task.answer);
      std::vector<double> rewards(G);
      for (std::size_t i = 0; i < G; ++i) rewards[i] = select_reward(scored.bundles[i], cfg.reward_mode);
      group.advantages = compute_advantages(rewards, cfg.adv_epsilon);
      for (std::size_t i = 0; i < G; ++i) {
        scored.bundles[i].advantage = group.advantages[i];
        len_sum += static_cast<double>(group.rollouts[i].length());
        reward_sum += rewards[i];
        ++n_rollouts;
        group.old_logprobs.push_back(std::move(scored.profiles[i].full));
      }
      group.bundles = std::move(scored.bundles);

      const SurrogateResult sur = grpo_surrogate(group, vocab, result.params, result.params, cfg,
                                                 cfg.kl_beta > 0.0 ? &reference : nullptr);
      grad.axpy(1.0 / static_cast<double>(cfg.batch_size), sur.gradient);
    }

    TrainRecord rec;
    rec.step = step;
    const double n = static_cast<double>(n_rollouts);
    rec.mean_reward = reward_sum / n;
    rec.mean_len = len_sum / n;
    const ReliancePoint rr = reference_reliance(policy, eval_tasks, eval);
    rec.acc_with_docs = rr.acc_with_docs;
    rec.acc_without_docs = rr.acc_without_docs;
    rec.rr = rr.rr;
    // Measured on the fixed evaluation set like RR, so step-to-step changes
    // reflect the policy and not which questions the batch drew.
    const Perplexities ppl = rollout_perplexities(policy, eval_tasks, eval.max_len, options.eval_seed,
                                                  options.scoring.clr.loo_mode);
    rec.ppl_full_seq = ppl.full_seq;
    rec.ppl_full_tok = ppl.full_tok;
    rec.ppl_loo_seq = ppl.loo_seq;
    rec.ppl_loo_tok = ppl.loo_tok;
    result.log.push_back(rec);
    if (on_step) on_step(rec);

    result.params.axpy(cfg.learning_rate, grad);
    result.params.version = "step-" + std::to_string(step + 1);
    const double magnitude = result.params.mean_abs();
    if (!result.params.all_finite() || magnitude > cfg.divergence_bound) {
      std::ostringstream msg;
      msg << "training diverged at step " << step << ": mean |theta| = " << magnitude << " exceeds bound "
          << cfg.divergence_bound;
      throw DivergenceError(msg.str());
    }
  }
  return result;
}

double pass_at_k(const Policy& policy, const RagContext& context, int k, std::span<const TokenId> answer,
                 int max_len, std::uint64_t seed) {
  if (k < 1) throw ConfigError("pass_at_k: k must be >= 1");
  const Prompt prompt = Prompt::build(context, policy.vocabulary());
  const Rng root(seed);
  int hits = 0;
  for (int s = 0; s < k; ++s) {
    const Rollout r = sample_rollout(policy, prompt, max_len, root.split("pass", static_cast<std::uint64_t>(s)).key());
    hits += correctness_reward(r.tokens, answer, policy.vocabulary()) == 1.0 ? 1 : 0;
  }
  return static_cast<double>(hits) / static_cast<double>(k);
}

FilterReport filter_dataset(std::span<const FilterCandidate> candidates, const FilterConfig& config) {
  if (!(config.band_share >= 0.0 && config.band_share <= 1.0)) {
    throw ConfigError("filter_dataset: band_share must lie in [0, 1]");
  }
  FilterReport report;
  report.band_requested = static_cast<std::size_t>(std::llround(config.band_share * static_cast<double>(config.target)));
  report.solved_requested = config.target - report.band_requested;
  std::vector<std::size_t> band, solved;
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    const auto& c = candidates[i];
    if (config.require_std && !(c.logprob_std > config.std_threshold)) continue;
    if (c.pass_rate >= config.band_low && c.pass_rate <= config.band_high) {
      band.push_back(i);
    } else if (c.pass_rate == 1.0) {
      solved.push_back(i);
    }
  }
  report.band_available = band.size();
  report.solved_available = solved.size();
  const std::size_t take_band = std::min(band.size(), report.band_requested);
  const std::size_t take_solved = std::min(solved.size(), report.solved_requested);
  report.selected.assign(band.begin(), band.begin() + static_cast<std::ptrdiff_t>(take_band));
  report.selected.insert(report.selected.end(), solved.begin(), solved.begin() + static_cast<std::ptrdiff_t>(take_solved));
  return report;
}

}  // namespace groundrl
