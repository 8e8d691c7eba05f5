#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <set>

#include "groundrl/copy_mixture.hpp"
#include "groundrl/errors.hpp"
#include "groundrl/rules.hpp"
#include "groundrl/synthetic.hpp"
#include "support.hpp"

namespace groundrl {
namespace {

// Fixed-distribution policies for the accuracy checks.
class ScriptedPolicy final : public Policy {
 public:
  ScriptedPolicy(Vocabulary vocab, std::vector<TokenId> script) : vocab_(vocab), script_(std::move(script)) {}
  const Vocabulary& vocabulary() const override { return vocab_; }
  std::vector<double> next_token_distribution(const Prompt&, std::span<const TokenId> prefix) const override {
    std::vector<double> p(static_cast<std::size_t>(vocab_.size()), 0.0);
    const TokenId next = prefix.size() < script_.size() ? script_[prefix.size()] : vocab_.eos();
    p[static_cast<std::size_t>(next)] = 1.0;
    return p;
  }

 private:
  Vocabulary vocab_;
  std::vector<TokenId> script_;
};

// Ignores the prompt entirely: uniform over content tokens and EOS.
class BlindPolicy final : public Policy {
 public:
  explicit BlindPolicy(Vocabulary vocab) : vocab_(vocab) {}
  const Vocabulary& vocabulary() const override { return vocab_; }
  std::vector<double> next_token_distribution(const Prompt&, std::span<const TokenId>) const override {
    std::vector<double> p(static_cast<std::size_t>(vocab_.size()), 0.0);
    const double w = 1.0 / (vocab_.content_count() + 1);
    for (TokenId t = vocab_.first_content(); t < vocab_.size(); ++t) p[static_cast<std::size_t>(t)] = w;
    p[static_cast<std::size_t>(vocab_.eos())] = w;
    return p;
  }

 private:
  Vocabulary vocab_;
};

class UniformPolicy final : public Policy {
 public:
  explicit UniformPolicy(Vocabulary vocab) : vocab_(vocab) {}
  const Vocabulary& vocabulary() const override { return vocab_; }
  std::vector<double> next_token_distribution(const Prompt&, std::span<const TokenId>) const override {
    return std::vector<double>(static_cast<std::size_t>(vocab_.size()), 1.0 / vocab_.size());
  }

 private:
  Vocabulary vocab_;
};

bool has_run(const std::vector<TokenId>& hay, const std::vector<TokenId>& needle) {
  return std::search(hay.begin(), hay.end(), needle.begin(), needle.end()) != hay.end();
}

bool has_token(const std::vector<TokenId>& hay, TokenId t) {
  return std::find(hay.begin(), hay.end(), t) != hay.end();
}

// Independent restatement of the construction invariants.
void expect_invariants(const TaskInstance& task, const TaskSpec& spec) {
  const auto& docs = task.context.documents;
  ASSERT_EQ(static_cast<int>(docs.size()), spec.n_docs);
  ASSERT_EQ(static_cast<int>(task.context.supporting_ids().size()), spec.n_supporting);
  ASSERT_EQ(static_cast<int>(task.answer.size()), spec.answer_len);
  int answer_docs = 0;
  for (const auto& doc : docs) {
    if (doc.is_supporting) {
      if (has_run(doc.tokens, task.answer)) ++answer_docs;
    } else {
      for (TokenId a : task.answer) EXPECT_FALSE(has_token(doc.tokens, a)) << "answer token in noise";
      if (task.bridge) EXPECT_FALSE(has_token(doc.tokens, *task.bridge)) << "bridge in noise";
    }
  }
  EXPECT_GE(answer_docs, 1);
  if (spec.hops == 2) {
    ASSERT_TRUE(task.bridge.has_value());
    int bridge_docs = 0;
    for (const auto& doc : docs) bridge_docs += doc.is_supporting && has_token(doc.tokens, *task.bridge);
    EXPECT_EQ(bridge_docs, 2);
    EXPECT_EQ(answer_docs, 1);
  } else {
    EXPECT_FALSE(task.bridge.has_value());
  }
}

TEST(Synthetic, SingleDocumentHoldsTheFact) {
  TaskSpec spec;
  spec.n_docs = 1;
  spec.n_supporting = 1;
  spec.n_tasks = 20;
  spec.seed = 5;
  for (const auto& task : gen_tasks(spec)) {
    ASSERT_EQ(task.context.documents.size(), 1u);
    const auto& doc = task.context.documents[0].tokens;
    std::vector<TokenId> fact(task.context.query.begin() + 1, task.context.query.end());
    fact.insert(fact.end(), task.answer.begin(), task.answer.end());
    EXPECT_TRUE(has_run(doc, fact));
  }
}

TEST(Synthetic, ThousandInstancesSatisfyInvariants) {
  for (int hops : {1, 2}) {
    TaskSpec spec;
    spec.hops = hops;
    spec.n_docs = 5;
    spec.n_supporting = hops == 2 ? 3 : 2;
    spec.n_tasks = 1000;
    spec.seed = 17 + static_cast<std::uint64_t>(hops);
    const auto tasks = gen_tasks(spec);
    ASSERT_EQ(tasks.size(), 1000u);
    for (const auto& task : tasks) {
      expect_invariants(task, spec);
      EXPECT_TRUE(validate_instance(task, spec.vocabulary(), hops).empty());
    }
  }
}

TEST(Synthetic, TwoHopRemovalBreaksTheChain) {
  TaskSpec spec;
  spec.hops = 2;
  spec.n_docs = 4;
  spec.n_supporting = 2;
  spec.n_tasks = 200;
  spec.seed = 3;
  for (const auto& task : gen_tasks(spec)) {
    const std::vector<TokenId> key(task.context.query.begin() + 1, task.context.query.end());
    for (int removed : task.context.supporting_ids()) {
      const RagContext ctx = task.context.without_document(removed);
      // Derivable means: some document links key -> bridge and some
      // document links bridge -> answer.
      std::vector<TokenId> kb = key;
      kb.push_back(*task.bridge);
      std::vector<TokenId> ba{*task.bridge};
      ba.insert(ba.end(), task.answer.begin(), task.answer.end());
      bool first = false, second = false;
      for (const auto& d : ctx.documents) {
        first = first || has_run(d.tokens, kb);
        second = second || has_run(d.tokens, ba);
      }
      EXPECT_FALSE(first && second);
    }
  }
}

TEST(Synthetic, GenerationIsDeterministic) {
  TaskSpec spec;
  spec.n_tasks = 50;
  spec.seed = 99;
  EXPECT_EQ(gen_tasks(spec), gen_tasks(spec));
  spec.seed = 100;
  TaskSpec other = spec;
  other.seed = 99;
  EXPECT_NE(gen_tasks(spec), gen_tasks(other));
}

TEST(Synthetic, InvalidSpecsThrow) {
  TaskSpec spec;
  spec.n_supporting = 0;
  EXPECT_THROW(gen_tasks(spec), ConfigError);
  spec = {};
  spec.n_supporting = spec.n_docs + 1;
  EXPECT_THROW(gen_tasks(spec), ConfigError);
  spec = {};
  spec.hops = 2;
  spec.n_supporting = 1;
  EXPECT_THROW(gen_tasks(spec), ConfigError);
  spec = {};
  spec.vocab_size = 16;  // 13 reserved, too few content tokens
  EXPECT_ANY_THROW(gen_tasks(spec));
}

TEST(Accuracy, AlwaysAnswerPolicyScoresOne) {
  TaskSpec spec;
  spec.n_tasks = 30;
  spec.seed = 8;
  auto tasks = gen_tasks(spec);
  // Give every task the same answer so a single script answers them all.
  for (auto& t : tasks) t.answer = tasks[0].answer;
  const ScriptedPolicy policy(spec.vocabulary(), tasks[0].answer);
  const EvalOptions opt{1, 8, 4};
  EXPECT_EQ(accuracy(policy, tasks, true, opt), 1.0);
  EXPECT_EQ(accuracy(policy, tasks, false, opt), 1.0);
  EXPECT_EQ(reference_reliance(policy, tasks, opt).rr, 0.0);
}

TEST(Accuracy, CopyOnlyPolicyFailsWithoutDocuments) {
  TaskSpec spec;
  spec.n_tasks = 300;
  spec.seed = 12;
  const auto tasks = gen_tasks(spec);
  const Vocabulary vocab = spec.vocabulary();
  // Gate saturated open, unigram strongly on EOS: without documents only
  // the query is copyable and the answer is never in the query.
  PolicyParameters p = PolicyParameters::zeros(vocab.size());
  p.gate[kGateBias] = 30.0;
  p.unigram[static_cast<std::size_t>(vocab.eos())] = 30.0;
  p.copy[kCopyAfterQueryMatch] = 20.0;
  p.copy[kCopyContinues1] = 20.0;
  const CopyMixturePolicy policy(vocab, p);
  const EvalOptions opt{1, 8, 21};
  EXPECT_LT(accuracy(policy, tasks, false, opt), 0.01);
  EXPECT_GT(accuracy(policy, tasks, true, opt), 0.5);
}

TEST(Accuracy, MatchesDirectRecount) {
  TaskSpec spec;
  spec.n_tasks = 60;
  spec.seed = 4;
  const auto tasks = gen_tasks(spec);
  const Vocabulary vocab = spec.vocabulary();
  const CopyMixturePolicy policy(vocab, random_parameters(vocab, 5, 1.0, 1.0));
  for (bool with_docs : {true, false}) {
    const EvalOptions opt{3, 10, 77};
    const Rng root(opt.seed);
    std::size_t hits = 0;
    for (std::size_t n = 0; n < tasks.size(); ++n) {
      const RagContext ctx = with_docs ? tasks[n].context : tasks[n].context.without_documents();
      bool any = false;
      for (int s = 0; s < opt.k_samples; ++s) {
        const auto seed = root.split("acc", n).split("sample", static_cast<std::uint64_t>(s)).key();
        const Rollout r = sample_rollout(policy, ctx, opt.max_len, seed);
        const auto visible = strip_think(r.tokens, vocab);
        any = any || has_run(visible, tasks[n].answer);
      }
      hits += any;
    }
    EXPECT_EQ(accuracy(policy, tasks, with_docs, opt), static_cast<double>(hits) / tasks.size());
  }
}

TEST(Reliance, ContextInsensitivePolicyHasNoReliance) {
  TaskSpec spec;
  spec.n_tasks = 1000;
  spec.answer_len = 1;  // keeps accuracies away from zero so the check has teeth
  spec.seed = 31;
  const auto tasks = gen_tasks(spec);
  const BlindPolicy policy(spec.vocabulary());
  const ReliancePoint p = reference_reliance(policy, tasks, {4, 6, 13});
  EXPECT_GT(p.acc_with_docs, 0.05);
  EXPECT_EQ(p.rr, p.acc_with_docs - p.acc_without_docs);
  EXPECT_LT(std::abs(p.rr), 0.05);
}

TEST(Reliance, PublishedArithmetic) {
  EXPECT_NEAR(0.838 - 0.279, 0.559, 1e-12);
  EXPECT_NEAR(0.72 - 0.2912, 0.4288, 1e-12);
}

TEST(Perplexity, ZeroScoreGivesOne) {
  const Vocabulary vocab(16, 2);
  const ScriptedPolicy policy(vocab, {});  // always EOS with probability 1
  RagContext ctx;
  ctx.query = {vocab.query_marker(), vocab.first_content()};
  ctx.documents = {{0, {vocab.first_content()}, true}};
  const std::vector<TokenId> y{vocab.eos()};
  const Perplexities p = perplexities(policy, ctx, y, LooMode::Min);
  EXPECT_EQ(p.full_seq, 1.0);
  EXPECT_EQ(p.full_tok, 1.0);
}

TEST(Perplexity, UniformPolicyTokenForm) {
  const Vocabulary vocab(8, 1);
  const UniformPolicy policy(vocab);
  RagContext ctx;
  ctx.query = {vocab.query_marker(), 6};
  ctx.documents = {{0, {6, 7}, true}};
  const std::vector<TokenId> y{6, 7, vocab.eos()};
  const Perplexities p = perplexities(policy, ctx, y, LooMode::Min);
  EXPECT_NEAR(p.full_tok, 8.0, 1e-12);
  EXPECT_NEAR(p.full_seq, 512.0, 1e-9);
  EXPECT_NEAR(p.loo_tok, 8.0, 1e-12);
}

TEST(Perplexity, MatchesComposition) {
  Rng rng(44);
  const Vocabulary vocab(32, 4);
  for (int c = 0; c < 50; ++c) {
    const RagContext ctx = testing::random_context(rng, vocab, 3, 2);
    const CopyMixturePolicy policy(vocab, testing::random_params(vocab, 100 + c));
    const auto y = testing::random_tokens(rng, vocab, 1 + rng.below(6));
    const double s = log_prob_sequence(policy, ctx, y).sum;
    double worst = INFINITY;
    double mean = 0.0;
    for (int id : ctx.supporting_ids()) {
      const double si = log_prob_sequence(policy, ctx.without_document(id), y).sum;
      worst = std::min(worst, si);
      mean += si / 2.0;
    }
    const double T = static_cast<double>(y.size());
    const Perplexities pm = perplexities(policy, ctx, y, LooMode::Min);
    EXPECT_NEAR(std::log(pm.full_seq), -s, 1e-9);
    EXPECT_NEAR(std::log(pm.full_tok), -s / T, 1e-9);
    EXPECT_NEAR(std::log(pm.loo_seq), -worst, 1e-9);
    EXPECT_NEAR(std::log(pm.loo_tok), -worst / T, 1e-9);
    const Perplexities pa = perplexities(policy, ctx, y, LooMode::Avg);
    EXPECT_NEAR(std::log(pa.loo_seq), -mean, 1e-9);
    // Floor-implied ceiling on the per-token form.
    EXPECT_TRUE(std::isfinite(pm.full_tok));
    EXPECT_GE(pm.full_tok, 1.0);
  }
}

}  // namespace
}  // namespace groundrl
