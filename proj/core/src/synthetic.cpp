#include "groundrl/synthetic.hpp"

#include <algorithm>
#include <cmath>

#include "groundrl/errors.hpp"
#include "groundrl/rng.hpp"
#include "groundrl/rules.hpp"

namespace groundrl {

void TaskSpec::validate() const {
  auto fail = [](const std::string& msg) { throw ConfigError("task spec: " + msg); };
  if (n_docs < 1) fail("n_docs must be >= 1");
  if (n_supporting < 1 || n_supporting > n_docs) fail("n_supporting must lie in [1, n_docs]");
  if (hops != 1 && hops != 2) fail("hops must be 1 or 2");
  if (hops == 2 && n_supporting < 2) fail("hops = 2 requires n_supporting >= 2");
  if (key_len < 1 || answer_len < 1) fail("key_len and answer_len must be >= 1");
  const int needed = hops == 1 ? key_len + answer_len : std::max(key_len + 1, answer_len + 1);
  if (doc_len < needed) fail("doc_len " + std::to_string(doc_len) + " cannot hold a fact of " + std::to_string(needed) + " tokens");
  if (n_docs > max_docs) fail("n_docs exceeds max_docs");
  if (n_tasks < 0) fail("n_tasks must be >= 0");
  (void)vocabulary();
}

std::vector<TaskInstance> gen_tasks(const TaskSpec& spec) {
  spec.validate();
  const Vocabulary vocab = spec.vocabulary();
  const int reserved_for_fact = spec.key_len + spec.answer_len + (spec.hops == 2 ? 1 : 0);
  constexpr int kMinFiller = 2;
  if (vocab.content_count() < reserved_for_fact + kMinFiller) {
    throw GenerationError("vocabulary of " + std::to_string(vocab.content_count()) +
                          " content tokens cannot keep key/answer/bridge tokens out of the filler");
  }

  std::vector<TaskInstance> tasks;
  tasks.reserve(static_cast<std::size_t>(spec.n_tasks));
  const Rng root(spec.seed);
  for (int i = 0; i < spec.n_tasks; ++i) {
    Rng rng = root.split("task", static_cast<std::uint64_t>(i));

    std::vector<TokenId> pool(static_cast<std::size_t>(vocab.content_count()));
    for (std::size_t k = 0; k < pool.size(); ++k) pool[k] = vocab.first_content() + static_cast<TokenId>(k);
    for (std::size_t k = 0; k < static_cast<std::size_t>(reserved_for_fact); ++k) {
      std::swap(pool[k], pool[k + rng.below(pool.size() - k)]);
    }
    auto it = pool.begin();
    std::vector<TokenId> key(it, it + spec.key_len);
    it += spec.key_len;
    std::vector<TokenId> answer(it, it + spec.answer_len);
    it += spec.answer_len;
    std::optional<TokenId> bridge;
    if (spec.hops == 2) bridge = *it++;
    const std::vector<TokenId> filler(it, pool.end());

    std::vector<int> slots(static_cast<std::size_t>(spec.n_docs));
    for (int d = 0; d < spec.n_docs; ++d) slots[static_cast<std::size_t>(d)] = d;
    for (std::size_t k = 0; k + 1 < slots.size(); ++k) std::swap(slots[k], slots[k + rng.below(slots.size() - k)]);

    TaskInstance task;
    task.seed = spec.seed;
    task.index = static_cast<std::uint64_t>(i);
    task.answer = answer;
    task.bridge = bridge;
    task.context.query.push_back(vocab.query_marker());
    task.context.query.insert(task.context.query.end(), key.begin(), key.end());
    task.context.documents.resize(static_cast<std::size_t>(spec.n_docs));
    for (int d = 0; d < spec.n_docs; ++d) {
      Document& doc = task.context.documents[static_cast<std::size_t>(d)];
      doc.doc_id = d;
      doc.tokens.resize(static_cast<std::size_t>(spec.doc_len));
      for (auto& t : doc.tokens) t = filler[rng.below(filler.size())];
    }
    for (int s = 0; s < spec.n_supporting; ++s) {
      Document& doc = task.context.documents[static_cast<std::size_t>(slots[static_cast<std::size_t>(s)])];
      doc.is_supporting = true;
      std::vector<TokenId> run;
      if (spec.hops == 1) {
        run = key;
        run.insert(run.end(), answer.begin(), answer.end());
      } else if (s == 0) {
        run = key;
        run.push_back(*bridge);
      } else if (s == 1) {
        run.push_back(*bridge);
        run.insert(run.end(), answer.begin(), answer.end());
      } else {
        run = key;
      }
      const std::size_t offset = rng.below(static_cast<std::uint64_t>(spec.doc_len) - run.size() + 1);
      std::copy(run.begin(), run.end(), doc.tokens.begin() + static_cast<std::ptrdiff_t>(offset));
    }
    tasks.push_back(std::move(task));
  }
  return tasks;
}

namespace {

bool contains_run(std::span<const TokenId> haystack, std::span<const TokenId> needle) {
  return std::search(haystack.begin(), haystack.end(), needle.begin(), needle.end()) != haystack.end();
}

bool contains_token(std::span<const TokenId> haystack, TokenId t) {
  return std::find(haystack.begin(), haystack.end(), t) != haystack.end();
}

}  // namespace

std::vector<std::string> validate_instance(const TaskInstance& task, const Vocabulary& vocab, int hops) {
  std::vector<std::string> problems;
  const auto& docs = task.context.documents;
  for (std::size_t d = 0; d < docs.size(); ++d) {
    if (docs[d].doc_id != static_cast<int>(d)) problems.push_back("doc ids are not 0-based and contiguous");
    if (docs[d].tokens.empty()) problems.push_back("document " + std::to_string(d) + " is empty");
    for (TokenId t : docs[d].tokens) {
      if (!vocab.contains(t)) problems.push_back("document " + std::to_string(d) + " has an invalid token");
    }
  }
  if (task.context.supporting_ids().empty()) problems.push_back("no supporting document");
  if (task.answer.empty()) problems.push_back("empty answer");

  int answer_docs = 0;
  for (const auto& doc : docs) {
    const bool holds_answer = contains_run(doc.tokens, task.answer);
    if (doc.is_supporting) {
      answer_docs += holds_answer ? 1 : 0;
      continue;
    }
    for (TokenId a : task.answer) {
      if (contains_token(doc.tokens, a)) {
        problems.push_back("answer token in noisy document " + std::to_string(doc.doc_id));
        break;
      }
    }
    if (task.bridge && contains_token(doc.tokens, *task.bridge)) {
      problems.push_back("bridge token in noisy document " + std::to_string(doc.doc_id));
    }
  }
  if (answer_docs == 0) problems.push_back("answer not found in any supporting document");

  if (hops == 2) {
    if (!task.bridge) {
      problems.push_back("two-hop task without bridge");
    } else {
      int bridge_docs = 0;
      int answer_with_bridge = 0;
      for (const auto& doc : docs) {
        if (!doc.is_supporting || !contains_token(doc.tokens, *task.bridge)) continue;
        ++bridge_docs;
        if (contains_run(doc.tokens, task.answer)) ++answer_with_bridge;
      }
      if (bridge_docs != 2) problems.push_back("bridge appears in " + std::to_string(bridge_docs) + " supporting documents");
      if (answer_docs != 1 || answer_with_bridge != 1) {
        problems.push_back("answer must appear only in the second hop document");
      }
    }
  } else if (task.bridge) {
    problems.push_back("single-hop task carries a bridge");
  }
  return problems;
}

double accuracy(const Policy& policy, std::span<const TaskInstance> tasks, bool with_docs,
                const EvalOptions& options) {
  if (tasks.empty()) throw ConfigError("accuracy: empty task set");
  if (options.k_samples < 1) throw ConfigError("accuracy: k_samples must be >= 1");
  const Vocabulary& vocab = policy.vocabulary();
  const Rng root(options.seed);
  std::size_t correct = 0;
  for (std::size_t n = 0; n < tasks.size(); ++n) {
    const RagContext context = with_docs ? tasks[n].context : tasks[n].context.without_documents();
    const Prompt prompt = Prompt::build(context, vocab);
    const Rng task_rng = root.split("acc", n);
    for (int s = 0; s < options.k_samples; ++s) {
      const std::uint64_t seed = task_rng.split("sample", static_cast<std::uint64_t>(s)).key();
      const Rollout r = sample_rollout(policy, prompt, options.max_len, seed);
      if (correctness_reward(r.tokens, tasks[n].answer, vocab) == 1.0) {
        ++correct;
        break;
      }
    }
  }
  return static_cast<double>(correct) / static_cast<double>(tasks.size());
}

ReliancePoint reference_reliance(const Policy& policy, std::span<const TaskInstance> tasks,
                                 const EvalOptions& options) {
  ReliancePoint p;
  p.acc_with_docs = accuracy(policy, tasks, true, options);
  p.acc_without_docs = accuracy(policy, tasks, false, options);
  p.rr = p.acc_with_docs - p.acc_without_docs;
  return p;
}

Perplexities perplexities(const Policy& policy, const RagContext& context, std::span<const TokenId> tokens,
                          LooMode mode) {
  const LikelihoodProfile profile = likelihood_profile(policy, context, tokens);
  double s_full = 0.0;
  for (double x : profile.full) s_full += x;
  const double s_loo = loo_sequence_score(profile, mode);
  const double T = static_cast<double>(tokens.size());
  return {std::exp(-s_full), std::exp(-s_full / T), std::exp(-s_loo), std::exp(-s_loo / T)};
}

Perplexities rollout_perplexities(const Policy& policy, std::span<const TaskInstance> tasks, int max_len,
                                  std::uint64_t seed, LooMode mode) {
  if (tasks.empty()) throw ConfigError("rollout_perplexities: empty task set");
  double s_full = 0.0, s_loo = 0.0, total_len = 0.0;
  const Rng root(seed);
  for (std::size_t n = 0; n < tasks.size(); ++n) {
    const Rollout r = sample_rollout(policy, tasks[n].context, max_len, root.split("ppl", n).key());
    const LikelihoodProfile profile = likelihood_profile(policy, tasks[n].context, r.tokens);
    for (double x : profile.full) s_full += x;
    s_loo += loo_sequence_score(profile, mode);
    total_len += static_cast<double>(r.length());
  }
  const double n = static_cast<double>(tasks.size());
  return {std::exp(-s_full / n), std::exp(-s_full / total_len), std::exp(-s_loo / n), std::exp(-s_loo / total_len)};
}

}  // namespace groundrl
