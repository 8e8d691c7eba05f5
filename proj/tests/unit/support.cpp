#include "support.hpp"

#include <algorithm>
#include <cmath>

namespace groundrl::testing {

RagContext random_context(Rng& rng, const Vocabulary& vocab, int n_docs, int n_supporting) {
  auto content = [&] {
    return static_cast<TokenId>(vocab.first_content() + static_cast<int>(rng.below(vocab.content_count())));
  };
  RagContext ctx;
  ctx.query.push_back(vocab.query_marker());
  const int qlen = 1 + static_cast<int>(rng.below(3));
  for (int i = 0; i < qlen; ++i) ctx.query.push_back(content());
  for (int d = 0; d < n_docs; ++d) {
    Document doc;
    doc.doc_id = d;
    const int len = 1 + static_cast<int>(rng.below(6));
    for (int i = 0; i < len; ++i) doc.tokens.push_back(content());
    ctx.documents.push_back(doc);
  }
  std::vector<int> order(static_cast<std::size_t>(n_docs));
  for (int d = 0; d < n_docs; ++d) order[static_cast<std::size_t>(d)] = d;
  for (int i = n_docs - 1; i > 0; --i) std::swap(order[static_cast<std::size_t>(i)], order[rng.below(i + 1)]);
  for (int k = 0; k < n_supporting; ++k) ctx.documents[static_cast<std::size_t>(order[static_cast<std::size_t>(k)])].is_supporting = true;
  auto& first = ctx.documents[static_cast<std::size_t>(order[0])].tokens;
  first[rng.below(first.size())] = ctx.query[1];
  return ctx;
}

std::vector<TokenId> random_tokens(Rng& rng, const Vocabulary& vocab, std::size_t length) {
  std::vector<TokenId> out(length);
  for (auto& t : out) t = static_cast<TokenId>(rng.below(static_cast<std::uint64_t>(vocab.size())));
  return out;
}

PolicyParameters random_params(const Vocabulary& vocab, std::uint64_t seed, double scale) {
  Rng rng = Rng(seed).split("test-params", 0);
  PolicyParameters p = PolicyParameters::zeros(vocab.size());
  for (auto& v : p.gate) v = scale * rng.normal();
  for (auto& v : p.unigram) v = scale * rng.normal();
  for (auto& v : p.copy) v = scale * rng.normal();
  return p;
}

namespace {

struct Pos {
  TokenId token;
  int doc;
  int offset;
  int seg;
};

}  // namespace

std::vector<double> oracle_distribution(const PolicyParameters& params, const Vocabulary& vocab,
                                        const RagContext& context, const std::vector<TokenId>& prefix) {
  std::vector<Pos> pos;
  const int qlen = static_cast<int>(context.query.size());
  for (int i = 0; i < qlen; ++i) pos.push_back({context.query[static_cast<std::size_t>(i)], -1, i, qlen});
  std::vector<bool> doc_matches;
  auto in_query = [&](TokenId t) {
    if (!vocab.is_content(t)) return false;
    for (TokenId q : context.query) {
      if (q == t) return true;
    }
    return false;
  };
  std::vector<bool> pos_matches;
  for (int i = 0; i < qlen; ++i) pos_matches.push_back(false);
  for (const auto& d : context.documents) {
    bool m = false;
    for (TokenId t : d.tokens) m = m || in_query(t);
    const int seg = static_cast<int>(d.tokens.size()) + 1;
    pos.push_back({vocab.cite(d.doc_id), d.doc_id, 0, seg});
    pos_matches.push_back(m);
    for (int i = 0; i < static_cast<int>(d.tokens.size()); ++i) {
      pos.push_back({d.tokens[static_cast<std::size_t>(i)], d.doc_id, i + 1, seg});
      pos_matches.push_back(m);
    }
  }
  auto emitted = [&](TokenId t) {
    for (TokenId y : prefix) {
      if (y == t) return true;
    }
    return false;
  };
  auto in_prompt = [&](TokenId t) {
    for (const auto& p : pos) {
      if (p.token == t) return true;
    }
    return false;
  };

  const std::size_t t = prefix.size();
  double gf[6] = {1.0, 0.1 * static_cast<double>(t), 0.0, 0.0, 0.0, 0.0};
  if (t > 0) {
    const TokenId last = prefix[t - 1];
    gf[2] = in_prompt(last) ? 1.0 : 0.0;
    for (std::size_t j = 1; j < pos.size(); ++j) {
      if (pos[j].offset > 0 && pos[j - 1].token == last) gf[3] = 1.0;
    }
    double found = 0;
    for (TokenId y : prefix) found += in_prompt(y) ? 1 : 0;
    gf[4] = found / static_cast<double>(t);
  }
  double relevant = 0, open_relevant = 0;
  for (std::size_t j = 0; j < pos.size(); ++j) {
    if (!pos_matches[j]) continue;
    relevant += 1;
    if (!emitted(pos[j].token)) open_relevant += 1;
  }
  if (relevant > 0) gf[5] = open_relevant / relevant;

  const std::size_t V = static_cast<std::size_t>(vocab.size());
  std::vector<double> copy(V, 0.0);
  double gate = 0.0;
  std::vector<double> score;
  std::vector<TokenId> tok;
  for (std::size_t j = 0; j < pos.size(); ++j) {
    if (emitted(pos[j].token)) continue;
    double f[8] = {};
    f[0] = in_query(pos[j].token) ? 1 : 0;
    if (pos[j].offset >= 1) {
      f[1] = in_query(pos[j - 1].token) ? 1 : 0;
      if (t >= 1 && pos[j - 1].token == prefix[t - 1]) {
        f[2] = 1;
        if (pos[j].offset >= 2 && t >= 2 && pos[j - 2].token == prefix[t - 2]) f[3] = 1;
      }
    }
    f[4] = pos[j].doc < 0 ? 1 : 0;
    f[5] = pos[j].seg > 1 ? static_cast<double>(pos[j].offset) / (pos[j].seg - 1) : 0.0;
    f[6] = (pos[j].doc >= 0 && pos[j].offset == 0) ? 1 : 0;
    f[7] = pos_matches[j] ? 1 : 0;
    double a = 0;
    for (int k = 0; k < 8; ++k) a += params.copy[static_cast<std::size_t>(k)] * f[k];
    score.push_back(a);
    tok.push_back(pos[j].token);
  }
  if (!score.empty()) {
    double g = 0;
    for (int k = 0; k < 6; ++k) g += params.gate[static_cast<std::size_t>(k)] * gf[k];
    gate = 1.0 / (1.0 + std::exp(-g));
    const double m = *std::max_element(score.begin(), score.end());
    double z = 0;
    for (double a : score) z += std::exp(a - m);
    for (std::size_t j = 0; j < score.size(); ++j) copy[static_cast<std::size_t>(tok[j])] += std::exp(score[j] - m) / z;
  }
  const double um = *std::max_element(params.unigram.begin(), params.unigram.end());
  double uz = 0;
  for (double u : params.unigram) uz += std::exp(u - um);
  std::vector<double> out(V);
  for (std::size_t v = 0; v < V; ++v) {
    const double uni = std::exp(params.unigram[v] - um) / uz;
    out[v] = (1.0 - 1e-8) * (gate * copy[v] + (1.0 - gate) * uni) + 1e-8 / static_cast<double>(V);
  }
  return out;
}

std::vector<double> oracle_logprobs(const PolicyParameters& params, const Vocabulary& vocab,
                                    const RagContext& context, const std::vector<TokenId>& tokens) {
  std::vector<double> out;
  std::vector<TokenId> prefix;
  for (TokenId y : tokens) {
    out.push_back(std::log(oracle_distribution(params, vocab, context, prefix)[static_cast<std::size_t>(y)]));
    prefix.push_back(y);
  }
  return out;
}

}  // namespace groundrl::testing
