#include "groundrl/context.hpp"

#include <algorithm>

namespace groundrl {

std::vector<int> RagContext::supporting_ids() const {
  std::vector<int> ids;
  for (const auto& doc : documents) {
    if (doc.is_supporting) ids.push_back(doc.doc_id);
  }
  return ids;
}

const Document* RagContext::find(int doc_id) const {
  for (const auto& doc : documents) {
    if (doc.doc_id == doc_id) return &doc;
  }
  return nullptr;
}

RagContext RagContext::without_document(int doc_id) const {
  RagContext out;
  out.query = query;
  out.documents.reserve(documents.size());
  for (const auto& doc : documents) {
    if (doc.doc_id != doc_id) out.documents.push_back(doc);
  }
  return out;
}

RagContext RagContext::without_documents() const {
  RagContext out;
  out.query = query;
  return out;
}

Prompt Prompt::build(const RagContext& context, const Vocabulary& vocab) {
  Prompt prompt;
  vocab.check(context.query);
  prompt.query_ = context.query;
  auto query_content = [&](TokenId t) {
    return vocab.is_content(t) && std::find(context.query.begin(), context.query.end(), t) != context.query.end();
  };
  const int qlen = static_cast<int>(context.query.size());
  for (int i = 0; i < qlen; ++i) {
    const TokenId t = context.query[static_cast<std::size_t>(i)];
    prompt.positions_.push_back({t, -1, i, qlen, query_content(t), false});
  }
  for (const auto& doc : context.documents) {
    vocab.check(doc.tokens);
    const int seg_len = static_cast<int>(doc.tokens.size()) + 1;
    const bool matches = std::any_of(doc.tokens.begin(), doc.tokens.end(), query_content);
    prompt.positions_.push_back({vocab.cite(doc.doc_id), doc.doc_id, 0, seg_len, false, matches});
    for (int i = 0; i < static_cast<int>(doc.tokens.size()); ++i) {
      const TokenId t = doc.tokens[static_cast<std::size_t>(i)];
      prompt.positions_.push_back({t, doc.doc_id, i + 1, seg_len, query_content(t), matches});
    }
  }
  return prompt;
}

bool Prompt::contains_token(TokenId token) const {
  return std::any_of(positions_.begin(), positions_.end(),
                     [token](const PromptPosition& p) { return p.token == token; });
}

}  // namespace groundrl
