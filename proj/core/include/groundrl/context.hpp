#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "groundrl/vocabulary.hpp"

namespace groundrl {

struct Document {
  int doc_id = 0;
  std::vector<TokenId> tokens;
  bool is_supporting = false;

  bool operator==(const Document&) const = default;
};

/// Query plus ordered documents. The supporting labels are consumed by the
/// reward functions only; policies see a Prompt, which drops them.
struct RagContext {
  std::vector<TokenId> query;
  std::vector<Document> documents;

  std::vector<int> supporting_ids() const;
  const Document* find(int doc_id) const;
  // Copy with one document removed; the others keep their order and ids.
  RagContext without_document(int doc_id) const;
  RagContext without_documents() const;

  bool operator==(const RagContext&) const = default;
};

enum class Termination { Eos, MaxLength };

struct Rollout {
  std::vector<TokenId> tokens;
  Termination terminated_by = Termination::MaxLength;
  std::uint64_t seed = 0;

  std::size_t length() const { return tokens.size(); }
  bool operator==(const Rollout&) const = default;
};

/// One linearized context position.
struct PromptPosition {
  TokenId token = 0;
  int doc_id = -1;       // -1 for the query segment
  int offset = 0;        // index within the segment
  int segment_len = 0;
  bool query_content = false;     // content token that also occurs in the query
  bool segment_matches = false;   // document segment sharing a content token with the query
};

/// Label-free linearization of a RagContext.
///
/// Order: query tokens, then for each document in list order the marker
/// CITE(doc_id) followed by the document tokens. This is the only view of
/// a context a policy receives.
class Prompt {
 public:
  static Prompt build(const RagContext& context, const Vocabulary& vocab);

  std::span<const PromptPosition> positions() const { return positions_; }
  std::span<const TokenId> query() const { return query_; }
  std::size_t size() const { return positions_.size(); }
  bool empty() const { return positions_.empty(); }
  bool contains_token(TokenId token) const;

 private:
  std::vector<PromptPosition> positions_;
  std::vector<TokenId> query_;
};

}  // namespace groundrl
