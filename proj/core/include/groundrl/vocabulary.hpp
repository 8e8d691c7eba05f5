#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>

namespace groundrl {

using TokenId = std::int32_t;

/// Synthetic vocabulary with a fixed reserved block.
///
/// Layout: 0 BOS, 1 EOS, 2 THINK_OPEN, 3 THINK_CLOSE, 4 QUERY marker,
/// then CITE(0) .. CITE(max_docs - 1), then content tokens up to V - 1.
class Vocabulary {
 public:
  Vocabulary(int size, int max_docs);

  int size() const { return size_; }
  int max_docs() const { return max_docs_; }
  int reserved_count() const { return kFixedReserved + max_docs_; }

  TokenId bos() const { return 0; }
  TokenId eos() const { return 1; }
  TokenId think_open() const { return 2; }
  TokenId think_close() const { return 3; }
  TokenId query_marker() const { return 4; }
  TokenId cite(int doc_id) const;
  std::optional<int> cite_doc(TokenId token) const;

  TokenId first_content() const { return reserved_count(); }
  int content_count() const { return size_ - reserved_count(); }
  bool is_content(TokenId token) const;

  bool contains(TokenId token) const { return token >= 0 && token < size_; }
  // Throws InvalidTokenError for ids outside [0, V).
  void check(TokenId token) const;
  void check(std::span<const TokenId> tokens) const;

  std::string display(TokenId token) const;

  bool operator==(const Vocabulary&) const = default;

 private:
  static constexpr int kFixedReserved = 5;
  int size_;
  int max_docs_;
};

}  // namespace groundrl
