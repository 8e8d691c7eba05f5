#include "groundrl/vocabulary.hpp"

#include "groundrl/errors.hpp"

namespace groundrl {

Vocabulary::Vocabulary(int size, int max_docs) : size_(size), max_docs_(max_docs) {
  if (max_docs < 1) throw ConfigError("vocabulary: max_docs must be >= 1");
  if (size < reserved_count() + 2) {
    throw ConfigError("vocabulary: size " + std::to_string(size) + " leaves fewer than 2 content tokens (" +
                      std::to_string(reserved_count()) + " reserved)");
  }
}

TokenId Vocabulary::cite(int doc_id) const {
  if (doc_id < 0 || doc_id >= max_docs_) {
    throw ConfigError("vocabulary: doc_id " + std::to_string(doc_id) + " has no citation marker (max_docs " +
                      std::to_string(max_docs_) + ")");
  }
  return kFixedReserved + doc_id;
}

std::optional<int> Vocabulary::cite_doc(TokenId token) const {
  if (token >= kFixedReserved && token < reserved_count()) return token - kFixedReserved;
  return std::nullopt;
}

bool Vocabulary::is_content(TokenId token) const {
  return token >= first_content() && token < size_;
}

void Vocabulary::check(TokenId token) const {
  if (!contains(token)) {
    throw InvalidTokenError("token id " + std::to_string(token) + " outside vocabulary of size " +
                            std::to_string(size_));
  }
}

void Vocabulary::check(std::span<const TokenId> tokens) const {
  for (TokenId t : tokens) check(t);
}

std::string Vocabulary::display(TokenId token) const {
  switch (token) {
    case 0: return "<bos>";
    case 1: return "<eos>";
    case 2: return "<think>";
    case 3: return "</think>";
    case 4: return "<q>";
    default: break;
  }
  if (auto doc = cite_doc(token)) return "[doc " + std::to_string(*doc) + "]";
  if (is_content(token)) return "t" + std::to_string(token);
  return "<invalid:" + std::to_string(token) + ">";
}

}  // namespace groundrl
