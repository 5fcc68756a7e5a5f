#pragma once

// token <-> id mapping. three ids are reserved at the bottom of the space:
// unk (out-of-vocabulary), a sentence-start boundary and a sentence-end
// boundary. the boundary surface forms can never be produced by encoding
// ordinary text; they exist so models can condition on and predict sentence
// edges explicitly.

#include <algorithm>
#include <cstdint>
#include <map>
#include <span>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

#include "antilm/util.hpp"

namespace antilm {

inline constexpr std::int32_t kUnkId = 0;
inline constexpr std::int32_t kStartId = 1;
inline constexpr std::int32_t kEndId = 2;
inline constexpr const char* kUnkToken = "<unk>";
inline constexpr const char* kStartToken = "<s>";
inline constexpr const char* kEndToken = "</s>";

class Vocabulary {
 public:
  Vocabulary() = default;

  // tokens beyond the three reserved entries, already ordered by id
  explicit Vocabulary(std::vector<std::string> regular_tokens) {
    id_to_token_ = {kUnkToken, kStartToken, kEndToken};
    id_to_token_.insert(id_to_token_.end(), regular_tokens.begin(), regular_tokens.end());
    for (std::size_t i = 0; i < id_to_token_.size(); ++i) {
      auto [it, fresh] = token_to_id_.emplace(id_to_token_[i], static_cast<std::int32_t>(i));
      if (!fresh) throw std::invalid_argument("duplicate token in vocabulary: " + id_to_token_[i]);
    }
  }

  std::int32_t size() const { return static_cast<std::int32_t>(id_to_token_.size()); }

  // ordinary text can only map to unk or a regular id, never to a boundary
  std::int32_t encode(const std::string& token) const {
    auto it = token_to_id_.find(token);
    if (it == token_to_id_.end()) return kUnkId;
    if (it->second == kStartId || it->second == kEndId) return kUnkId;
    return it->second;
  }

  bool contains(const std::string& token) const {
    auto it = token_to_id_.find(token);
    return it != token_to_id_.end() && it->second != kStartId && it->second != kEndId;
  }

  const std::string& decode(std::int32_t id) const {
    if (id < 0 || id >= size()) throw std::out_of_range("token id out of range: " + std::to_string(id));
    return id_to_token_[static_cast<std::size_t>(id)];
  }

  const std::vector<std::string>& tokens() const { return id_to_token_; }

  // stable content hash over the id-ordered token list; artifacts carry this
  // so mismatched vocabularies are caught at load/eval time
  std::uint64_t fingerprint() const {
    std::uint64_t h = 0xcbf29ce484222325ull;
    for (const auto& t : id_to_token_) {
      h = fnv1a64(t, h);
      h = fnv1a64("\x1f", h);  // separator so ["ab","c"] != ["a","bc"]
    }
    return h;
  }

 private:
  std::unordered_map<std::string, std::int32_t> token_to_id_;
  std::vector<std::string> id_to_token_;
};

// frequency-then-lexicographic vocabulary construction. tokens whose count is
// below min_count fall back to unk at encode time. the literal reserved
// surface forms are not counted as regular tokens if they appear in the text.
inline Vocabulary build_vocabulary(std::span<const std::string> lines, int min_count = 1) {
  if (min_count < 1) throw std::invalid_argument("min_count must be >= 1");
  std::map<std::string, std::int64_t> counts;  // ordered map: lexicographic ties for free
  std::int64_t total = 0;
  for (const auto& line : lines) {
    for (auto& tok : split_ws(line)) {
      ++total;
      if (tok == kStartToken || tok == kEndToken || tok == kUnkToken) continue;
      ++counts[tok];
    }
  }
  if (total == 0) throw std::runtime_error("empty corpus");

  std::vector<std::pair<std::string, std::int64_t>> kept;
  kept.reserve(counts.size());
  for (auto& [tok, c] : counts)
    if (c >= min_count) kept.emplace_back(tok, c);
  // descending frequency; the map already yields lexicographic order within a
  // frequency class and stable_sort preserves it
  std::stable_sort(kept.begin(), kept.end(),
                   [](const auto& a, const auto& b) { return a.second > b.second; });

  std::vector<std::string> ordered;
  ordered.reserve(kept.size());
  for (auto& [tok, c] : kept) ordered.push_back(tok);
  return Vocabulary(std::move(ordered));
}

}  // namespace antilm
