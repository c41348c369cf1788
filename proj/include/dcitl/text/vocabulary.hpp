#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "dcitl/text/corpus.hpp"

namespace dcitl::text {

// Dense token ids with padding = 0 and unknown = 1. Document frequencies are
// counted over the documents the vocabulary was built from.
class Vocabulary {
 public:
  static constexpr std::uint32_t kPadId = 0;
  static constexpr std::uint32_t kUnknownId = 1;
  static constexpr std::string_view kPadToken = "<pad>";
  static constexpr std::string_view kUnknownToken = "<unk>";

  Vocabulary();

  // Keeps tokens with df >= min_df. Ids are assigned by descending df, then
  // lexicographically, so the result does not depend on document order.
  static Vocabulary build(std::span<const Document> documents, std::size_t min_df = 2);

  std::size_t size() const noexcept { return tokens_.size(); }
  std::size_t document_count() const noexcept { return n_docs_; }

  std::uint32_t id(const std::string& token) const;  // kUnknownId when absent
  bool contains(const std::string& token) const { return index_.contains(token); }
  const std::string& token(std::uint32_t id) const { return tokens_.at(id); }
  std::size_t document_frequency(std::uint32_t id) const { return df_.at(id); }

  std::vector<std::uint32_t> encode(const Document& doc) const;

  // Sidecar format: header `#dcitl-vocab v1 docs=<N>`, then `id<TAB>token<TAB>df`.
  void save(const std::filesystem::path& path) const;
  static Vocabulary load(const std::filesystem::path& path);

  friend bool operator==(const Vocabulary& a, const Vocabulary& b) {
    return a.tokens_ == b.tokens_ && a.df_ == b.df_ && a.n_docs_ == b.n_docs_;
  }

 private:
  void add(std::string token, std::size_t df);

  std::vector<std::string> tokens_;
  std::vector<std::size_t> df_;
  std::unordered_map<std::string, std::uint32_t> index_;
  std::size_t n_docs_ = 0;
};

}  // namespace dcitl::text
