#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include <nlohmann/json.hpp>

#include "dcitl/nn/tensor.hpp"
#include "dcitl/text/vocabulary.hpp"

namespace dcitl::text {

// |V| x dim matrix of word vectors; the padding row is all zeros.
class EmbeddingTable {
 public:
  EmbeddingTable() = default;
  EmbeddingTable(std::size_t rows, std::size_t dim);

  std::size_t rows() const noexcept { return rows_; }
  std::size_t dim() const noexcept { return dim_; }
  std::span<double> row(std::size_t id) { return {values_.data() + id * dim_, dim_}; }
  std::span<const double> row(std::size_t id) const { return {values_.data() + id * dim_, dim_}; }
  const std::vector<double>& values() const noexcept { return values_; }

  // Binary: magic "DCITLEMB", u32 version, u64 rows, u64 dim, u64 config
  // tag, then rows*dim little-endian doubles.
  void save(const std::filesystem::path& path, std::uint64_t tag = 0) const;
  static EmbeddingTable load(const std::filesystem::path& path, std::uint64_t* tag = nullptr);

  friend bool operator==(const EmbeddingTable&, const EmbeddingTable&) = default;

 private:
  std::size_t rows_ = 0, dim_ = 0;
  std::vector<double> values_;
};

struct SkipGramConfig {
  std::size_t dim = 128;
  std::size_t window = 5;
  std::size_t negatives = 5;
  std::size_t epochs = 5;
  double learning_rate = 0.025;
};

void to_json(nlohmann::json& j, const SkipGramConfig& c);
void from_json(const nlohmann::json& j, SkipGramConfig& c);

// Skip-gram with negative sampling over the token streams of `documents`
// (labels are never read). Tokens outside `vocab` are skipped. Single
// threaded and deterministic for a given seed.
EmbeddingTable train_skipgram(const Vocabulary& vocab, std::span<const Document> documents,
                              const SkipGramConfig& config, std::uint64_t seed);

double cosine_similarity(std::span<const double> a, std::span<const double> b);

// First max_len token rows of the document, right-padded with the zero row.
nn::Tensor encode_sequence(const Vocabulary& vocab, const EmbeddingTable& table,
                           const Document& doc, std::size_t max_len = 140);

// Same, from pre-mapped ids; writes into a [max_len, dim] slab.
void encode_ids(const EmbeddingTable& table, std::span<const std::uint32_t> ids,
                std::size_t max_len, std::span<double> out);

}  // namespace dcitl::text
