#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>
#include <span>
#include <vector>

#include "dcitl/nn/layers.hpp"
#include "dcitl/nn/tensor.hpp"
#include "dcitl/text/embeddings.hpp"
#include "dcitl/text/tfidf.hpp"

namespace dcitl::adda {

// Materializes model inputs for arbitrary subsets of a corpus. Sources carry
// inputs only; labels travel separately so that a target source has nothing
// to leak.
class FeatureSource {
 public:
  virtual ~FeatureSource() = default;
  virtual std::size_t size() const = 0;
  // Shape of one input, without the batch axis.
  virtual std::vector<std::size_t> sample_shape() const = 0;
  virtual nn::Tensor gather(std::span<const std::size_t> indices) const = 0;
};

// Pre-computed rows of a [n, ...] tensor.
class DenseSource final : public FeatureSource {
 public:
  explicit DenseSource(nn::Tensor rows);
  std::size_t size() const override { return rows_.dim(0); }
  std::vector<std::size_t> sample_shape() const override;
  nn::Tensor gather(std::span<const std::size_t> indices) const override;
  const nn::Tensor& rows() const noexcept { return rows_; }

 private:
  nn::Tensor rows_;
};

// Token-id sequences looked up in a shared embedding table on demand:
// each sample is [max_len, dim].
class SequenceSource final : public FeatureSource {
 public:
  SequenceSource(std::vector<std::vector<std::uint32_t>> ids,
                 std::shared_ptr<const text::EmbeddingTable> table, std::size_t max_len);
  std::size_t size() const override { return ids_.size(); }
  std::vector<std::size_t> sample_shape() const override { return {max_len_, table_->dim()}; }
  nn::Tensor gather(std::span<const std::size_t> indices) const override;

 private:
  std::vector<std::vector<std::uint32_t>> ids_;
  std::shared_ptr<const text::EmbeddingTable> table_;
  std::size_t max_len_;
};

// Sparse vectors densified per batch: each sample is [dimension].
class SparseSource final : public FeatureSource {
 public:
  explicit SparseSource(std::vector<text::SparseVector> rows);
  std::size_t size() const override { return rows_.size(); }
  std::vector<std::size_t> sample_shape() const override { return {dimension_}; }
  nn::Tensor gather(std::span<const std::size_t> indices) const override;

 private:
  std::vector<text::SparseVector> rows_;
  std::size_t dimension_ = 0;
};

// Runs `stacks` in order over the whole source in fixed-size chunks
// (inference only).
nn::Tensor infer_all(std::span<const nn::LayerStack* const> stacks, const FeatureSource& source,
                     std::size_t chunk = 64);

}  // namespace dcitl::adda
