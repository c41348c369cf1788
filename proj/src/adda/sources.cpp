#include "dcitl/adda/sources.hpp"

#include <algorithm>
#include <numeric>
#include <stdexcept>
#include <string>

namespace dcitl::adda {

namespace {

void check_index(std::size_t i, std::size_t n) {
  if (i >= n) {
    throw std::out_of_range("sample index " + std::to_string(i) + " outside source of size " +
                            std::to_string(n));
  }
}

std::vector<std::size_t> batch_shape(std::size_t n, std::vector<std::size_t> sample) {
  sample.insert(sample.begin(), n);
  return sample;
}

}  // namespace

DenseSource::DenseSource(nn::Tensor rows) : rows_(std::move(rows)) {
  if (rows_.rank() < 2) throw std::invalid_argument("DenseSource needs a batch axis and features");
}

std::vector<std::size_t> DenseSource::sample_shape() const {
  return {rows_.shape().begin() + 1, rows_.shape().end()};
}

nn::Tensor DenseSource::gather(std::span<const std::size_t> indices) const {
  if (indices.empty()) throw std::invalid_argument("gather of an empty batch");
  nn::Tensor out(batch_shape(indices.size(), sample_shape()));
  const std::size_t width = rows_.row_size();
  for (std::size_t r = 0; r < indices.size(); ++r) {
    check_index(indices[r], size());
    auto src = rows_.row(indices[r]);
    std::copy(src.begin(), src.end(), out.data().begin() + static_cast<std::ptrdiff_t>(r * width));
  }
  return out;
}

SequenceSource::SequenceSource(std::vector<std::vector<std::uint32_t>> ids,
                               std::shared_ptr<const text::EmbeddingTable> table, std::size_t max_len)
    : ids_(std::move(ids)), table_(std::move(table)), max_len_(max_len) {
  if (!table_ || table_->rows() == 0) throw std::invalid_argument("SequenceSource needs an embedding table");
  if (max_len_ == 0) throw std::invalid_argument("SequenceSource needs max_len > 0");
  for (const auto& doc : ids_) {
    for (auto id : doc) {
      if (id >= table_->rows()) throw std::out_of_range("token id outside the embedding table");
    }
  }
}

nn::Tensor SequenceSource::gather(std::span<const std::size_t> indices) const {
  if (indices.empty()) throw std::invalid_argument("gather of an empty batch");
  nn::Tensor out(batch_shape(indices.size(), sample_shape()));
  for (std::size_t r = 0; r < indices.size(); ++r) {
    check_index(indices[r], size());
    text::encode_ids(*table_, ids_[indices[r]], max_len_, out.row(r));
  }
  return out;
}

SparseSource::SparseSource(std::vector<text::SparseVector> rows) : rows_(std::move(rows)) {
  if (rows_.empty()) throw std::invalid_argument("SparseSource needs at least one row");
  dimension_ = rows_.front().dimension;
  for (const auto& r : rows_) {
    if (r.dimension != dimension_) throw std::invalid_argument("SparseSource rows differ in dimension");
  }
}

nn::Tensor SparseSource::gather(std::span<const std::size_t> indices) const {
  if (indices.empty()) throw std::invalid_argument("gather of an empty batch");
  nn::Tensor out({indices.size(), dimension_});
  for (std::size_t r = 0; r < indices.size(); ++r) {
    check_index(indices[r], size());
    const auto& v = rows_[indices[r]];
    auto dst = out.row(r);
    for (std::size_t k = 0; k < v.indices.size(); ++k) dst[v.indices[k]] = v.values[k];
  }
  return out;
}

nn::Tensor infer_all(std::span<const nn::LayerStack* const> stacks, const FeatureSource& source,
                     std::size_t chunk) {
  if (source.size() == 0) throw std::invalid_argument("infer_all on an empty source");
  chunk = std::max<std::size_t>(chunk, 1);
  std::vector<nn::Tensor> parts;
  std::vector<std::size_t> idx;
  for (std::size_t begin = 0; begin < source.size(); begin += chunk) {
    idx.resize(std::min(chunk, source.size() - begin));
    std::iota(idx.begin(), idx.end(), begin);
    nn::Tensor x = source.gather(idx);
    for (const nn::LayerStack* s : stacks) x = s->infer(x);
    parts.push_back(std::move(x));
  }
  std::vector<std::size_t> shape = parts.front().shape();
  shape[0] = source.size();
  nn::Tensor out(shape);
  auto dst = out.data().begin();
  for (const auto& p : parts) dst = std::copy(p.data().begin(), p.data().end(), dst);
  return out;
}

}  // namespace dcitl::adda
