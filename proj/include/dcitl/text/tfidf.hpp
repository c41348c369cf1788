#pragma once

#include <cstdint>
#include <vector>

#include "dcitl/text/vocabulary.hpp"

namespace dcitl::text {

// Sparse vector with strictly increasing indices.
struct SparseVector {
  std::size_t dimension = 0;
  std::vector<std::uint32_t> indices;
  std::vector<double> values;

  double at(std::uint32_t index) const;  // 0 when absent
  double norm() const;
  std::vector<double> dense() const;
};

// Smoothed inverse document frequency ln((1 + N) / (1 + df)).
double smoothed_idf(std::size_t n_docs, std::size_t df);

// tf * idf per vocabulary token, L2-normalised; unknown tokens are ignored.
// Documents with no weighted tokens map to the zero vector.
SparseVector tfidf_vectorize(const Vocabulary& vocab, const Document& doc);

// Raw term counts over the vocabulary (unknown tokens ignored).
SparseVector count_vectorize(const Vocabulary& vocab, const Document& doc);

}  // namespace dcitl::text
