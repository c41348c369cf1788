#include "dcitl/text/tfidf.hpp"

#include <algorithm>
#include <cmath>
#include <map>

namespace dcitl::text {

double SparseVector::at(std::uint32_t index) const {
  const auto it = std::lower_bound(indices.begin(), indices.end(), index);
  if (it == indices.end() || *it != index) return 0.0;
  return values[static_cast<std::size_t>(it - indices.begin())];
}

double SparseVector::norm() const {
  double s = 0.0;
  for (double v : values) s += v * v;
  return std::sqrt(s);
}

std::vector<double> SparseVector::dense() const {
  std::vector<double> out(dimension, 0.0);
  for (std::size_t i = 0; i < indices.size(); ++i) out[indices[i]] = values[i];
  return out;
}

double smoothed_idf(std::size_t n_docs, std::size_t df) {
  return std::log((1.0 + static_cast<double>(n_docs)) / (1.0 + static_cast<double>(df)));
}

namespace {

std::map<std::uint32_t, std::size_t> term_counts(const Vocabulary& vocab, const Document& doc) {
  std::map<std::uint32_t, std::size_t> counts;
  for (const std::string& t : doc.tokens) {
    const std::uint32_t id = vocab.id(t);
    if (id != Vocabulary::kUnknownId && id != Vocabulary::kPadId) ++counts[id];
  }
  return counts;
}

}  // namespace

SparseVector count_vectorize(const Vocabulary& vocab, const Document& doc) {
  SparseVector v;
  v.dimension = vocab.size();
  for (const auto& [id, count] : term_counts(vocab, doc)) {
    v.indices.push_back(id);
    v.values.push_back(static_cast<double>(count));
  }
  return v;
}

SparseVector tfidf_vectorize(const Vocabulary& vocab, const Document& doc) {
  SparseVector v;
  v.dimension = vocab.size();
  for (const auto& [id, count] : term_counts(vocab, doc)) {
    const double w =
        static_cast<double>(count) * smoothed_idf(vocab.document_count(), vocab.document_frequency(id));
    if (w != 0.0) {
      v.indices.push_back(id);
      v.values.push_back(w);
    }
  }
  const double n = v.norm();
  if (n > 0.0) {
    for (double& x : v.values) x /= n;
  }
  return v;
}

}  // namespace dcitl::text
