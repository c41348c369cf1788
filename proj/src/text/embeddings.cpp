#include "dcitl/text/embeddings.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <stdexcept>

#include "dcitl/common/rng.hpp"

namespace dcitl::text {

EmbeddingTable::EmbeddingTable(std::size_t rows, std::size_t dim)
    : rows_(rows), dim_(dim), values_(rows * dim, 0.0) {}

namespace {

constexpr char kMagic[8] = {'D', 'C', 'I', 'T', 'L', 'E', 'M', 'B'};
constexpr std::uint32_t kVersion = 1;

static_assert(std::endian::native == std::endian::little);

double sigmoid(double x) {
  if (x > 30.0) return 1.0;
  if (x < -30.0) return 0.0;
  return 1.0 / (1.0 + std::exp(-x));
}

// Cumulative unigram^0.75 distribution for negative sampling.
std::vector<double> noise_distribution(const std::vector<std::size_t>& counts) {
  std::vector<double> cdf(counts.size(), 0.0);
  double total = 0.0;
  for (std::size_t i = 0; i < counts.size(); ++i) {
    total += std::pow(static_cast<double>(counts[i]), 0.75);
    cdf[i] = total;
  }
  for (double& c : cdf) c /= total;
  return cdf;
}

}  // namespace

void EmbeddingTable::save(const std::filesystem::path& path, std::uint64_t tag) const {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write embeddings '" + path.string() + "'");
  const std::uint64_t header[3] = {rows_, dim_, tag};
  out.write(kMagic, sizeof(kMagic));
  out.write(reinterpret_cast<const char*>(&kVersion), sizeof(kVersion));
  out.write(reinterpret_cast<const char*>(header), sizeof(header));
  out.write(reinterpret_cast<const char*>(values_.data()),
            static_cast<std::streamsize>(values_.size() * sizeof(double)));
  if (!out) throw std::runtime_error("failed writing embeddings '" + path.string() + "'");
}

EmbeddingTable EmbeddingTable::load(const std::filesystem::path& path, std::uint64_t* tag) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open embeddings '" + path.string() + "'");
  char magic[8];
  std::uint32_t version = 0;
  std::uint64_t header[3] = {};
  in.read(magic, sizeof(magic));
  in.read(reinterpret_cast<char*>(&version), sizeof(version));
  in.read(reinterpret_cast<char*>(header), sizeof(header));
  if (!in || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0 || version != kVersion) {
    throw std::runtime_error("'" + path.string() + "' is not a dcitl embedding file");
  }
  EmbeddingTable table(header[0], header[1]);
  in.read(reinterpret_cast<char*>(table.values_.data()),
          static_cast<std::streamsize>(table.values_.size() * sizeof(double)));
  if (!in) throw std::runtime_error("embedding file truncated");
  if (tag) *tag = header[2];
  return table;
}

void to_json(nlohmann::json& j, const SkipGramConfig& c) {
  j = {{"dim", c.dim},
       {"window", c.window},
       {"negatives", c.negatives},
       {"epochs", c.epochs},
       {"learning_rate", c.learning_rate}};
}

void from_json(const nlohmann::json& j, SkipGramConfig& c) {
  c.dim = j.value("dim", c.dim);
  c.window = j.value("window", c.window);
  c.negatives = j.value("negatives", c.negatives);
  c.epochs = j.value("epochs", c.epochs);
  c.learning_rate = j.value("learning_rate", c.learning_rate);
  if (c.dim == 0 || c.window == 0 || c.epochs == 0 || !(c.learning_rate > 0.0)) {
    throw std::invalid_argument("skip-gram dim, window, epochs and learning_rate must be positive");
  }
}

EmbeddingTable train_skipgram(const Vocabulary& vocab, std::span<const Document> documents,
                              const SkipGramConfig& config, std::uint64_t seed) {
  std::vector<std::vector<std::uint32_t>> streams;
  std::vector<std::size_t> counts(vocab.size(), 0);
  std::size_t total_tokens = 0;
  for (const Document& doc : documents) {
    std::vector<std::uint32_t> ids;
    for (const std::string& t : doc.tokens) {
      const std::uint32_t id = vocab.id(t);
      if (id == Vocabulary::kUnknownId || id == Vocabulary::kPadId) continue;
      ids.push_back(id);
      ++counts[id];
    }
    total_tokens += ids.size();
    if (ids.size() > 1) streams.push_back(std::move(ids));
  }
  if (streams.empty()) throw std::invalid_argument("skip-gram needs a non-empty corpus");

  const std::size_t dim = config.dim;
  Rng rng(seed);
  EmbeddingTable table(vocab.size(), dim);
  std::vector<double> context(vocab.size() * dim, 0.0);
  for (std::size_t id = Vocabulary::kUnknownId; id < vocab.size(); ++id) {
    for (double& v : table.row(id)) v = (rng.uniform() - 0.5) / static_cast<double>(dim);
  }
  const std::vector<double> noise = noise_distribution(counts);
  auto draw_negative = [&]() {
    const double u = rng.uniform();
    return static_cast<std::uint32_t>(std::upper_bound(noise.begin(), noise.end(), u) - noise.begin());
  };

  const double total_work = static_cast<double>(config.epochs * total_tokens) + 1.0;
  double processed = 0.0;
  std::vector<double> grad(dim);
  for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
    for (const auto& ids : streams) {
      for (std::size_t pos = 0; pos < ids.size(); ++pos, processed += 1.0) {
        const double lr = config.learning_rate * std::max(1e-4, 1.0 - processed / total_work);
        const std::size_t reduced = static_cast<std::size_t>(rng.below(config.window));
        const std::size_t span = config.window - reduced;
        const std::size_t lo = pos >= span ? pos - span : 0;
        const std::size_t hi = std::min(ids.size() - 1, pos + span);
        for (std::size_t c = lo; c <= hi; ++c) {
          if (c == pos) continue;
          // The context word's input vector predicts the centre word.
          std::span<double> input = table.row(ids[c]);
          std::fill(grad.begin(), grad.end(), 0.0);
          for (std::size_t s = 0; s <= config.negatives; ++s) {
            std::uint32_t target = ids[pos];
            double label = 1.0;
            if (s > 0) {
              target = draw_negative();
              if (target == ids[pos] || target >= vocab.size()) continue;
              label = 0.0;
            }
            double* out = context.data() + static_cast<std::size_t>(target) * dim;
            double dot = 0.0;
            for (std::size_t k = 0; k < dim; ++k) dot += input[k] * out[k];
            const double g = (label - sigmoid(dot)) * lr;
            for (std::size_t k = 0; k < dim; ++k) {
              grad[k] += g * out[k];
              out[k] += g * input[k];
            }
          }
          for (std::size_t k = 0; k < dim; ++k) input[k] += grad[k];
        }
      }
    }
  }
  std::fill(table.row(Vocabulary::kPadId).begin(), table.row(Vocabulary::kPadId).end(), 0.0);
  return table;
}

double cosine_similarity(std::span<const double> a, std::span<const double> b) {
  double dot = 0.0, na = 0.0, nb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    dot += a[i] * b[i];
    na += a[i] * a[i];
    nb += b[i] * b[i];
  }
  if (na == 0.0 || nb == 0.0) return 0.0;
  return dot / std::sqrt(na * nb);
}

void encode_ids(const EmbeddingTable& table, std::span<const std::uint32_t> ids,
                std::size_t max_len, std::span<double> out) {
  const std::size_t dim = table.dim();
  std::fill(out.begin(), out.end(), 0.0);
  const std::size_t n = std::min(max_len, ids.size());
  for (std::size_t t = 0; t < n; ++t) {
    const auto src = table.row(ids[t]);
    std::copy(src.begin(), src.end(), out.begin() + static_cast<std::ptrdiff_t>(t * dim));
  }
}

nn::Tensor encode_sequence(const Vocabulary& vocab, const EmbeddingTable& table,
                           const Document& doc, std::size_t max_len) {
  if (table.rows() != vocab.size()) {
    throw std::invalid_argument("embedding table rows do not match the vocabulary");
  }
  nn::Tensor out({max_len, table.dim()});
  const auto ids = vocab.encode(doc);
  encode_ids(table, ids, max_len, out.data());
  return out;
}

}  // namespace dcitl::text
