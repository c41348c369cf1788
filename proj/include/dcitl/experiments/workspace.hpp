#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include "dcitl/experiments/config.hpp"
#include "dcitl/text/corpus.hpp"
#include "dcitl/text/embeddings.hpp"
#include "dcitl/text/tfidf.hpp"
#include "dcitl/text/vocabulary.hpp"

namespace dcitl::experiments {

// Everything one (source, target, ratio, seed) combination needs before any
// model is trained. The target training corpus carries no labels.
struct PairData {
  std::string source, target;
  RatioSpec ratio;
  std::uint64_t seed = 0;
  SplitPlan source_split, target_split;
  text::Corpus source_train, source_test, target_train, target_test;
  std::vector<int> source_train_y, source_test_y, target_test_y;
  text::Vocabulary vocab;  // source training documents only
  std::vector<text::SparseVector> source_train_tfidf, source_test_tfidf, target_train_tfidf, target_test_tfidf;
  std::uint64_t key = 0;  // identifies splits, vocabulary and embedding settings
};

using LogFn = std::function<void(const std::string&)>;

// Loads corpora once, builds splits and text features deterministically, and
// caches skip-gram tables on disk under <out_dir>/cache.
class Workspace {
 public:
  Workspace(RunConfig config, std::filesystem::path out_dir, LogFn log = {});

  const RunConfig& config() const noexcept { return config_; }
  const std::filesystem::path& out_dir() const noexcept { return out_dir_; }

  // Throws StageError("load") when the domain cannot be read.
  const text::Corpus& corpus(const std::string& domain);

  std::shared_ptr<const PairData> prepare(const std::string& source, const std::string& target, RatioSpec ratio,
                                          std::uint64_t seed);

  // Skip-gram table over the source and target training text.
  std::shared_ptr<const text::EmbeddingTable> embeddings(const PairData& data);
  std::filesystem::path embedding_path(const PairData& data) const;

  void log(const std::string& message) const {
    if (log_) log_(message);
  }

 private:
  RunConfig config_;
  std::filesystem::path out_dir_;
  LogFn log_;
  std::map<std::string, text::Corpus> corpora_;
  std::map<std::string, std::shared_ptr<const PairData>> pairs_;
  std::map<std::uint64_t, std::shared_ptr<const text::EmbeddingTable>> tables_;
};

// Split seed for one domain under a run seed.
std::uint64_t split_seed(std::uint64_t seed, const std::string& domain);

}  // namespace dcitl::experiments
