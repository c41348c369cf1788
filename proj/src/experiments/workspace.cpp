#include "dcitl/experiments/workspace.hpp"

#include <cstdio>

#include "dcitl/common/error.hpp"
#include "dcitl/common/rng.hpp"

namespace dcitl::experiments {

std::uint64_t split_seed(std::uint64_t seed, const std::string& domain) {
  return mix_seed(mix_seed(seed, "split"), fnv1a(domain));
}

Workspace::Workspace(RunConfig config, std::filesystem::path out_dir, LogFn log)
    : config_(std::move(config)), out_dir_(std::move(out_dir)), log_(std::move(log)) {}

const text::Corpus& Workspace::corpus(const std::string& domain) {
  auto it = corpora_.find(domain);
  if (it != corpora_.end()) return it->second;
  try {
    text::Corpus c = text::load_domain(config_.data_dir, domain);
    log("loaded " + domain + ": " + std::to_string(c.class_counts()[text::kPositive]) + " positive, " +
        std::to_string(c.class_counts()[text::kNegative]) + " negative");
    return corpora_.emplace(domain, std::move(c)).first->second;
  } catch (const StageError&) {
    throw;
  } catch (const std::exception& e) {
    throw StageError("load", e.what());
  }
}

namespace {

std::vector<text::SparseVector> vectorize(const text::Vocabulary& vocab, const text::Corpus& c) {
  std::vector<text::SparseVector> out;
  out.reserve(c.size());
  for (const auto& d : c.documents()) out.push_back(text::tfidf_vectorize(vocab, d));
  return out;
}

}  // namespace

std::shared_ptr<const PairData> Workspace::prepare(const std::string& source, const std::string& target,
                                                   RatioSpec ratio, std::uint64_t seed) {
  const nlohmann::json id = {{"source", source},
                             {"target", target},
                             {"ratio", ratio.str()},
                             {"seed", seed},
                             {"test_fraction", config_.test_fraction},
                             {"sides", config_.imbalance_sides == ImbalanceSides::source ? "source" : "both"},
                             {"min_df", config_.text.min_df},
                             {"skipgram", config_.text.skipgram}};
  const std::string key = id.dump();
  if (auto it = pairs_.find(key); it != pairs_.end()) return it->second;

  const text::Corpus& src = corpus(source);
  const text::Corpus& tgt = corpus(target);
  auto data = std::make_shared<PairData>();
  data->source = source;
  data->target = target;
  data->ratio = ratio;
  data->seed = seed;
  data->key = fnv1a(key);
  const RatioSpec target_ratio = config_.imbalance_sides == ImbalanceSides::both ? ratio : RatioSpec{};
  data->source_split = make_imbalanced_split(src, ratio, config_.test_fraction, split_seed(seed, source));
  data->target_split = make_imbalanced_split(tgt, target_ratio, config_.test_fraction, split_seed(seed, target));
  data->source_train = src.subset(data->source_split.train);
  data->source_test = src.subset(data->source_split.test);
  data->target_train = tgt.subset(data->target_split.train).without_labels();
  data->target_test = tgt.subset(data->target_split.test);
  data->source_train_y = data->source_train.labels();
  data->source_test_y = data->source_test.labels();
  data->target_test_y = data->target_test.labels();
  data->vocab = text::Vocabulary::build(data->source_train.documents(), config_.text.min_df);
  data->source_train_tfidf = vectorize(data->vocab, data->source_train);
  data->source_test_tfidf = vectorize(data->vocab, data->source_test);
  data->target_train_tfidf = vectorize(data->vocab, data->target_train);
  data->target_test_tfidf = vectorize(data->vocab, data->target_test);
  log("prepared " + source + "->" + target + " " + ratio.str() + " seed " + std::to_string(seed) + ": |V|=" +
      std::to_string(data->vocab.size()) + ", source train " + std::to_string(data->source_train.size()) +
      ", target train " + std::to_string(data->target_train.size()));
  pairs_.emplace(key, data);
  return data;
}

std::filesystem::path Workspace::embedding_path(const PairData& data) const {
  char name[40];
  std::snprintf(name, sizeof name, "embeddings-%016llx.bin", static_cast<unsigned long long>(data.key));
  return out_dir_ / "cache" / name;
}

std::shared_ptr<const text::EmbeddingTable> Workspace::embeddings(const PairData& data) {
  if (auto it = tables_.find(data.key); it != tables_.end()) return it->second;
  const auto path = embedding_path(data);
  auto vocab_path = path;
  vocab_path.replace_extension(".vocab");
  std::shared_ptr<const text::EmbeddingTable> table;
  if (std::filesystem::exists(path) && std::filesystem::exists(vocab_path)) {
    std::uint64_t tag = 0;
    auto loaded = std::make_shared<text::EmbeddingTable>(text::EmbeddingTable::load(path, &tag));
    if (tag == data.key && loaded->rows() == data.vocab.size() && text::Vocabulary::load(vocab_path) == data.vocab) {
      log("reusing embeddings " + path.filename().string());
      table = std::move(loaded);
    }
  }
  if (!table) {
    std::vector<text::Document> text_docs = data.source_train.documents();
    const auto& t = data.target_train.documents();
    text_docs.insert(text_docs.end(), t.begin(), t.end());
    log("training skip-gram on " + std::to_string(text_docs.size()) + " documents");
    try {
      table = std::make_shared<text::EmbeddingTable>(
          text::train_skipgram(data.vocab, text_docs, config_.text.skipgram, mix_seed(data.seed, "skipgram")));
    } catch (const std::exception& e) {
      throw StageError("embed", e.what());
    }
    std::filesystem::create_directories(path.parent_path());
    table->save(path, data.key);
    data.vocab.save(vocab_path);
  }
  tables_.emplace(data.key, table);
  return table;
}

}  // namespace dcitl::experiments
