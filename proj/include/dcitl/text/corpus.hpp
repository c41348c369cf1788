#pragma once

#include <array>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace dcitl::text {

// Binary sentiment label set. Class indices are fixed across the toolkit.
inline constexpr int kNegative = 0;
inline constexpr int kPositive = 1;
inline constexpr int kNumClasses = 2;

std::string_view label_name(int label);
// "positive" / "negative"; anything else throws std::invalid_argument.
int parse_label(std::string_view name);

struct Document {
  std::vector<std::string> tokens;
  std::optional<int> label;
  std::string domain;
};

class Corpus {
 public:
  Corpus() = default;
  Corpus(std::string domain, std::vector<Document> documents);

  const std::string& domain() const noexcept { return domain_; }
  const std::vector<Document>& documents() const noexcept { return documents_; }
  std::size_t size() const noexcept { return documents_.size(); }
  const Document& operator[](std::size_t i) const { return documents_[i]; }

  // Histogram of labels; unlabeled documents are not counted.
  const std::array<std::size_t, kNumClasses>& class_counts() const noexcept { return counts_; }
  std::vector<int> labels() const;

  Corpus subset(std::span<const std::size_t> indices) const;
  // Copy with every label removed, for unsupervised use of target data.
  Corpus without_labels() const;

 private:
  std::string domain_;
  std::vector<Document> documents_;
  std::array<std::size_t, kNumClasses> counts_{};
};

enum class CorpusFormat { tsv, blitzer_processed };

CorpusFormat corpus_format_from_string(std::string_view s);

// Lowercase, split on runs of non-alphanumeric characters, drop empties.
std::vector<std::string> tokenize(std::string_view text);

// tsv: `label<TAB>text` per line. blitzer-processed: space-separated
// `token:count` pairs ending with `#label#:positive|negative`. Blank lines
// are skipped; malformed lines raise ParseError with the line number.
Corpus load_corpus(const std::filesystem::path& path, CorpusFormat format,
                   std::string domain = {});

// Finds a domain under a data directory: `<dir>/<domain>.tsv`, or
// `<dir>/<domain>/{positive,negative}.review` in the processed format.
Corpus load_domain(const std::filesystem::path& data_dir, const std::string& domain);

// Writes `label<TAB>tokens joined by spaces`; labels are required.
void save_tsv(const Corpus& corpus, const std::filesystem::path& path);

}  // namespace dcitl::text
