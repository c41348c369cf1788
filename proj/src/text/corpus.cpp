#include "dcitl/text/corpus.hpp"

#include <cctype>
#include <charconv>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "dcitl/common/error.hpp"

namespace dcitl::text {

std::string_view label_name(int label) {
  switch (label) {
    case kNegative: return "negative";
    case kPositive: return "positive";
    default: throw std::invalid_argument("label index " + std::to_string(label) + " out of range");
  }
}

int parse_label(std::string_view name) {
  if (name == "positive") return kPositive;
  if (name == "negative") return kNegative;
  throw std::invalid_argument("unknown label '" + std::string(name) + "'");
}

Corpus::Corpus(std::string domain, std::vector<Document> documents)
    : domain_(std::move(domain)), documents_(std::move(documents)) {
  for (const Document& d : documents_) {
    if (d.label) {
      if (*d.label < 0 || *d.label >= kNumClasses) {
        throw std::invalid_argument("document label out of range");
      }
      ++counts_[static_cast<std::size_t>(*d.label)];
    }
  }
}

std::vector<int> Corpus::labels() const {
  std::vector<int> out;
  out.reserve(documents_.size());
  for (const Document& d : documents_) {
    if (!d.label) throw std::logic_error("corpus '" + domain_ + "' has unlabeled documents");
    out.push_back(*d.label);
  }
  return out;
}

Corpus Corpus::subset(std::span<const std::size_t> indices) const {
  std::vector<Document> docs;
  docs.reserve(indices.size());
  for (std::size_t i : indices) docs.push_back(documents_.at(i));
  return Corpus(domain_, std::move(docs));
}

Corpus Corpus::without_labels() const {
  std::vector<Document> docs = documents_;
  for (Document& d : docs) d.label.reset();
  return Corpus(domain_, std::move(docs));
}

CorpusFormat corpus_format_from_string(std::string_view s) {
  if (s == "tsv") return CorpusFormat::tsv;
  if (s == "blitzer" || s == "blitzer-processed") return CorpusFormat::blitzer_processed;
  throw std::invalid_argument("unknown corpus format '" + std::string(s) + "'");
}

std::vector<std::string> tokenize(std::string_view text) {
  std::vector<std::string> tokens;
  std::string current;
  for (char c : text) {
    const auto u = static_cast<unsigned char>(c);
    if (u < 128 && std::isalnum(u)) {
      current.push_back(static_cast<char>(std::tolower(u)));
    } else if (!current.empty()) {
      tokens.push_back(std::move(current));
      current.clear();
    }
  }
  if (!current.empty()) tokens.push_back(std::move(current));
  return tokens;
}

namespace {

bool is_blank(std::string_view line) {
  for (char c : line) {
    if (!std::isspace(static_cast<unsigned char>(c))) return false;
  }
  return true;
}

Document parse_tsv_line(std::string_view line, std::size_t line_no, const std::string& domain) {
  const auto tab = line.find('\t');
  if (tab == std::string_view::npos) throw ParseError("expected `label<TAB>text`", line_no);
  Document doc;
  try {
    doc.label = parse_label(line.substr(0, tab));
  } catch (const std::invalid_argument& e) {
    throw ParseError(e.what(), line_no);
  }
  doc.tokens = tokenize(line.substr(tab + 1));
  if (doc.tokens.empty()) throw ParseError("document has no tokens", line_no);
  doc.domain = domain;
  return doc;
}

Document parse_blitzer_line(std::string_view line, std::size_t line_no, const std::string& domain) {
  Document doc;
  doc.domain = domain;
  std::istringstream in{std::string(line)};
  std::string item;
  bool saw_label = false;
  while (in >> item) {
    if (saw_label) throw ParseError("content after #label# field", line_no);
    const auto colon = item.rfind(':');
    if (colon == std::string::npos || colon == 0 || colon + 1 == item.size()) {
      throw ParseError("expected `token:count`, got '" + item + "'", line_no);
    }
    const std::string_view key(item.data(), colon);
    const std::string_view value(item.data() + colon + 1, item.size() - colon - 1);
    if (key == "#label#") {
      try {
        doc.label = parse_label(value);
      } catch (const std::invalid_argument& e) {
        throw ParseError(e.what(), line_no);
      }
      saw_label = true;
      continue;
    }
    std::size_t count = 0;
    const auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), count);
    if (ec != std::errc() || ptr != value.data() + value.size() || count == 0) {
      throw ParseError("bad count in '" + item + "'", line_no);
    }
    std::string token(key);
    for (char& c : token) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    doc.tokens.insert(doc.tokens.end(), count, token);
  }
  if (!saw_label) throw ParseError("missing #label# field", line_no);
  if (doc.tokens.empty()) throw ParseError("document has no tokens", line_no);
  return doc;
}

void append_file(const std::filesystem::path& path, CorpusFormat format, const std::string& domain,
                 std::vector<Document>& docs) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open corpus file '" + path.string() + "'");
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (is_blank(line)) continue;
    try {
      docs.push_back(format == CorpusFormat::tsv ? parse_tsv_line(line, line_no, domain)
                                                 : parse_blitzer_line(line, line_no, domain));
    } catch (const ParseError& e) {
      throw ParseError(path.filename().string() + ": " + e.what(), e.line());
    }
  }
}

}  // namespace

Corpus load_corpus(const std::filesystem::path& path, CorpusFormat format, std::string domain) {
  if (domain.empty()) domain = path.stem().string();
  std::vector<Document> docs;
  append_file(path, format, domain, docs);
  return Corpus(std::move(domain), std::move(docs));
}

Corpus load_domain(const std::filesystem::path& data_dir, const std::string& domain) {
  const auto tsv = data_dir / (domain + ".tsv");
  if (std::filesystem::exists(tsv)) return load_corpus(tsv, CorpusFormat::tsv, domain);
  const auto dir = data_dir / domain;
  const auto pos = dir / "positive.review";
  const auto neg = dir / "negative.review";
  if (std::filesystem::exists(pos) && std::filesystem::exists(neg)) {
    std::vector<Document> docs;
    append_file(pos, CorpusFormat::blitzer_processed, domain, docs);
    append_file(neg, CorpusFormat::blitzer_processed, domain, docs);
    return Corpus(domain, std::move(docs));
  }
  throw std::runtime_error("domain '" + domain + "' not found under '" + data_dir.string() +
                           "' (looked for " + tsv.filename().string() + " and " + domain +
                           "/{positive,negative}.review)");
}

void save_tsv(const Corpus& corpus, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write '" + path.string() + "'");
  for (const Document& d : corpus.documents()) {
    if (!d.label) throw std::logic_error("save_tsv requires labeled documents");
    out << label_name(*d.label) << '\t';
    for (std::size_t i = 0; i < d.tokens.size(); ++i) out << (i ? " " : "") << d.tokens[i];
    out << '\n';
  }
  if (!out) throw std::runtime_error("failed writing '" + path.string() + "'");
}

}  // namespace dcitl::text
