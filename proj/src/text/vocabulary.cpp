#include "dcitl/text/vocabulary.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>
#include <unordered_set>

#include "dcitl/common/error.hpp"

namespace dcitl::text {

Vocabulary::Vocabulary() {
  add(std::string(kPadToken), 0);
  add(std::string(kUnknownToken), 0);
}

void Vocabulary::add(std::string token, std::size_t df) {
  index_.emplace(token, static_cast<std::uint32_t>(tokens_.size()));
  tokens_.push_back(std::move(token));
  df_.push_back(df);
}

Vocabulary Vocabulary::build(std::span<const Document> documents, std::size_t min_df) {
  std::unordered_map<std::string, std::size_t> df;
  for (const Document& doc : documents) {
    std::unordered_set<std::string_view> seen;
    for (const std::string& t : doc.tokens) {
      if (seen.insert(t).second) ++df[t];
    }
  }
  std::vector<std::pair<std::string, std::size_t>> kept;
  for (auto& [token, count] : df) {
    if (count >= std::max<std::size_t>(min_df, 1) && token != kPadToken && token != kUnknownToken) {
      kept.emplace_back(token, count);
    }
  }
  std::sort(kept.begin(), kept.end(), [](const auto& a, const auto& b) {
    return a.second != b.second ? a.second > b.second : a.first < b.first;
  });
  Vocabulary vocab;
  vocab.n_docs_ = documents.size();
  for (auto& [token, count] : kept) vocab.add(std::move(token), count);
  return vocab;
}

std::uint32_t Vocabulary::id(const std::string& token) const {
  const auto it = index_.find(token);
  return it == index_.end() ? kUnknownId : it->second;
}

std::vector<std::uint32_t> Vocabulary::encode(const Document& doc) const {
  std::vector<std::uint32_t> ids;
  ids.reserve(doc.tokens.size());
  for (const std::string& t : doc.tokens) ids.push_back(id(t));
  return ids;
}

void Vocabulary::save(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write vocabulary '" + path.string() + "'");
  out << "#dcitl-vocab v1 docs=" << n_docs_ << '\n';
  for (std::size_t i = 0; i < tokens_.size(); ++i) {
    out << i << '\t' << tokens_[i] << '\t' << df_[i] << '\n';
  }
}

Vocabulary Vocabulary::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open vocabulary '" + path.string() + "'");
  std::string header;
  std::getline(in, header);
  const std::string prefix = "#dcitl-vocab v1 docs=";
  if (header.rfind(prefix, 0) != 0) throw ParseError("not a dcitl vocabulary file", 1);
  Vocabulary vocab;
  vocab.tokens_.clear();
  vocab.df_.clear();
  vocab.index_.clear();
  vocab.n_docs_ = std::stoull(header.substr(prefix.size()));
  std::string line;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    std::istringstream fields(line);
    std::size_t id = 0, df = 0;
    std::string token;
    if (!(fields >> id) || fields.get() != '\t' || !std::getline(fields, token, '\t') ||
        !(fields >> df) || id != vocab.tokens_.size()) {
      throw ParseError("malformed vocabulary entry", line_no);
    }
    vocab.add(std::move(token), df);
  }
  if (vocab.size() < 2 || vocab.token(kPadId) != kPadToken || vocab.token(kUnknownId) != kUnknownToken) {
    throw ParseError("vocabulary is missing the reserved ids", line_no);
  }
  return vocab;
}

}  // namespace dcitl::text
