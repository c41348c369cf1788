#pragma once

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "dcitl/experiments/config.hpp"
#include "dcitl/experiments/synthetic.hpp"
#include "dcitl/text/corpus.hpp"

namespace dcitl::testing {

// Writes <dir>/<domain>.tsv for each domain from the synthetic review generator.
inline void write_synthetic_domains(const std::filesystem::path& dir, const std::vector<std::string>& domains,
                                    std::uint64_t seed = 7) {
  std::filesystem::create_directories(dir);
  experiments::SyntheticTextConfig cfg;
  for (const auto& d : domains) text::save_tsv(experiments::make_synthetic_reviews(cfg, d, seed), dir / (d + ".tsv"));
}

// Small models and few epochs so a full grid cell runs in well under a second.
inline experiments::RunConfig small_run_config(const std::filesystem::path& data_dir) {
  experiments::RunConfig c;
  c.data_dir = data_dir;
  c.pairs = {{"books", "dvd"}};
  c.ratios = {experiments::RatioSpec{5, 10}};
  c.seeds = {0};
  c.text.skipgram.dim = 8;
  c.text.skipgram.epochs = 1;
  c.extractor.max_len = 40;
  c.extractor.widths = {3};
  c.extractor.filters = 4;
  c.lr_dis_extractor.hidden = {8};
  c.adaptation.pretrain_epochs = 2;
  c.adaptation.adapt_epochs = 1;
  c.baselines.rf.trees = 5;
  return c;
}

inline std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace dcitl::testing
