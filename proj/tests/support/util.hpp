/*
 * Copyright 2026 The Latte Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#pragma once

#include <unistd.h>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <string>
#include <unordered_map>
#include <vector>

#include "corpus.hpp"
#include "embedding.hpp"
#include "plaid.hpp"
#include "rng.hpp"
#include "synthetic.hpp"
#include "tokenize.hpp"

namespace latte::test {

// Random lowercase words, all distinct, 3-8 letters.
inline std::vector<std::string> make_vocab(size_t size, uint64_t seed) {
  Rng rng(seed);
  std::vector<std::string> vocab;
  vocab.reserve(size);
  std::unordered_map<std::string, bool> seen;
  while (vocab.size() < size) {
    size_t len = 3 + rng.next_below(6);
    std::string w;
    for (size_t i = 0; i < len; ++i) w.push_back(char('a' + rng.next_below(26)));
    if (!seen.emplace(w, true).second) continue;
    vocab.push_back(std::move(w));
  }
  return vocab;
}

struct CorpusOptions {
  size_t ndocs = 200;
  size_t vocab_size = 300;
  size_t min_tokens = 6;
  size_t max_tokens = 18;
  uint64_t seed = 1;
};

// Zipf-ish token draws so documents share vocabulary the way text does.
inline std::vector<CorpusDoc> make_corpus(const CorpusOptions& opt) {
  Rng rng(opt.seed);
  std::vector<std::string> vocab = make_vocab(opt.vocab_size, opt.seed ^ 0x5eedULL);
  std::vector<CorpusDoc> docs;
  docs.reserve(opt.ndocs);
  for (size_t d = 0; d < opt.ndocs; ++d) {
    size_t len = opt.min_tokens + rng.next_below(opt.max_tokens - opt.min_tokens + 1);
    std::string text;
    for (size_t t = 0; t < len; ++t) {
      // doubled draw skews toward the front of the vocab
      size_t a = rng.next_below(vocab.size());
      size_t b = rng.next_below(vocab.size());
      if (!text.empty()) text += ' ';
      text += vocab[std::min(a, b)];
    }
    docs.push_back({"d" + std::to_string(d), text});
  }
  return docs;
}

inline std::vector<QuerySpec> make_queries(size_t count, const std::vector<CorpusDoc>& docs,
                                           uint64_t seed, size_t terms = 4) {
  // Sample query terms from document texts so lexical stages have matches.
  Rng rng(seed);
  std::vector<QuerySpec> queries;
  queries.reserve(count);
  for (size_t i = 0; i < count; ++i) {
    std::string text;
    for (size_t t = 0; t < terms; ++t) {
      const CorpusDoc& doc = docs[rng.next_below(docs.size())];
      std::vector<std::string> toks = tokenize(doc.text);
      if (toks.empty()) continue;
      if (!text.empty()) text += ' ';
      text += toks[rng.next_below(toks.size())];
    }
    queries.push_back({"q" + std::to_string(i), text});
  }
  return queries;
}

inline std::vector<TokenMatrix> encode_corpus(const std::vector<CorpusDoc>& docs, uint32_t dim,
                                              uint64_t seed,
                                              std::vector<std::string>* vocab_out = nullptr) {
  SyntheticEncoder enc(dim, seed);
  std::vector<TokenMatrix> out;
  out.reserve(docs.size());
  for (const auto& d : docs) out.push_back(enc.encode_doc(d.doc_id, d.text));
  if (vocab_out) *vocab_out = enc.vocab();
  return out;
}

inline QueryEmbeddings embed_query(const QuerySpec& q, uint32_t dim, uint64_t seed) {
  SyntheticEncoder enc(dim, seed);
  QueryEmbeddings out;
  out.query_id = q.query_id;
  out.text = q.text;
  out.dim = dim;
  out.data = enc.encode_query_vectors(q.text);
  return out;
}

inline IndexConfig small_config(uint32_t dim, uint64_t seed, uint32_t nclusters = 64,
                                uint32_t nbits = 4) {
  IndexConfig cfg;
  cfg.dim = dim;
  cfg.seed = seed;
  cfg.nclusters = nclusters;
  cfg.nbits = nbits;
  cfg.kmeans_iters = 8;
  cfg.sample_cap = 4096;
  return cfg;
}

// Unique temp path under the build tree; removed on destruction.
class TempDir {
 public:
  TempDir() {
    static int counter = 0;
    dir_ = std::filesystem::temp_directory_path() /
           ("latte_test_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
    std::filesystem::create_directories(dir_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(dir_, ec);
  }
  std::string path(const std::string& name) const { return (dir_ / name).string(); }
  std::string root() const { return dir_.string(); }

 private:
  std::filesystem::path dir_;
};

inline bool same_ranking(const RankedList& a, const RankedList& b, double tol = 1e-9) {
  if (a.entries.size() != b.entries.size()) return false;
  for (size_t i = 0; i < a.entries.size(); ++i) {
    if (a.entries[i].doc_id != b.entries[i].doc_id) return false;
    if (std::abs(a.entries[i].score - b.entries[i].score) > tol) return false;
  }
  return true;
}

}  // namespace latte::test
