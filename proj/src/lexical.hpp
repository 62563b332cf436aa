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

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "corpus.hpp"
#include "error.hpp"

namespace latte {

struct Bm25Params {
  double k1 = 0.9;
  double b = 0.4;
};

struct Posting {
  uint32_t ord;
  uint32_t tf;
};

struct PostingList {
  std::vector<Posting> postings;  // strictly ascending by ord
  // Block-max metadata over groups of kBlockSize postings.
  std::vector<uint32_t> block_last;  // last ord of each block
  std::vector<double> block_max;     // max per-posting score in each block
  double max_score = 0.0;            // term-level upper bound
  double idf = 0.0;

  uint32_t df() const { return uint32_t(postings.size()); }
};

// BM25 inverted index with block-max metadata. Tokenization is lowercase,
// split on non-alphanumeric, Porter-stemmed, no stopword removal.
class LexicalIndex {
 public:
  static constexpr uint32_t kBlockSize = 64;

  uint32_t doc_count() const { return uint32_t(doc_ids_.size()); }
  double avg_doc_len() const { return avg_doc_len_; }
  uint32_t doc_length(uint32_t ord) const { return doc_lengths_[ord]; }
  const std::string& doc_id(uint32_t ord) const { return doc_ids_[ord]; }
  std::optional<uint32_t> find_doc(std::string_view doc_id) const;
  uint32_t id_rank(uint32_t ord) const { return id_rank_[ord]; }
  const Bm25Params& params() const { return params_; }

  const PostingList* postings(const std::string& term) const;
  const std::map<std::string, PostingList>& terms() const { return terms_; }

  // idf = ln((N - df + 0.5)/(df + 0.5) + 1); non-negative by construction.
  double idf_for_df(uint32_t df) const;

  // Score of one posting: idf * tf*(k1+1) / (tf + k1*(1 - b + b*len/avg)).
  double posting_score(const PostingList& pl, uint32_t tf, uint32_t len) const;

 private:
  friend LexicalIndex build_lexical_index(const std::vector<CorpusDoc>&, const Bm25Params&);
  friend LexicalIndex load_lexical_index(const std::string&);

  void finalize();  // avg length, idf, block metadata, id ranks

  Bm25Params params_;
  std::vector<std::string> doc_ids_;
  std::vector<uint32_t> doc_lengths_;
  std::map<std::string, PostingList> terms_;
  double avg_doc_len_ = 0.0;
  std::unordered_map<std::string, uint32_t> id_to_ord_;
  std::vector<uint32_t> id_rank_;
};

LexicalIndex build_lexical_index(const std::vector<CorpusDoc>& corpus,
                                 const Bm25Params& params = {});

void save_lexical_index(const LexicalIndex& index, const std::string& path);
LexicalIndex load_lexical_index(const std::string& path);

struct OrdScored {
  uint32_t ord;
  double score;
};

// Query terms are taken as already stemmed (see lexical_query_terms).
double bm25_score(std::span<const std::string> terms, uint32_t ord, const LexicalIndex& index);

// Exact top-n by BM25 (ties -> ascending ordinal) using BlockMaxWAND
// dynamic pruning. Only documents with a positive score are returned.
std::vector<OrdScored> bm25_search_wand(std::span<const std::string> terms, uint32_t n,
                                        const LexicalIndex& index);

// Exhaustive counterpart; the correctness oracle for the WAND path.
std::vector<OrdScored> bm25_search_bruteforce(std::span<const std::string> terms, uint32_t n,
                                              const LexicalIndex& index);

// tokenize + Porter stem; what every query-side caller should feed BM25.
std::vector<std::string> lexical_query_terms(std::string_view text);

// Per-document BM25 nearest neighbors (self excluded), stored as ascending
// ordinals. Built by querying the index with each document's top-16 terms
// by within-document tf*idf.
struct ProximityGraph {
  uint32_t k = 0;
  std::vector<std::vector<uint32_t>> neighbors;
};

ProximityGraph build_proximity_graph(const LexicalIndex& index,
                                     const std::vector<CorpusDoc>& corpus, uint32_t k);

void save_graph(const ProximityGraph& graph, const std::string& path);
ProximityGraph load_graph(const std::string& path);

}  // namespace latte
