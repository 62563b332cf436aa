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

#include "rerank.hpp"

#include <algorithm>
#include <iostream>

namespace latte {

void RerankParams::validate() const {
  if (n < 1) throw Error(ErrorCode::Config, "rerank pool size n must be >= 1");
  if (k < 1) throw Error(ErrorCode::Config, "k must be >= 1");
}

void LadrParams::validate() const {
  if (n0 < 1) throw Error(ErrorCode::Config, "seed pool size n0 must be >= 1");
  if (k_neighbors < 1) throw Error(ErrorCode::Config, "k_neighbors must be >= 1");
  if (c < 1) throw Error(ErrorCode::Config, "expansion window c must be >= 1");
  if (k < 1) throw Error(ErrorCode::Config, "k must be >= 1");
  if (max_iters < 1) throw Error(ErrorCode::Config, "max_iters must be >= 1");
}

namespace {

// Lexical ordinal -> embedding ordinal, by doc_id. Divergent id spaces are
// corrupted comparisons, not data to skip.
size_t map_to_embedding(uint32_t lex_ord, const LexicalIndex& lexical,
                        const CompressedIndex& index) {
  const std::string& id = lexical.doc_id(lex_ord);
  auto ord = index.find_doc(id);
  if (!ord)
    throw Error(ErrorCode::Mismatch,
                "document present in the lexical index but missing from the embedding index: " +
                    id);
  return *ord;
}

struct LexScored {
  uint32_t lex_ord;
  double score;
};

RankedList top_k(const QueryEmbeddings& q, const LexicalIndex& lexical,
                 std::vector<LexScored> scored, uint32_t k) {
  std::sort(scored.begin(), scored.end(), [&](const LexScored& a, const LexScored& b) {
    if (a.score != b.score) return a.score > b.score;
    return lexical.id_rank(a.lex_ord) < lexical.id_rank(b.lex_ord);
  });
  if (scored.size() > k) scored.resize(k);
  RankedList out;
  out.query_id = q.query_id;
  out.entries.reserve(scored.size());
  for (const auto& s : scored) out.entries.push_back({lexical.doc_id(s.lex_ord), s.score});
  return out;
}

}  // namespace

RankedList rerank(const QueryEmbeddings& q, const RerankParams& params,
                  const LexicalIndex& lexical, const CompressedIndex& index) {
  params.validate();
  q.validate();
  std::vector<std::string> terms = lexical_query_terms(q.text);
  std::vector<OrdScored> pool = bm25_search_wand(terms, params.n, lexical);
  std::vector<LexScored> scored;
  scored.reserve(pool.size());
  for (const OrdScored& hit : pool)
    scored.push_back({hit.ord, exact_score(q, map_to_embedding(hit.ord, lexical, index), index)});
  return top_k(q, lexical, std::move(scored), params.k);
}

RankedList ladr_search(const QueryEmbeddings& q, const LadrParams& params,
                       const LexicalIndex& lexical, const ProximityGraph& graph,
                       const CompressedIndex& index) {
  params.validate();
  q.validate();
  if (graph.k < params.k_neighbors)
    throw Error(ErrorCode::Config, "proximity graph fan-out is smaller than k_neighbors");
  if (graph.neighbors.size() != lexical.doc_count())
    throw Error(ErrorCode::Mismatch, "proximity graph does not match the lexical index");

  std::vector<std::string> terms = lexical_query_terms(q.text);
  std::vector<OrdScored> pool = bm25_search_wand(terms, params.n0, lexical);
  if (pool.empty()) {
    std::cerr << "ladr: empty seed pool for query " << q.query_id << "\n";
    return {q.query_id, {}};
  }

  std::vector<char> seen(lexical.doc_count(), 0);
  std::vector<LexScored> scored;
  scored.reserve(pool.size());
  for (const OrdScored& hit : pool) {
    seen[hit.ord] = 1;
    scored.push_back({hit.ord, exact_score(q, map_to_embedding(hit.ord, lexical, index), index)});
  }

  auto by_score = [&](const LexScored& a, const LexScored& b) {
    if (a.score != b.score) return a.score > b.score;
    return lexical.id_rank(a.lex_ord) < lexical.id_rank(b.lex_ord);
  };

  for (uint32_t round = 0;; ++round) {
    size_t c = std::min<size_t>(params.c, scored.size());
    std::partial_sort(scored.begin(), scored.begin() + c, scored.end(), by_score);

    std::vector<uint32_t> frontier;
    for (size_t i = 0; i < c; ++i) {
      const auto& neigh = graph.neighbors[scored[i].lex_ord];
      size_t take = std::min<size_t>(params.k_neighbors, neigh.size());
      for (size_t j = 0; j < take; ++j) {
        uint32_t ord = neigh[j];
        if (!seen[ord]) {
          seen[ord] = 1;
          frontier.push_back(ord);
        }
      }
    }
    if (frontier.empty() || round >= params.max_iters) break;
    std::sort(frontier.begin(), frontier.end());
    for (uint32_t ord : frontier)
      scored.push_back({ord, exact_score(q, map_to_embedding(ord, lexical, index), index)});
  }

  return top_k(q, lexical, std::move(scored), params.k);
}

}  // namespace latte
