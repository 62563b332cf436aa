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
#include <span>
#include <string>
#include <vector>

#include "embedding.hpp"

namespace latte {

struct QueryEmbeddings {
  std::string query_id;
  std::string text;  // raw query text, used by the lexical stages
  uint32_t dim = 0;
  std::vector<float> data;  // rows() x dim, unit rows

  size_t rows() const { return dim == 0 ? 0 : data.size() / dim; }

  std::span<const float> row(size_t i) const {
    return std::span<const float>(data.data() + i * dim, dim);
  }

  void validate() const;
};

// The PLAID knobs: centroids probed per query token, centroid-pruning
// threshold, approximate-scoring survivor count, and final result depth.
struct SearchParams {
  uint32_t nprobe = 1;
  float t_cs = 0.45f;
  uint32_t ndocs = 1024;
  uint32_t k = 1000;

  void validate() const;
};

// Suggested operational points, by name: (a) = (1, 0.50, 256),
// (b) = (2, 0.45, 1024), (c) = (4, 0.40, 4096).
SearchParams plaid_preset(char name, uint32_t k = 1000);

struct ScoredDoc {
  std::string doc_id;
  double score;
};

// Scores descending, ties broken by ascending doc_id; doc_ids unique.
struct RankedList {
  std::string query_id;
  std::vector<ScoredDoc> entries;
};

// Exact late-interaction (MaxSim) score: sum over query tokens of the best
// dot product against the document's decompressed tokens.
double exact_score(const QueryEmbeddings& q, size_t ord, const CompressedIndex& index);

struct CandidateSet {
  std::vector<uint32_t> docs;       // sorted ascending ordinals
  std::vector<uint32_t> centroids;  // matched centroid ids, sorted ascending
};

// Phase 1: per query token, the top-nprobe centroids by cosine (ties ->
// lowest id); candidates are the union of their inverted lists.
CandidateSet generate_candidates(const QueryEmbeddings& q, const CompressedIndex& index,
                                 uint32_t nprobe);

// Phase 2: keep centroid c iff max_i dot(q_i, centroid_c) >= t_cs.
std::vector<uint32_t> prune_centroids(const QueryEmbeddings& q, const CompressedIndex& index,
                                      std::span<const uint32_t> centroids, float t_cs);

// Phase 3 scoring for one document: sum over query tokens of the best
// centroid dot among the document's distinct centroids that survived
// pruning; a token with no surviving centroid contributes 0.
// `surviving` must be sorted ascending.
double approx_score(const QueryEmbeddings& q, size_t ord, std::span<const uint32_t> surviving,
                    const CompressedIndex& index);

// The full four-phase cascade: candidate generation, centroid pruning,
// approximate scoring of all candidates, exact re-scoring of the top
// max(ceil(ndocs/4), k) survivors (capped at ndocs).
RankedList plaid_search(const QueryEmbeddings& q, const CompressedIndex& index,
                        const SearchParams& params);

// Fully scores every document; the reference the cascade approximates.
RankedList exhaustive_search(const QueryEmbeddings& q, const CompressedIndex& index, uint32_t k);

}  // namespace latte
