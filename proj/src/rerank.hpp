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

#include "lexical.hpp"
#include "plaid.hpp"

namespace latte {

struct RerankParams {
  uint32_t n = 1000;  // first-stage BM25 pool size
  uint32_t k = 1000;  // output depth

  void validate() const;
};

struct LadrParams {
  uint32_t n0 = 100;          // seed pool size
  uint32_t k_neighbors = 64;  // neighbors taken per expanded document
  uint32_t c = 10;            // width of the expansion window
  uint32_t k = 1000;          // output depth
  uint32_t max_iters = 50;    // safety cap on expansion rounds

  void validate() const;
};

// BM25 top-n pool, every pooled document exactly re-scored with MaxSim.
// A pooled document missing from the embedding index is a hard error: the
// two indexes must cover the same doc_id space.
RankedList rerank(const QueryEmbeddings& q, const RerankParams& params,
                  const LexicalIndex& lexical, const CompressedIndex& index);

// Adaptive graph expansion: seed with BM25 top-n0, then repeatedly score
// the unscored neighbors of the current top-c until the frontier is empty
// (or max_iters rounds). An empty seed pool yields an empty result.
RankedList ladr_search(const QueryEmbeddings& q, const LadrParams& params,
                       const LexicalIndex& lexical, const ProximityGraph& graph,
                       const CompressedIndex& index);

}  // namespace latte
