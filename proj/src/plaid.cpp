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

#include "plaid.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "vecmath.hpp"

namespace latte {

void QueryEmbeddings::validate() const {
  if (dim == 0 || data.empty())
    throw Error(ErrorCode::Input, "query has no token embeddings: " + query_id);
  if (data.size() % dim != 0)
    throw Error(ErrorCode::Input, "query data not a multiple of dim: " + query_id);
  for (size_t i = 0; i < rows(); ++i) {
    double n = l2_norm(row(i));
    if (std::abs(n - 1.0) > 1e-4)
      throw Error(ErrorCode::Input, "non-unit query vector: " + query_id);
  }
}

void SearchParams::validate() const {
  if (nprobe < 1) throw Error(ErrorCode::Config, "nprobe must be >= 1");
  if (ndocs < 4) throw Error(ErrorCode::Config, "ndocs must be >= 4");
  if (k < 1) throw Error(ErrorCode::Config, "k must be >= 1");
}

SearchParams plaid_preset(char name, uint32_t k) {
  switch (name) {
    case 'a': return {1, 0.50f, 256, k};
    case 'b': return {2, 0.45f, 1024, k};
    case 'c': return {4, 0.40f, 4096, k};
    default: throw Error(ErrorCode::Config, std::string("unknown preset: ") + name);
  }
}

namespace {

// Query-token x centroid similarity matrix; joint input to phases 1-3.
std::vector<float> centroid_sims(const QueryEmbeddings& q, const CompressedIndex& index) {
  const uint32_t k = index.nclusters();
  std::vector<float> sims(q.rows() * size_t(k));
  for (size_t i = 0; i < q.rows(); ++i) {
    std::span<const float> qi = q.row(i);
    float* out = sims.data() + i * k;
    for (uint32_t c = 0; c < k; ++c) out[c] = dot_f32(qi, index.codebook().centroid(c));
  }
  return sims;
}

// Top-nprobe centroid ids for one query token, ties toward lower ids.
void top_probes(const float* sims, uint32_t nclusters, uint32_t nprobe,
                std::vector<uint32_t>& out) {
  out.resize(nclusters);
  std::iota(out.begin(), out.end(), 0u);
  auto better = [&](uint32_t a, uint32_t b) {
    if (sims[a] != sims[b]) return sims[a] > sims[b];
    return a < b;
  };
  if (nprobe < nclusters) {
    std::partial_sort(out.begin(), out.begin() + nprobe, out.end(), better);
    out.resize(nprobe);
  } else {
    std::sort(out.begin(), out.end(), better);
  }
}

struct OrdScore {
  uint32_t ord;
  double score;
};

// (score desc, doc_id asc) via the precomputed lexicographic id ranks.
struct ByScoreThenId {
  const CompressedIndex& index;
  bool operator()(const OrdScore& a, const OrdScore& b) const {
    if (a.score != b.score) return a.score > b.score;
    return index.id_rank(a.ord) < index.id_rank(b.ord);
  }
};

RankedList to_ranked(const QueryEmbeddings& q, const CompressedIndex& index,
                     std::vector<OrdScore> scored, uint32_t k) {
  std::sort(scored.begin(), scored.end(), ByScoreThenId{index});
  if (scored.size() > k) scored.resize(k);
  RankedList out;
  out.query_id = q.query_id;
  out.entries.reserve(scored.size());
  for (const auto& s : scored) out.entries.push_back({index.doc_id(s.ord), s.score});
  return out;
}

}  // namespace

double exact_score(const QueryEmbeddings& q, size_t ord, const CompressedIndex& index) {
  const DocRecord& doc = index.doc(ord);
  const size_t qn = q.rows();
  std::vector<float> maxes(qn, -std::numeric_limits<float>::infinity());
  std::vector<float> scratch(index.dim());
  for (size_t j = 0; j < doc.ntokens(); ++j) {
    index.decompress_token_into(ord, j, scratch);
    for (size_t i = 0; i < qn; ++i) {
      float d = dot_f32(q.row(i), scratch);
      if (d > maxes[i]) maxes[i] = d;
    }
  }
  double sum = 0.0;
  for (float m : maxes) sum += double(m);
  return sum;
}

CandidateSet generate_candidates(const QueryEmbeddings& q, const CompressedIndex& index,
                                 uint32_t nprobe) {
  q.validate();
  if (q.dim != index.dim()) throw Error(ErrorCode::Input, "query dim does not match index");
  nprobe = std::min(nprobe, index.nclusters());

  std::vector<float> sims = centroid_sims(q, index);
  const uint32_t k = index.nclusters();

  std::vector<char> centroid_hit(k, 0);
  std::vector<uint32_t> probes;
  for (size_t i = 0; i < q.rows(); ++i) {
    top_probes(sims.data() + i * k, k, nprobe, probes);
    for (uint32_t c : probes) centroid_hit[c] = 1;
  }

  CandidateSet out;
  std::vector<char> doc_hit(index.doc_count(), 0);
  for (uint32_t c = 0; c < k; ++c) {
    if (!centroid_hit[c]) continue;
    out.centroids.push_back(c);
    for (uint32_t ord : index.ivf(c)) doc_hit[ord] = 1;
  }
  for (uint32_t ord = 0; ord < index.doc_count(); ++ord)
    if (doc_hit[ord]) out.docs.push_back(ord);
  return out;
}

std::vector<uint32_t> prune_centroids(const QueryEmbeddings& q, const CompressedIndex& index,
                                      std::span<const uint32_t> centroids, float t_cs) {
  q.validate();
  std::vector<uint32_t> out;
  for (uint32_t c : centroids) {
    if (c >= index.nclusters()) throw Error(ErrorCode::Input, "centroid id out of range");
    std::span<const float> cen = index.codebook().centroid(c);
    float best = -std::numeric_limits<float>::infinity();
    for (size_t i = 0; i < q.rows(); ++i) {
      float d = dot_f32(q.row(i), cen);
      if (d > best) best = d;
    }
    if (best >= t_cs) out.push_back(c);
  }
  return out;
}

double approx_score(const QueryEmbeddings& q, size_t ord, std::span<const uint32_t> surviving,
                    const CompressedIndex& index) {
  std::vector<char> mask(index.nclusters(), 0);
  for (uint32_t c : surviving) mask[c] = 1;

  double sum = 0.0;
  const auto& centroids = index.doc_centroids(ord);
  for (size_t i = 0; i < q.rows(); ++i) {
    std::span<const float> qi = q.row(i);
    float best = -std::numeric_limits<float>::infinity();
    bool any = false;
    for (uint32_t c : centroids) {
      if (!mask[c]) continue;
      float d = dot_f32(qi, index.codebook().centroid(c));
      if (!any || d > best) best = d;
      any = true;
    }
    if (any) sum += double(best);
  }
  return sum;
}

RankedList plaid_search(const QueryEmbeddings& q, const CompressedIndex& index,
                        const SearchParams& params) {
  params.validate();
  q.validate();
  if (q.dim != index.dim()) throw Error(ErrorCode::Input, "query dim does not match index");

  const uint32_t k = index.nclusters();
  const uint32_t nprobe = std::min(params.nprobe, k);
  const size_t qn = q.rows();
  std::vector<float> sims = centroid_sims(q, index);

  // Phase 1: probe top-nprobe centroids per token, union their postings.
  std::vector<char> matched(k, 0);
  {
    std::vector<uint32_t> probes;
    for (size_t i = 0; i < qn; ++i) {
      top_probes(sims.data() + i * k, k, nprobe, probes);
      for (uint32_t c : probes) matched[c] = 1;
    }
  }
  std::vector<char> doc_hit(index.doc_count(), 0);
  for (uint32_t c = 0; c < k; ++c)
    if (matched[c])
      for (uint32_t ord : index.ivf(c)) doc_hit[ord] = 1;

  // Phase 2: prune matched centroids below the threshold.
  std::vector<char> surviving(k, 0);
  for (uint32_t c = 0; c < k; ++c) {
    if (!matched[c]) continue;
    float best = -std::numeric_limits<float>::infinity();
    for (size_t i = 0; i < qn; ++i) {
      float d = sims[i * k + c];
      if (d > best) best = d;
    }
    if (best >= params.t_cs) surviving[c] = 1;
  }

  // Phase 3: centroid-interaction score for every candidate.
  std::vector<OrdScore> approx;
  for (uint32_t ord = 0; ord < index.doc_count(); ++ord) {
    if (!doc_hit[ord]) continue;
    double sum = 0.0;
    for (size_t i = 0; i < qn; ++i) {
      const float* row = sims.data() + i * k;
      float best = -std::numeric_limits<float>::infinity();
      bool any = false;
      for (uint32_t c : index.doc_centroids(ord)) {
        if (!surviving[c]) continue;
        float d = row[c];
        if (!any || d > best) best = d;
        any = true;
      }
      if (any) sum += double(best);
    }
    approx.push_back({ord, sum});
  }

  ByScoreThenId better{index};
  if (approx.size() > params.ndocs) {
    std::nth_element(approx.begin(), approx.begin() + params.ndocs, approx.end(), better);
    approx.resize(params.ndocs);
  }
  std::sort(approx.begin(), approx.end(), better);

  // Phase 4: exact re-scoring of the head of the approximate ranking.
  size_t rescore_n = std::max<size_t>((params.ndocs + 3) / 4, params.k);
  rescore_n = std::min<size_t>({rescore_n, size_t(params.ndocs), approx.size()});
  std::vector<OrdScore> rescored;
  rescored.reserve(rescore_n);
  for (size_t i = 0; i < rescore_n; ++i)
    rescored.push_back({approx[i].ord, exact_score(q, approx[i].ord, index)});

  return to_ranked(q, index, std::move(rescored), params.k);
}

RankedList exhaustive_search(const QueryEmbeddings& q, const CompressedIndex& index,
                             uint32_t k) {
  q.validate();
  if (k < 1) throw Error(ErrorCode::Config, "k must be >= 1");
  if (q.dim != index.dim()) throw Error(ErrorCode::Input, "query dim does not match index");
  std::vector<OrdScore> scored;
  scored.reserve(index.doc_count());
  for (uint32_t ord = 0; ord < index.doc_count(); ++ord)
    scored.push_back({ord, exact_score(q, ord, index)});
  return to_ranked(q, index, std::move(scored), k);
}

}  // namespace latte
