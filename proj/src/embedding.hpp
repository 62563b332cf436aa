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
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "error.hpp"

namespace latte {

// Per-document token embeddings. Rows are unit-norm vectors; token_ids is
// either empty or one vocabulary id per row (only needed for cluster
// analysis).
struct TokenMatrix {
  std::string doc_id;
  uint32_t dim = 0;
  std::vector<uint32_t> token_ids;
  std::vector<float> data;  // rows() x dim, row-major

  size_t rows() const { return dim == 0 ? 0 : data.size() / dim; }

  std::span<const float> row(size_t i) const {
    return std::span<const float>(data.data() + i * dim, dim);
  }

  void push_row(std::span<const float> v) { data.insert(data.end(), v.begin(), v.end()); }

  // Checks unit norms (1e-4), dim consistency and token_ids length.
  void validate() const;
};

struct IndexConfig {
  uint32_t dim = 64;
  uint32_t nclusters = 1024;
  uint32_t nbits = 4;  // one of {1, 2, 4, 8}
  uint64_t seed = 0;
  uint32_t kmeans_iters = 20;
  uint32_t sample_cap = 16384;
  // When set, the codebook size is capped at total_tokens/16 so tiny corpora
  // do not get a centroid per token by accident.
  bool scale_nclusters = true;

  void validate() const;
};

struct Codebook {
  uint32_t dim = 0;
  uint32_t nclusters = 0;
  std::vector<float> centroids;  // nclusters x dim, unit rows

  std::span<const float> centroid(uint32_t c) const {
    return std::span<const float>(centroids.data() + size_t(c) * dim, dim);
  }
};

// Scalar residual quantizer shared by every dimension: bucket boundaries are
// global quantiles of the pooled residual components, reconstruction values
// are per-bucket means.
struct ResidualCodec {
  uint32_t nbits = 0;
  std::vector<float> cutoffs;          // 2^nbits - 1, ascending
  std::vector<float> representatives;  // 2^nbits

  uint32_t buckets() const { return 1u << nbits; }

  // Index of the bucket containing r: the number of cutoffs strictly below r.
  uint32_t bucket_of(float r) const;

  float representative(uint32_t bucket) const { return representatives[bucket]; }

  size_t code_bytes(uint32_t dim) const { return (size_t(dim) * nbits + 7) / 8; }
};

// Packs dim bucket indices of nbits each, little-endian within each byte.
void pack_code(std::span<const uint32_t> buckets, uint32_t nbits, std::span<uint8_t> out);
uint32_t unpack_code_at(std::span<const uint8_t> code, uint32_t nbits, uint32_t i);

struct DocRecord {
  std::string doc_id;
  std::vector<uint32_t> token_ids;     // empty when not retained
  std::vector<uint32_t> centroid_ids;  // one per token
  std::vector<uint8_t> codes;          // ntokens x code_bytes, packed residuals

  size_t ntokens() const { return centroid_ids.size(); }
};

// The searchable artifact: codebook + per-document quantized tokens +
// centroid -> document inverted lists. Immutable once built; concurrent
// readers are safe.
class CompressedIndex {
 public:
  const Codebook& codebook() const { return codebook_; }
  const ResidualCodec& codec() const { return codec_; }
  uint32_t dim() const { return codebook_.dim; }
  uint32_t nclusters() const { return codebook_.nclusters; }

  size_t doc_count() const { return docs_.size(); }
  size_t total_tokens() const { return total_tokens_; }
  bool has_token_ids() const { return has_token_ids_; }

  const DocRecord& doc(size_t ord) const { return docs_[ord]; }
  const std::string& doc_id(size_t ord) const { return docs_[ord].doc_id; }
  const std::vector<uint32_t>& ivf(uint32_t centroid) const { return ivf_[centroid]; }

  // Sorted unique centroid ids appearing in a document (derived, in-memory).
  const std::vector<uint32_t>& doc_centroids(size_t ord) const { return doc_centroids_[ord]; }

  std::optional<size_t> find_doc(std::string_view doc_id) const;

  // Rank of doc_id in lexicographic order over all doc ids; used as the
  // deterministic tie-break everywhere scores collide.
  uint32_t id_rank(size_t ord) const { return id_rank_[ord]; }

  // Decompresses token j of document ord into out (size dim), unit norm.
  void decompress_token_into(size_t ord, size_t j, std::span<float> out) const;

  // Config echo (for inspect / rebuilds); seed and codebook parameters used
  // at build time.
  const IndexConfig& build_config() const { return config_; }

 private:
  friend CompressedIndex build_index(const std::vector<TokenMatrix>&, const IndexConfig&);
  friend CompressedIndex load_index(const std::string&);

  void finalize();  // derived structures: doc_centroids_, id lookup, ranks

  Codebook codebook_;
  ResidualCodec codec_;
  std::vector<DocRecord> docs_;
  std::vector<std::vector<uint32_t>> ivf_;
  IndexConfig config_;
  bool has_token_ids_ = false;
  size_t total_tokens_ = 0;

  std::vector<std::vector<uint32_t>> doc_centroids_;
  std::unordered_map<std::string, size_t> id_to_ord_;
  std::vector<uint32_t> id_rank_;
};

// Spherical k-means over unit vectors (cosine objective, centroids
// renormalized every iteration, empty clusters re-seeded from the sample
// farthest from its assigned centroid). Deterministic under cfg.seed.
Codebook train_codebook(std::span<const float> samples, size_t count, const IndexConfig& cfg);

// Bucket cutoffs at the i/2^nbits quantiles (linear interpolation) of the
// pooled components; representatives are in-bucket means, with empty buckets
// falling back to the interval midpoint clamped to the data range.
ResidualCodec fit_residual_codec(std::span<const float> residual_components, uint32_t nbits);

// Nearest centroid by cosine (ties -> lowest id) plus the packed residual
// code of vec - centroid.
std::pair<uint32_t, std::vector<uint8_t>> quantize_token(std::span<const float> vec,
                                                         const Codebook& codebook,
                                                         const ResidualCodec& codec);

// centroid + per-dimension representatives, renormalized to unit norm.
std::vector<float> decompress_token(uint32_t centroid_id, std::span<const uint8_t> code,
                                    const CompressedIndex& index);

CompressedIndex build_index(const std::vector<TokenMatrix>& docs, const IndexConfig& cfg);

void save_index(const CompressedIndex& index, const std::string& path);
CompressedIndex load_index(const std::string& path);

// Token-embedding interchange file ("LLEMB1"). Vectors are renormalized on
// load; NaN/Inf components are rejected.
std::vector<TokenMatrix> load_embeddings(const std::string& path);
void write_embeddings(const std::vector<TokenMatrix>& docs, const std::string& path);

}  // namespace latte
