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

#include "embedding.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <numeric>
#include <unordered_set>

#include "binio.hpp"
#include "rng.hpp"
#include "vecmath.hpp"

namespace latte {

namespace {

constexpr char kEmbMagic[6] = {'L', 'L', 'E', 'M', 'B', '1'};
constexpr char kIdxMagic[6] = {'L', 'L', 'I', 'D', 'X', '1'};
constexpr uint32_t kIndexVersion = 1;

bool valid_nbits(uint32_t nbits) {
  return nbits == 1 || nbits == 2 || nbits == 4 || nbits == 8;
}

uint32_t argmax_centroid(std::span<const float> vec, const Codebook& cb) {
  uint32_t best = 0;
  float best_dot = -2.0f;
  for (uint32_t c = 0; c < cb.nclusters; ++c) {
    float d = dot_f32(vec, cb.centroid(c));
    if (d > best_dot) {  // ties keep the lowest id
      best_dot = d;
      best = c;
    }
  }
  return best;
}

}  // namespace

void TokenMatrix::validate() const {
  if (dim == 0) throw Error(ErrorCode::Input, "TokenMatrix with dim 0: " + doc_id);
  if (data.size() % dim != 0)
    throw Error(ErrorCode::Input, "vector data not a multiple of dim: " + doc_id);
  if (!token_ids.empty() && token_ids.size() != rows())
    throw Error(ErrorCode::Input, "token_ids length mismatch: " + doc_id);
  for (size_t i = 0; i < rows(); ++i) {
    double n = l2_norm(row(i));
    if (std::abs(n - 1.0) > 1e-4)
      throw Error(ErrorCode::Input, "non-unit token vector in doc " + doc_id);
  }
}

void IndexConfig::validate() const {
  if (dim < 2) throw Error(ErrorCode::Config, "dim must be >= 2");
  if (nclusters < 1) throw Error(ErrorCode::Config, "nclusters must be >= 1");
  if (!valid_nbits(nbits)) throw Error(ErrorCode::Config, "nbits must be one of {1,2,4,8}");
  if (kmeans_iters < 1) throw Error(ErrorCode::Config, "kmeans_iters must be >= 1");
  if (sample_cap < 1) throw Error(ErrorCode::Config, "sample_cap must be >= 1");
}

uint32_t ResidualCodec::bucket_of(float r) const {
  auto it = std::lower_bound(cutoffs.begin(), cutoffs.end(), r);
  return uint32_t(it - cutoffs.begin());
}

void pack_code(std::span<const uint32_t> buckets, uint32_t nbits, std::span<uint8_t> out) {
  std::fill(out.begin(), out.end(), uint8_t(0));
  for (size_t i = 0; i < buckets.size(); ++i) {
    size_t bit = i * nbits;
    out[bit / 8] |= uint8_t(buckets[i] << (bit % 8));
  }
}

uint32_t unpack_code_at(std::span<const uint8_t> code, uint32_t nbits, uint32_t i) {
  size_t bit = size_t(i) * nbits;
  uint32_t mask = (1u << nbits) - 1;
  return (uint32_t(code[bit / 8]) >> (bit % 8)) & mask;
}

Codebook train_codebook(std::span<const float> samples, size_t count, const IndexConfig& cfg) {
  cfg.validate();
  if (count == 0) throw Error(ErrorCode::Config, "cannot train codebook on an empty sample set");
  if (samples.size() != count * cfg.dim)
    throw Error(ErrorCode::Input, "sample buffer does not match count x dim");

  const uint32_t dim = cfg.dim;
  const uint32_t k = cfg.nclusters;
  auto sample_row = [&](size_t i) {
    return std::span<const float>(samples.data() + i * dim, dim);
  };

  Rng rng(cfg.seed);
  std::vector<uint32_t> order(count);
  std::iota(order.begin(), order.end(), 0u);
  rng.shuffle(order);

  // Seed from distinct vectors first so exact duplicates cannot occupy two
  // clusters; cycle through the shuffled order if there are too few.
  Codebook cb;
  cb.dim = dim;
  cb.nclusters = k;
  cb.centroids.resize(size_t(k) * dim);
  {
    std::unordered_set<std::string_view> seen;
    uint32_t filled = 0;
    for (uint32_t idx : order) {
      std::string_view bytes(reinterpret_cast<const char*>(sample_row(idx).data()),
                             size_t(dim) * sizeof(float));
      if (seen.insert(bytes).second) {
        std::memcpy(cb.centroids.data() + size_t(filled) * dim, sample_row(idx).data(),
                    size_t(dim) * sizeof(float));
        if (++filled == k) break;
      }
    }
    for (uint32_t c = filled; c < k; ++c) {
      uint32_t idx = order[c % count];
      std::memcpy(cb.centroids.data() + size_t(c) * dim, sample_row(idx).data(),
                  size_t(dim) * sizeof(float));
    }
  }

  std::vector<uint32_t> assign(count, k);
  std::vector<float> best_dot(count);
  std::vector<double> sums(size_t(k) * dim);
  std::vector<size_t> counts(k);

  for (uint32_t iter = 0; iter < cfg.kmeans_iters; ++iter) {
    bool changed = false;
    for (size_t s = 0; s < count; ++s) {
      uint32_t best = argmax_centroid(sample_row(s), cb);
      best_dot[s] = dot_f32(sample_row(s), cb.centroid(best));
      if (best != assign[s]) {
        assign[s] = best;
        changed = true;
      }
    }
    if (!changed && iter > 0) break;

    std::fill(sums.begin(), sums.end(), 0.0);
    std::fill(counts.begin(), counts.end(), size_t(0));
    for (size_t s = 0; s < count; ++s) {
      double* dst = sums.data() + size_t(assign[s]) * dim;
      std::span<const float> v = sample_row(s);
      for (uint32_t d = 0; d < dim; ++d) dst[d] += v[d];
      ++counts[assign[s]];
    }
    for (uint32_t c = 0; c < k; ++c) {
      if (counts[c] == 0) continue;
      double norm_sq = 0.0;
      const double* src = sums.data() + size_t(c) * dim;
      for (uint32_t d = 0; d < dim; ++d) norm_sq += src[d] * src[d];
      if (norm_sq < 1e-18) continue;  // members cancelled out; keep previous centroid
      double inv = 1.0 / std::sqrt(norm_sq);
      float* dst = cb.centroids.data() + size_t(c) * dim;
      for (uint32_t d = 0; d < dim; ++d) dst[d] = float(src[d] * inv);
    }

    // Re-seed empty clusters from the farthest-assigned samples.
    std::vector<char> used(count, 0);
    for (uint32_t c = 0; c < k; ++c) {
      if (counts[c] != 0) continue;
      size_t far = count;
      float far_dot = 2.0f;
      for (size_t s = 0; s < count; ++s) {
        if (!used[s] && best_dot[s] < far_dot) {
          far_dot = best_dot[s];
          far = s;
        }
      }
      if (far == count || far_dot >= 1.0f - 1e-7f) break;  // every sample already on a centroid
      used[far] = 1;
      std::memcpy(cb.centroids.data() + size_t(c) * dim, sample_row(far).data(),
                  size_t(dim) * sizeof(float));
    }
  }

  for (uint32_t c = 0; c < k; ++c) {
    std::span<float> row(cb.centroids.data() + size_t(c) * dim, dim);
    l2_normalize(row);
  }
  return cb;
}

ResidualCodec fit_residual_codec(std::span<const float> residual_components, uint32_t nbits) {
  if (!valid_nbits(nbits)) throw Error(ErrorCode::Config, "nbits must be one of {1,2,4,8}");
  if (residual_components.empty())
    throw Error(ErrorCode::Input, "cannot fit residual codec on empty residuals");

  std::vector<float> sorted(residual_components.begin(), residual_components.end());
  std::sort(sorted.begin(), sorted.end());
  const size_t n = sorted.size();
  const float dmin = sorted.front();
  const float dmax = sorted.back();
  const uint32_t nbuckets = 1u << nbits;

  ResidualCodec codec;
  codec.nbits = nbits;
  codec.cutoffs.resize(nbuckets - 1);
  for (uint32_t i = 1; i < nbuckets; ++i) {
    double pos = double(i) / nbuckets * double(n - 1);
    size_t lo = size_t(pos);
    double frac = pos - double(lo);
    double v = double(sorted[lo]);
    if (lo + 1 < n) v += frac * (double(sorted[lo + 1]) - double(sorted[lo]));
    codec.cutoffs[i - 1] = float(v);
  }
  // Degenerate distributions can collapse quantiles; keep cutoffs strictly
  // ascending by nudging ties upward.
  for (size_t i = 1; i < codec.cutoffs.size(); ++i) {
    if (codec.cutoffs[i] <= codec.cutoffs[i - 1])
      codec.cutoffs[i] = std::nextafterf(codec.cutoffs[i - 1],
                                         std::numeric_limits<float>::infinity());
  }

  std::vector<double> sums(nbuckets, 0.0);
  std::vector<size_t> counts(nbuckets, 0);
  for (float r : residual_components) {
    uint32_t b = codec.bucket_of(r);
    sums[b] += double(r);
    ++counts[b];
  }
  codec.representatives.resize(nbuckets);
  for (uint32_t b = 0; b < nbuckets; ++b) {
    if (counts[b] > 0) {
      codec.representatives[b] = float(sums[b] / double(counts[b]));
    } else {
      double lo = (b == 0) ? double(dmin) : double(codec.cutoffs[b - 1]);
      double hi = (b == nbuckets - 1) ? double(dmax) : double(codec.cutoffs[b]);
      double mid = std::clamp((lo + hi) / 2.0, double(dmin), double(dmax));
      codec.representatives[b] = float(mid);
    }
  }
  return codec;
}

std::pair<uint32_t, std::vector<uint8_t>> quantize_token(std::span<const float> vec,
                                                         const Codebook& codebook,
                                                         const ResidualCodec& codec) {
  if (vec.size() != codebook.dim)
    throw Error(ErrorCode::Input, "vector dimension does not match codebook");
  uint32_t cid = argmax_centroid(vec, codebook);
  std::span<const float> cen = codebook.centroid(cid);
  std::vector<uint32_t> buckets(codebook.dim);
  for (uint32_t d = 0; d < codebook.dim; ++d) buckets[d] = codec.bucket_of(vec[d] - cen[d]);
  std::vector<uint8_t> code(codec.code_bytes(codebook.dim));
  pack_code(buckets, codec.nbits, code);
  return {cid, std::move(code)};
}

namespace {

void decompress_raw(std::span<const float> centroid, const ResidualCodec& codec,
                    std::span<const uint8_t> code, std::span<float> out) {
  for (uint32_t d = 0; d < centroid.size(); ++d)
    out[d] = centroid[d] + codec.representative(unpack_code_at(code, codec.nbits, d));
  l2_normalize(out);
}

}  // namespace

std::vector<float> decompress_token(uint32_t centroid_id, std::span<const uint8_t> code,
                                    const CompressedIndex& index) {
  if (centroid_id >= index.nclusters())
    throw Error(ErrorCode::Corrupt, "centroid id out of range");
  if (code.size() != index.codec().code_bytes(index.dim()))
    throw Error(ErrorCode::Corrupt, "residual code has wrong length");
  std::vector<float> out(index.dim());
  decompress_raw(index.codebook().centroid(centroid_id), index.codec(), code, out);
  return out;
}

void CompressedIndex::decompress_token_into(size_t ord, size_t j, std::span<float> out) const {
  const DocRecord& d = docs_[ord];
  size_t cb = codec_.code_bytes(codebook_.dim);
  std::span<const uint8_t> code(d.codes.data() + j * cb, cb);
  decompress_raw(codebook_.centroid(d.centroid_ids[j]), codec_, code, out);
}

std::optional<size_t> CompressedIndex::find_doc(std::string_view doc_id) const {
  auto it = id_to_ord_.find(std::string(doc_id));
  if (it == id_to_ord_.end()) return std::nullopt;
  return it->second;
}

void CompressedIndex::finalize() {
  total_tokens_ = 0;
  doc_centroids_.clear();
  doc_centroids_.reserve(docs_.size());
  id_to_ord_.clear();
  for (size_t i = 0; i < docs_.size(); ++i) {
    const DocRecord& d = docs_[i];
    total_tokens_ += d.ntokens();
    std::vector<uint32_t> distinct(d.centroid_ids);
    std::sort(distinct.begin(), distinct.end());
    distinct.erase(std::unique(distinct.begin(), distinct.end()), distinct.end());
    doc_centroids_.push_back(std::move(distinct));
    if (!id_to_ord_.emplace(d.doc_id, i).second)
      throw Error(ErrorCode::Input, "duplicate doc_id: " + d.doc_id);
  }
  std::vector<uint32_t> order(docs_.size());
  std::iota(order.begin(), order.end(), 0u);
  std::sort(order.begin(), order.end(),
            [&](uint32_t a, uint32_t b) { return docs_[a].doc_id < docs_[b].doc_id; });
  id_rank_.assign(docs_.size(), 0);
  for (uint32_t r = 0; r < order.size(); ++r) id_rank_[order[r]] = r;
}

CompressedIndex build_index(const std::vector<TokenMatrix>& docs, const IndexConfig& cfg) {
  cfg.validate();
  if (docs.empty()) throw Error(ErrorCode::Input, "cannot build an index from an empty corpus");

  size_t total_tokens = 0;
  bool with_ids = !docs.front().token_ids.empty();
  for (const auto& d : docs) {
    d.validate();
    if (d.dim != cfg.dim)
      throw Error(ErrorCode::Input, "document dimension does not match config: " + d.doc_id);
    if (d.rows() == 0)
      throw Error(ErrorCode::Input, "document with zero tokens rejected: " + d.doc_id);
    if (d.token_ids.empty() == with_ids)
      throw Error(ErrorCode::Input, "token_ids must be present on all documents or none");
    total_tokens += d.rows();
  }

  IndexConfig effective = cfg;
  if (cfg.scale_nclusters) {
    uint64_t cap = std::max<uint64_t>(1, total_tokens / 16);
    effective.nclusters = uint32_t(std::min<uint64_t>(cfg.nclusters, cap));
  }

  // Flat view of every token for sampling and assignment.
  std::vector<std::pair<uint32_t, uint32_t>> flat;  // (doc, row)
  flat.reserve(total_tokens);
  for (uint32_t i = 0; i < docs.size(); ++i)
    for (uint32_t j = 0; j < docs[i].rows(); ++j) flat.emplace_back(i, j);

  Rng rng(cfg.seed);
  std::vector<uint32_t> sample_order(total_tokens);
  std::iota(sample_order.begin(), sample_order.end(), 0u);
  rng.shuffle(sample_order);
  size_t nsamples = std::min<size_t>(total_tokens, cfg.sample_cap);
  std::vector<float> samples(nsamples * cfg.dim);
  for (size_t s = 0; s < nsamples; ++s) {
    auto [di, ti] = flat[sample_order[s]];
    std::memcpy(samples.data() + s * cfg.dim, docs[di].row(ti).data(),
                size_t(cfg.dim) * sizeof(float));
  }

  CompressedIndex index;
  index.config_ = effective;
  index.has_token_ids_ = with_ids;
  index.codebook_ = train_codebook(samples, nsamples, effective);

  // Assign every token once; the assignment feeds both the codec fit and the
  // stored codes.
  std::vector<uint32_t> assigned(total_tokens);
  std::vector<float> pooled;
  pooled.reserve(total_tokens * cfg.dim);
  for (size_t t = 0; t < total_tokens; ++t) {
    auto [di, ti] = flat[t];
    std::span<const float> v = docs[di].row(ti);
    uint32_t cid = argmax_centroid(v, index.codebook_);
    assigned[t] = cid;
    std::span<const float> cen = index.codebook_.centroid(cid);
    for (uint32_t d = 0; d < cfg.dim; ++d) pooled.push_back(v[d] - cen[d]);
  }
  index.codec_ = fit_residual_codec(pooled, cfg.nbits);

  const size_t code_bytes = index.codec_.code_bytes(cfg.dim);
  index.docs_.resize(docs.size());
  std::vector<uint32_t> buckets(cfg.dim);
  size_t t = 0;
  for (size_t i = 0; i < docs.size(); ++i) {
    DocRecord& rec = index.docs_[i];
    rec.doc_id = docs[i].doc_id;
    rec.token_ids = docs[i].token_ids;
    rec.centroid_ids.resize(docs[i].rows());
    rec.codes.resize(docs[i].rows() * code_bytes);
    for (uint32_t j = 0; j < docs[i].rows(); ++j, ++t) {
      uint32_t cid = assigned[t];
      rec.centroid_ids[j] = cid;
      std::span<const float> v = docs[i].row(j);
      std::span<const float> cen = index.codebook_.centroid(cid);
      for (uint32_t d = 0; d < cfg.dim; ++d)
        buckets[d] = index.codec_.bucket_of(v[d] - cen[d]);
      pack_code(buckets, cfg.nbits, std::span<uint8_t>(rec.codes.data() + j * code_bytes,
                                                       code_bytes));
    }
  }

  index.finalize();

  index.ivf_.assign(effective.nclusters, {});
  for (uint32_t i = 0; i < index.docs_.size(); ++i)
    for (uint32_t c : index.doc_centroids_[i]) index.ivf_[c].push_back(i);

  return index;
}

namespace {

std::string serialize_codebook(const Codebook& cb) {
  BinWriter w;
  w.put_u32(cb.dim);
  w.put_u32(cb.nclusters);
  for (float f : cb.centroids) w.put_f32(f);
  return w.take();
}

std::string serialize_codec(const ResidualCodec& codec) {
  BinWriter w;
  w.put_u32(codec.nbits);
  for (float f : codec.cutoffs) w.put_f32(f);
  for (float f : codec.representatives) w.put_f32(f);
  return w.take();
}

}  // namespace

void save_index(const CompressedIndex& index, const std::string& path) {
  BinWriter w;
  w.put_bytes(kIdxMagic, 6);
  w.put_u32(kIndexVersion);

  auto put_section = [&w](const std::string& payload) {
    w.put_u64(payload.size());
    w.put_bytes(payload.data(), payload.size());
  };

  put_section(serialize_codebook(index.codebook()));
  put_section(serialize_codec(index.codec()));

  {
    BinWriter d;
    d.put_u32(uint32_t(index.doc_count()));
    d.put_u8(index.has_token_ids() ? 1 : 0);
    const size_t code_bytes = index.codec().code_bytes(index.dim());
    for (size_t i = 0; i < index.doc_count(); ++i) {
      const DocRecord& rec = index.doc(i);
      d.put_str16(rec.doc_id);
      d.put_u32(uint32_t(rec.ntokens()));
      if (index.has_token_ids())
        for (uint32_t id : rec.token_ids) d.put_u32(id);
      for (uint32_t c : rec.centroid_ids) d.put_u32(c);
      d.put_bytes(rec.codes.data(), rec.ntokens() * code_bytes);
    }
    put_section(d.take());
  }

  {
    BinWriter v;
    v.put_u32(index.nclusters());
    for (uint32_t c = 0; c < index.nclusters(); ++c) {
      const auto& list = index.ivf(c);
      v.put_u32(uint32_t(list.size()));
      for (uint32_t ord : list) v.put_u32(ord);
    }
    put_section(v.take());
  }

  write_file(path, w.buffer());
}

CompressedIndex load_index(const std::string& path) {
  std::string content = read_file(path);
  BinReader r(content);
  if (r.remaining() < 6 || std::memcmp(r.take(6).data(), kIdxMagic, 6) != 0)
    throw Error(ErrorCode::Format, "not an index file (bad magic): " + path);
  uint32_t version = r.get_u32();
  if (version != kIndexVersion)
    throw Error(ErrorCode::Format, "unsupported index version " + std::to_string(version));

  auto section = [&r]() {
    uint64_t len = r.get_u64();
    return BinReader(r.take(len));
  };

  CompressedIndex index;
  {
    BinReader s = section();
    index.codebook_.dim = s.get_u32();
    index.codebook_.nclusters = s.get_u32();
    if (index.codebook_.dim == 0 || index.codebook_.nclusters == 0)
      throw Error(ErrorCode::Corrupt, "empty codebook");
    size_t n = size_t(index.codebook_.dim) * index.codebook_.nclusters;
    s.require_payload(n, 4);
    index.codebook_.centroids.resize(n);
    for (size_t i = 0; i < n; ++i) index.codebook_.centroids[i] = s.get_f32();
    if (!s.at_end()) throw Error(ErrorCode::Corrupt, "trailing bytes in codebook section");
  }
  {
    BinReader s = section();
    index.codec_.nbits = s.get_u32();
    if (!valid_nbits(index.codec_.nbits)) throw Error(ErrorCode::Corrupt, "invalid nbits");
    uint32_t nb = 1u << index.codec_.nbits;
    index.codec_.cutoffs.resize(nb - 1);
    for (auto& f : index.codec_.cutoffs) f = s.get_f32();
    index.codec_.representatives.resize(nb);
    for (auto& f : index.codec_.representatives) f = s.get_f32();
    if (!s.at_end()) throw Error(ErrorCode::Corrupt, "trailing bytes in codec section");
  }
  {
    BinReader s = section();
    uint32_t doc_count = s.get_u32();
    index.has_token_ids_ = s.get_u8() != 0;
    const size_t code_bytes = index.codec_.code_bytes(index.codebook_.dim);
    s.require_payload(doc_count, 6);  // str16 + u32 ntokens at minimum
    index.docs_.resize(doc_count);
    for (uint32_t i = 0; i < doc_count; ++i) {
      DocRecord& rec = index.docs_[i];
      rec.doc_id = s.get_str16();
      uint32_t ntokens = s.get_u32();
      if (ntokens == 0) throw Error(ErrorCode::Corrupt, "document with zero tokens");
      if (index.has_token_ids_) {
        s.require_payload(ntokens, 4);
        rec.token_ids.resize(ntokens);
        for (auto& id : rec.token_ids) id = s.get_u32();
      }
      s.require_payload(ntokens, 4);
      rec.centroid_ids.resize(ntokens);
      for (auto& c : rec.centroid_ids) {
        c = s.get_u32();
        if (c >= index.codebook_.nclusters)
          throw Error(ErrorCode::Corrupt, "centroid id out of range");
      }
      std::string_view bytes = s.take(size_t(ntokens) * code_bytes);
      rec.codes.assign(bytes.begin(), bytes.end());
    }
    if (!s.at_end()) throw Error(ErrorCode::Corrupt, "trailing bytes in docs section");
  }
  {
    BinReader s = section();
    uint32_t nclusters = s.get_u32();
    if (nclusters != index.codebook_.nclusters)
      throw Error(ErrorCode::Corrupt, "ivf cluster count does not match codebook");
    index.ivf_.resize(nclusters);
    for (uint32_t c = 0; c < nclusters; ++c) {
      uint32_t count = s.get_u32();
      s.require_payload(count, 4);
      auto& list = index.ivf_[c];
      list.resize(count);
      uint32_t prev = 0;
      for (uint32_t i = 0; i < count; ++i) {
        list[i] = s.get_u32();
        if (list[i] >= index.docs_.size() || (i > 0 && list[i] <= prev))
          throw Error(ErrorCode::Corrupt, "ivf list not strictly ascending");
        prev = list[i];
      }
    }
    if (!s.at_end()) throw Error(ErrorCode::Corrupt, "trailing bytes in ivf section");
  }
  if (!r.at_end()) throw Error(ErrorCode::Corrupt, "trailing bytes after ivf section");

  index.config_.dim = index.codebook_.dim;
  index.config_.nclusters = index.codebook_.nclusters;
  index.config_.nbits = index.codec_.nbits;
  index.finalize();

  // Cross-check IVF completeness against the stored assignments.
  for (uint32_t i = 0; i < index.docs_.size(); ++i) {
    for (uint32_t c : index.doc_centroids_[i]) {
      const auto& list = index.ivf_[c];
      if (!std::binary_search(list.begin(), list.end(), i))
        throw Error(ErrorCode::Corrupt, "ivf is missing a document assignment");
    }
  }
  size_t ivf_total = 0;
  for (const auto& list : index.ivf_) ivf_total += list.size();
  size_t expect_total = 0;
  for (const auto& dc : index.doc_centroids_) expect_total += dc.size();
  if (ivf_total != expect_total)
    throw Error(ErrorCode::Corrupt, "ivf contains extraneous postings");

  return index;
}

std::vector<TokenMatrix> load_embeddings(const std::string& path) {
  std::string content = read_file(path);
  BinReader r(content);
  if (r.remaining() < 6 || std::memcmp(r.take(6).data(), kEmbMagic, 6) != 0)
    throw Error(ErrorCode::Format, "not a token-embedding file (bad magic): " + path);
  uint32_t dim = r.get_u32();
  uint32_t doc_count = r.get_u32();
  if (dim == 0 && doc_count > 0)
    throw Error(ErrorCode::Corrupt, "embedding file with dim 0");
  r.require_payload(doc_count, 7);  // str16 + u32 + u8 at minimum

  std::vector<TokenMatrix> docs(doc_count);
  for (uint32_t i = 0; i < doc_count; ++i) {
    TokenMatrix& m = docs[i];
    m.doc_id = r.get_str16();
    m.dim = dim;
    uint32_t ntokens = r.get_u32();
    uint8_t has_ids = r.get_u8();
    if (has_ids > 1) throw Error(ErrorCode::Corrupt, "invalid has_token_ids flag");
    if (has_ids) {
      r.require_payload(ntokens, 4);
      m.token_ids.resize(ntokens);
      for (auto& id : m.token_ids) id = r.get_u32();
    }
    r.require_payload(uint64_t(ntokens) * dim, 4);
    m.data.resize(size_t(ntokens) * dim);
    for (auto& f : m.data) {
      f = r.get_f32();
      if (!std::isfinite(f))
        throw Error(ErrorCode::Input, "NaN/Inf embedding component in doc " + m.doc_id);
    }
    for (uint32_t j = 0; j < ntokens; ++j) {
      std::span<float> row(m.data.data() + size_t(j) * dim, dim);
      double n = l2_norm(row);
      if (n < 1e-9)
        throw Error(ErrorCode::Input, "zero-norm embedding vector in doc " + m.doc_id);
      // renormalize, but leave unit vectors bit-exact so round trips are stable
      if (std::abs(n - 1.0) > 1e-6) l2_normalize(row);
    }
  }
  if (!r.at_end()) throw Error(ErrorCode::Corrupt, "trailing bytes in embedding file");
  return docs;
}

void write_embeddings(const std::vector<TokenMatrix>& docs, const std::string& path) {
  uint32_t dim = docs.empty() ? 0 : docs.front().dim;
  for (const auto& d : docs) {
    if (d.dim != dim) throw Error(ErrorCode::Input, "inconsistent dims in embedding write");
    if (!d.token_ids.empty() && d.token_ids.size() != d.rows())
      throw Error(ErrorCode::Input, "token_ids length mismatch: " + d.doc_id);
  }
  BinWriter w;
  w.put_bytes(kEmbMagic, 6);
  w.put_u32(dim);
  w.put_u32(uint32_t(docs.size()));
  for (const auto& d : docs) {
    w.put_str16(d.doc_id);
    w.put_u32(uint32_t(d.rows()));
    w.put_u8(d.token_ids.empty() ? 0 : 1);
    for (uint32_t id : d.token_ids) w.put_u32(id);
    for (float f : d.data) w.put_f32(f);
  }
  write_file(path, w.buffer());
}

}  // namespace latte
