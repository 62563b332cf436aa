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

#include "lexical.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <limits>
#include <numeric>
#include <queue>

#include "binio.hpp"
#include "tokenize.hpp"

namespace latte {

namespace {

constexpr char kLexMagic[6] = {'L', 'L', 'L', 'E', 'X', '1'};
constexpr char kGraphMagic[6] = {'L', 'L', 'G', 'R', 'F', '1'};
constexpr uint32_t kLexVersion = 1;
constexpr uint32_t kNoDoc = std::numeric_limits<uint32_t>::max();

// Unique query terms in ascending order with their query-side frequency.
// Every scoring path iterates terms in exactly this order so sums round
// identically.
std::vector<std::pair<std::string, uint32_t>> unique_terms(std::span<const std::string> terms) {
  std::map<std::string, uint32_t> counts;
  for (const auto& t : terms) ++counts[t];
  return {counts.begin(), counts.end()};
}

bool better_hit(const OrdScored& a, const OrdScored& b) {
  if (a.score != b.score) return a.score > b.score;
  return a.ord < b.ord;
}

}  // namespace

std::optional<uint32_t> LexicalIndex::find_doc(std::string_view doc_id) const {
  auto it = id_to_ord_.find(std::string(doc_id));
  if (it == id_to_ord_.end()) return std::nullopt;
  return it->second;
}

const PostingList* LexicalIndex::postings(const std::string& term) const {
  auto it = terms_.find(term);
  return it == terms_.end() ? nullptr : &it->second;
}

double LexicalIndex::idf_for_df(uint32_t df) const {
  double n = double(doc_count());
  return std::log((n - df + 0.5) / (df + 0.5) + 1.0);
}

double LexicalIndex::posting_score(const PostingList& pl, uint32_t tf, uint32_t len) const {
  double norm = double(tf) + params_.k1 * (1.0 - params_.b + params_.b * len / avg_doc_len_);
  return pl.idf * (double(tf) * (params_.k1 + 1.0)) / norm;
}

void LexicalIndex::finalize() {
  double total = 0.0;
  for (uint32_t len : doc_lengths_) total += double(len);
  avg_doc_len_ = total / double(doc_lengths_.size());

  id_to_ord_.clear();
  for (uint32_t i = 0; i < doc_ids_.size(); ++i) {
    if (!id_to_ord_.emplace(doc_ids_[i], i).second)
      throw Error(ErrorCode::Input, "duplicate doc_id: " + doc_ids_[i]);
  }
  std::vector<uint32_t> order(doc_ids_.size());
  std::iota(order.begin(), order.end(), 0u);
  std::sort(order.begin(), order.end(),
            [&](uint32_t a, uint32_t b) { return doc_ids_[a] < doc_ids_[b]; });
  id_rank_.assign(doc_ids_.size(), 0);
  for (uint32_t r = 0; r < order.size(); ++r) id_rank_[order[r]] = r;

  for (auto& [term, pl] : terms_) {
    pl.idf = idf_for_df(pl.df());
    pl.block_last.clear();
    pl.block_max.clear();
    pl.max_score = 0.0;
    for (size_t start = 0; start < pl.postings.size(); start += kBlockSize) {
      size_t end = std::min(start + kBlockSize, pl.postings.size());
      double bmax = 0.0;
      for (size_t i = start; i < end; ++i) {
        double s = posting_score(pl, pl.postings[i].tf, doc_lengths_[pl.postings[i].ord]);
        if (s > bmax) bmax = s;
      }
      pl.block_last.push_back(pl.postings[end - 1].ord);
      pl.block_max.push_back(bmax);
      if (bmax > pl.max_score) pl.max_score = bmax;
    }
  }
}

LexicalIndex build_lexical_index(const std::vector<CorpusDoc>& corpus, const Bm25Params& params) {
  if (corpus.empty()) throw Error(ErrorCode::Input, "cannot index an empty corpus");
  LexicalIndex index;
  index.params_ = params;
  index.doc_ids_.reserve(corpus.size());
  index.doc_lengths_.reserve(corpus.size());
  for (uint32_t ord = 0; ord < corpus.size(); ++ord) {
    const CorpusDoc& doc = corpus[ord];
    std::vector<std::string> tokens = tokenize_stem(doc.text);
    index.doc_ids_.push_back(doc.doc_id);
    index.doc_lengths_.push_back(uint32_t(tokens.size()));
    std::map<std::string, uint32_t> tf;
    for (auto& t : tokens) ++tf[t];
    for (auto& [term, count] : tf) index.terms_[term].postings.push_back({ord, count});
  }
  index.finalize();
  return index;
}

double bm25_score(std::span<const std::string> terms, uint32_t ord, const LexicalIndex& index) {
  double score = 0.0;
  for (const auto& [term, qtf] : unique_terms(terms)) {
    const PostingList* pl = index.postings(term);
    if (!pl) continue;
    auto it = std::lower_bound(pl->postings.begin(), pl->postings.end(), ord,
                               [](const Posting& p, uint32_t o) { return p.ord < o; });
    if (it == pl->postings.end() || it->ord != ord) continue;
    score += double(qtf) * index.posting_score(*pl, it->tf, index.doc_length(ord));
  }
  return score;
}

namespace {

// Keeps the top-n by (score desc, ord asc). Because documents are offered in
// ascending ordinal order, a later candidate never displaces an equal score.
class TopN {
 public:
  explicit TopN(uint32_t n) : n_(n) {}

  bool full() const { return heap_.size() == n_; }
  double threshold() const { return heap_.top().score; }

  void offer(const OrdScored& hit) {
    if (!full()) {
      heap_.push(hit);
    } else if (hit.score > heap_.top().score) {
      heap_.pop();
      heap_.push(hit);
    }
  }

  std::vector<OrdScored> drain() {
    std::vector<OrdScored> out;
    out.reserve(heap_.size());
    while (!heap_.empty()) {
      out.push_back(heap_.top());
      heap_.pop();
    }
    std::sort(out.begin(), out.end(), better_hit);
    return out;
  }

 private:
  struct WorstOnTop {
    bool operator()(const OrdScored& a, const OrdScored& b) const { return better_hit(a, b); }
  };
  uint32_t n_;
  std::priority_queue<OrdScored, std::vector<OrdScored>, WorstOnTop> heap_;
};

struct Cursor {
  const PostingList* pl;
  double qtf;
  double ub;  // qtf * term max score
  size_t pos = 0;

  uint32_t docid() const { return pos < pl->postings.size() ? pl->postings[pos].ord : kNoDoc; }

  void next() { ++pos; }

  void next_geq(uint32_t d) {
    auto begin = pl->postings.begin() + long(pos);
    auto it = std::lower_bound(begin, pl->postings.end(), d,
                               [](const Posting& p, uint32_t o) { return p.ord < o; });
    pos = size_t(it - pl->postings.begin());
  }

  // Block containing the first posting >= d, or nblocks when exhausted.
  size_t block_for(uint32_t d) const {
    auto it = std::lower_bound(pl->block_last.begin(), pl->block_last.end(), d);
    return size_t(it - pl->block_last.begin());
  }
};

}  // namespace

std::vector<OrdScored> bm25_search_wand(std::span<const std::string> terms, uint32_t n,
                                        const LexicalIndex& index) {
  if (n < 1) throw Error(ErrorCode::Config, "n must be >= 1");

  // Cursors in canonical (ascending term) order; evaluation also sums in
  // this order so totals match the brute-force path bit for bit.
  std::vector<Cursor> cursors;
  for (const auto& [term, qtf] : unique_terms(terms)) {
    const PostingList* pl = index.postings(term);
    if (!pl) continue;
    cursors.push_back({pl, double(qtf), double(qtf) * pl->max_score, 0});
  }
  if (cursors.empty()) return {};

  TopN top(n);
  std::vector<size_t> order(cursors.size());
  std::iota(order.begin(), order.end(), size_t(0));

  for (;;) {
    order.erase(std::remove_if(order.begin(), order.end(),
                               [&](size_t i) { return cursors[i].docid() == kNoDoc; }),
                order.end());
    if (order.empty()) break;
    std::sort(order.begin(), order.end(), [&](size_t a, size_t b) {
      uint32_t da = cursors[a].docid(), db = cursors[b].docid();
      if (da != db) return da < db;
      return a < b;
    });

    size_t pivot_idx = 0;
    if (top.full()) {
      double theta = top.threshold();
      double acc = 0.0;
      bool found = false;
      for (size_t i = 0; i < order.size(); ++i) {
        acc += cursors[order[i]].ub;
        if (acc > theta) {
          pivot_idx = i;
          found = true;
          break;
        }
      }
      if (!found) break;  // no remaining document can enter the heap
    }
    uint32_t pivot = cursors[order[pivot_idx]].docid();
    while (pivot_idx + 1 < order.size() && cursors[order[pivot_idx + 1]].docid() == pivot)
      ++pivot_idx;

    if (top.full()) {
      // Block-max refinement over the cursors that can touch the pivot.
      double bsum = 0.0;
      uint32_t min_boundary = kNoDoc;
      for (size_t i = 0; i <= pivot_idx; ++i) {
        const Cursor& c = cursors[order[i]];
        size_t blk = c.block_for(pivot);
        if (blk >= c.pl->block_last.size()) continue;  // exhausted beyond pivot
        bsum += c.qtf * c.pl->block_max[blk];
        min_boundary = std::min(min_boundary, c.pl->block_last[blk]);
      }
      if (bsum <= top.threshold()) {
        uint32_t next_doc = min_boundary == kNoDoc ? pivot + 1 : min_boundary + 1;
        if (pivot_idx + 1 < order.size())
          next_doc = std::min(next_doc, cursors[order[pivot_idx + 1]].docid());
        next_doc = std::max(next_doc, pivot + 1);
        size_t adv = order[0];
        for (size_t i = 1; i <= pivot_idx; ++i)
          if (cursors[order[i]].ub > cursors[adv].ub) adv = order[i];
        cursors[adv].next_geq(next_doc);
        continue;
      }
    }

    if (cursors[order[0]].docid() == pivot) {
      double score = 0.0;
      for (Cursor& c : cursors) {
        if (c.docid() != pivot) continue;
        score += c.qtf * index.posting_score(*c.pl, c.pl->postings[c.pos].tf,
                                             index.doc_length(pivot));
      }
      top.offer({pivot, score});
      for (Cursor& c : cursors)
        if (c.docid() == pivot) c.next();
    } else {
      size_t adv = order.size();
      for (size_t i = 0; i < pivot_idx; ++i) {
        if (cursors[order[i]].docid() >= pivot) continue;
        if (adv == order.size() || cursors[order[i]].ub > cursors[adv].ub) adv = order[i];
      }
      cursors[adv].next_geq(pivot);
    }
  }
  return top.drain();
}

std::vector<OrdScored> bm25_search_bruteforce(std::span<const std::string> terms, uint32_t n,
                                              const LexicalIndex& index) {
  if (n < 1) throw Error(ErrorCode::Config, "n must be >= 1");
  std::vector<double> acc(index.doc_count(), 0.0);
  bool any = false;
  for (const auto& [term, qtf] : unique_terms(terms)) {
    const PostingList* pl = index.postings(term);
    if (!pl) continue;
    any = true;
    for (const Posting& p : pl->postings)
      acc[p.ord] += double(qtf) * index.posting_score(*pl, p.tf, index.doc_length(p.ord));
  }
  if (!any) return {};
  std::vector<OrdScored> hits;
  for (uint32_t ord = 0; ord < index.doc_count(); ++ord)
    if (acc[ord] > 0.0) hits.push_back({ord, acc[ord]});
  std::sort(hits.begin(), hits.end(), better_hit);
  if (hits.size() > n) hits.resize(n);
  return hits;
}

std::vector<std::string> lexical_query_terms(std::string_view text) {
  return tokenize_stem(text);
}

ProximityGraph build_proximity_graph(const LexicalIndex& index,
                                     const std::vector<CorpusDoc>& corpus, uint32_t k) {
  if (k < 1) throw Error(ErrorCode::Config, "graph fan-out must be >= 1");
  if (corpus.size() != index.doc_count())
    throw Error(ErrorCode::Mismatch, "corpus does not match the lexical index");

  ProximityGraph graph;
  graph.k = k;
  graph.neighbors.resize(corpus.size());
  for (uint32_t ord = 0; ord < corpus.size(); ++ord) {
    if (corpus[ord].doc_id != index.doc_id(ord))
      throw Error(ErrorCode::Mismatch, "corpus order does not match the lexical index");

    // Doc-as-query proxy: the document's top-16 terms by within-doc tf*idf.
    std::map<std::string, uint32_t> tf;
    for (auto& t : tokenize_stem(corpus[ord].text)) ++tf[t];
    std::vector<std::pair<double, std::string>> weighted;
    weighted.reserve(tf.size());
    for (auto& [term, count] : tf) {
      const PostingList* pl = index.postings(term);
      if (!pl) continue;
      weighted.emplace_back(double(count) * pl->idf, term);
    }
    std::sort(weighted.begin(), weighted.end(), [](const auto& a, const auto& b) {
      if (a.first != b.first) return a.first > b.first;
      return a.second < b.second;
    });
    if (weighted.size() > 16) weighted.resize(16);
    std::vector<std::string> probe;
    probe.reserve(weighted.size());
    for (auto& [w, term] : weighted) probe.push_back(term);

    std::vector<OrdScored> hits = bm25_search_wand(probe, k + 1, index);
    std::vector<uint32_t>& out = graph.neighbors[ord];
    for (const OrdScored& h : hits) {
      if (h.ord == ord) continue;
      out.push_back(h.ord);
      if (out.size() == k) break;
    }
    std::sort(out.begin(), out.end());
  }
  return graph;
}

void save_graph(const ProximityGraph& graph, const std::string& path) {
  BinWriter w;
  w.put_bytes(kGraphMagic, 6);
  w.put_u32(graph.k);
  for (const auto& list : graph.neighbors) {
    w.put_u32(uint32_t(list.size()));
    for (uint32_t ord : list) w.put_u32(ord);
  }
  write_file(path, w.buffer());
}

ProximityGraph load_graph(const std::string& path) {
  std::string content = read_file(path);
  BinReader r(content);
  if (r.remaining() < 6 || std::memcmp(r.take(6).data(), kGraphMagic, 6) != 0)
    throw Error(ErrorCode::Format, "not a proximity graph file (bad magic): " + path);
  ProximityGraph graph;
  graph.k = r.get_u32();
  if (graph.k == 0) throw Error(ErrorCode::Corrupt, "graph fan-out of 0");
  while (!r.at_end()) {
    uint32_t count = r.get_u32();
    if (count > graph.k) throw Error(ErrorCode::Corrupt, "neighbor list longer than fan-out");
    r.require_payload(count, 4);
    std::vector<uint32_t> list(count);
    uint32_t prev = 0;
    uint32_t self = uint32_t(graph.neighbors.size());
    for (uint32_t i = 0; i < count; ++i) {
      list[i] = r.get_u32();
      if (list[i] == self) throw Error(ErrorCode::Corrupt, "self-loop in proximity graph");
      if (i > 0 && list[i] <= prev)
        throw Error(ErrorCode::Corrupt, "neighbor list not strictly ascending");
      prev = list[i];
    }
    graph.neighbors.push_back(std::move(list));
  }
  for (const auto& list : graph.neighbors)
    for (uint32_t ord : list)
      if (ord >= graph.neighbors.size())
        throw Error(ErrorCode::Corrupt, "neighbor ordinal out of range");
  return graph;
}

void save_lexical_index(const LexicalIndex& index, const std::string& path) {
  BinWriter w;
  w.put_bytes(kLexMagic, 6);
  w.put_u32(kLexVersion);
  w.put_f64(index.params().k1);
  w.put_f64(index.params().b);
  w.put_u32(index.doc_count());
  for (uint32_t i = 0; i < index.doc_count(); ++i) {
    w.put_str16(index.doc_id(i));
    w.put_u32(index.doc_length(i));
  }
  w.put_u32(uint32_t(index.terms().size()));
  for (const auto& [term, pl] : index.terms()) {
    w.put_str16(term);
    w.put_u32(pl.df());
    for (const Posting& p : pl.postings) {
      w.put_u32(p.ord);
      w.put_u32(p.tf);
    }
  }
  write_file(path, w.buffer());
}

LexicalIndex load_lexical_index(const std::string& path) {
  std::string content = read_file(path);
  BinReader r(content);
  if (r.remaining() < 6 || std::memcmp(r.take(6).data(), kLexMagic, 6) != 0)
    throw Error(ErrorCode::Format, "not a lexical index file (bad magic): " + path);
  uint32_t version = r.get_u32();
  if (version != kLexVersion)
    throw Error(ErrorCode::Format, "unsupported lexical index version");
  LexicalIndex index;
  index.params_.k1 = r.get_f64();
  index.params_.b = r.get_f64();
  uint32_t doc_count = r.get_u32();
  if (doc_count == 0) throw Error(ErrorCode::Corrupt, "lexical index with no documents");
  r.require_payload(doc_count, 6);  // str16 + u32 length at minimum
  index.doc_ids_.resize(doc_count);
  index.doc_lengths_.resize(doc_count);
  for (uint32_t i = 0; i < doc_count; ++i) {
    index.doc_ids_[i] = r.get_str16();
    index.doc_lengths_[i] = r.get_u32();
  }
  uint32_t term_count = r.get_u32();
  for (uint32_t t = 0; t < term_count; ++t) {
    std::string term = r.get_str16();
    uint32_t df = r.get_u32();
    r.require_payload(df, 8);
    PostingList pl;
    pl.postings.resize(df);
    uint32_t prev = 0;
    for (uint32_t i = 0; i < df; ++i) {
      pl.postings[i].ord = r.get_u32();
      pl.postings[i].tf = r.get_u32();
      if (pl.postings[i].ord >= doc_count || (i > 0 && pl.postings[i].ord <= prev))
        throw Error(ErrorCode::Corrupt, "posting list not strictly ascending");
      if (pl.postings[i].tf == 0) throw Error(ErrorCode::Corrupt, "posting with zero tf");
      prev = pl.postings[i].ord;
    }
    index.terms_.emplace(std::move(term), std::move(pl));
  }
  if (!r.at_end()) throw Error(ErrorCode::Corrupt, "trailing bytes in lexical index");
  index.finalize();
  return index;
}

}  // namespace latte
