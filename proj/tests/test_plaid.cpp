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

#include <doctest.h>

#include <algorithm>
#include <numeric>
#include <set>
#include <thread>

#include "embedding.hpp"
#include "eval.hpp"
#include "plaid.hpp"
#include "support/oracles.hpp"
#include "support/util.hpp"
#include "vecmath.hpp"

using namespace latte;
using namespace latte::test;

namespace {

struct Fixture {
  std::vector<CorpusDoc> corpus;
  std::vector<TokenMatrix> docs;
  CompressedIndex index;
  uint64_t seed;

  explicit Fixture(size_t ndocs = 150, uint32_t dim = 16, uint64_t seed_ = 51,
                   uint32_t nclusters = 24)
      : seed(seed_) {
    corpus = make_corpus({.ndocs = ndocs, .vocab_size = ndocs * 2, .seed = seed_});
    docs = encode_corpus(corpus, dim, seed_);
    index = build_index(docs, small_config(dim, seed_, nclusters));
  }

  QueryEmbeddings query(const std::string& text, const std::string& id = "q") const {
    return embed_query({id, text}, index.dim(), seed);
  }

  QueryEmbeddings query_from_doc(size_t ord, uint64_t pick_seed) const {
    Rng rng(pick_seed);
    std::vector<std::string> toks = tokenize(corpus[ord].text);
    std::string text;
    for (int i = 0; i < 3; ++i) {
      if (!text.empty()) text += ' ';
      text += toks[rng.next_below(toks.size())];
    }
    return query(text, "q" + std::to_string(pick_seed));
  }
};

}  // namespace

TEST_CASE("exact_score: single matching token scores 1") {
  // One doc whose single token decompresses exactly onto the query token.
  std::vector<float> v(8);
  Rng rng(2);
  rng.fill_unit_vector(v);
  TokenMatrix m;
  m.doc_id = "only";
  m.dim = 8;
  m.data = v;
  CompressedIndex index = build_index({m}, small_config(8, 2, 1, 8));

  QueryEmbeddings q;
  q.query_id = "q";
  q.dim = 8;
  std::vector<std::vector<float>> rows = decompress_doc(index, 0);
  q.data.assign(rows[0].begin(), rows[0].end());
  CHECK(exact_score(q, 0, index) == doctest::Approx(1.0).epsilon(1e-6));
}

TEST_CASE("exact_score: equals the dense-matrix oracle") {
  Fixture fx(40, 8, 3, 8);
  for (uint64_t s = 0; s < 10; ++s) {
    QueryEmbeddings q = fx.query_from_doc(s % fx.index.doc_count(), 100 + s);
    size_t ord = (s * 7) % fx.index.doc_count();
    double got = exact_score(q, ord, fx.index);
    double want = maxsim_dense(query_rows(q), decompress_doc(fx.index, ord));
    CHECK(got == doctest::Approx(want).epsilon(1e-6));
  }
}

TEST_CASE("exact_score: permutation of document tokens changes nothing") {
  Fixture fx(30, 8, 4, 8);
  QueryEmbeddings q = fx.query_from_doc(0, 9);

  TokenMatrix orig = fx.docs[0];
  std::vector<size_t> perm(orig.rows());
  std::iota(perm.begin(), perm.end(), size_t(0));
  Rng rng(5);
  rng.shuffle(perm);
  TokenMatrix shuffled = orig;
  for (size_t j = 0; j < perm.size(); ++j) {
    std::copy(orig.row(perm[j]).begin(), orig.row(perm[j]).end(),
              shuffled.data.begin() + long(j * shuffled.dim));
    if (!shuffled.token_ids.empty()) shuffled.token_ids[j] = orig.token_ids[perm[j]];
  }

  std::vector<TokenMatrix> pair = {orig, shuffled};
  pair[0].doc_id = "orig";
  pair[1].doc_id = "perm";
  CompressedIndex index = build_index(pair, small_config(8, 4, 4, 8));
  CHECK(exact_score(q, 0, index) == doctest::Approx(exact_score(q, 1, index)).epsilon(1e-9));
}

TEST_CASE("exact_score: additive over query tokens") {
  Fixture fx(30, 8, 44, 8);
  QueryEmbeddings whole = fx.query_from_doc(2, 19);
  REQUIRE(whole.rows() >= 2);
  for (size_t ord : {size_t(0), size_t(7), size_t(15)}) {
    double sum_parts = 0.0;
    for (size_t i = 0; i < whole.rows(); ++i) {
      QueryEmbeddings part;
      part.query_id = "part";
      part.dim = whole.dim;
      part.data.assign(whole.row(i).begin(), whole.row(i).end());
      sum_parts += exact_score(part, ord, fx.index);
    }
    CHECK(exact_score(whole, ord, fx.index) == doctest::Approx(sum_parts).epsilon(1e-9));
  }
}

TEST_CASE("generate_candidates: full probe reaches every document") {
  Fixture fx;
  QueryEmbeddings q = fx.query_from_doc(3, 1);
  CandidateSet cands = generate_candidates(q, fx.index, fx.index.nclusters());
  CHECK(cands.docs.size() == fx.index.doc_count());
  CHECK(cands.centroids.size() == fx.index.nclusters());
}

TEST_CASE("generate_candidates: single token at a centroid probes its ivf list") {
  Fixture fx;
  uint32_t c = 0;
  while (fx.index.ivf(c).empty()) ++c;

  QueryEmbeddings q;
  q.query_id = "centroid";
  q.dim = fx.index.dim();
  q.data.assign(fx.index.codebook().centroid(c).begin(), fx.index.codebook().centroid(c).end());

  CandidateSet cands = generate_candidates(q, fx.index, 1);
  REQUIRE(cands.centroids.size() == 1);
  CHECK(cands.centroids[0] == c);
  CHECK(cands.docs == fx.index.ivf(c));
}

TEST_CASE("generate_candidates: monotone in nprobe over random queries") {
  Fixture fx;
  for (uint64_t s = 0; s < 50; ++s) {
    QueryEmbeddings q = fx.query_from_doc(s % fx.index.doc_count(), 200 + s);
    std::vector<uint32_t> prev_docs;
    for (uint32_t nprobe : {1u, 2u, 4u, 8u}) {
      CandidateSet cands = generate_candidates(q, fx.index, nprobe);
      CHECK(std::includes(cands.docs.begin(), cands.docs.end(), prev_docs.begin(),
                          prev_docs.end()));
      prev_docs = cands.docs;
    }
  }
}

TEST_CASE("prune_centroids: threshold edges and brute-force equality") {
  Fixture fx;
  QueryEmbeddings q = fx.query_from_doc(7, 77);
  std::vector<uint32_t> all(fx.index.nclusters());
  std::iota(all.begin(), all.end(), 0u);

  CHECK(prune_centroids(q, fx.index, all, -1.0f) == all);
  CHECK(prune_centroids(q, fx.index, all, 1.0f + 1e-5f).empty());

  std::vector<uint32_t> got = prune_centroids(q, fx.index, all, 0.45f);
  std::vector<uint32_t> want;
  for (uint32_t c : all) {
    float best = -2.f;
    for (size_t i = 0; i < q.rows(); ++i)
      best = std::max(best, dot_f32(q.row(i), fx.index.codebook().centroid(c)));
    if (best >= 0.45f) want.push_back(c);
  }
  CHECK(got == want);
}

TEST_CASE("prune_centroids: monotone in t_cs") {
  Fixture fx;
  std::vector<uint32_t> all(fx.index.nclusters());
  std::iota(all.begin(), all.end(), 0u);
  for (uint64_t s = 0; s < 20; ++s) {
    QueryEmbeddings q = fx.query_from_doc(s % fx.index.doc_count(), 300 + s);
    std::vector<uint32_t> prev = prune_centroids(q, fx.index, all, 0.3f);
    for (float t : {0.4f, 0.45f, 0.5f, 0.6f}) {
      std::vector<uint32_t> cur = prune_centroids(q, fx.index, all, t);
      CHECK(std::includes(prev.begin(), prev.end(), cur.begin(), cur.end()));
      prev = cur;
    }
  }
}

TEST_CASE("approx_score: pruned-away documents score zero") {
  Fixture fx;
  QueryEmbeddings q = fx.query_from_doc(11, 4);
  CHECK(approx_score(q, 0, {}, fx.index) == 0.0);

  // prune exactly the centroids of doc 0
  std::vector<uint32_t> survivors;
  const auto& doc0 = fx.index.doc_centroids(0);
  for (uint32_t c = 0; c < fx.index.nclusters(); ++c)
    if (!std::binary_search(doc0.begin(), doc0.end(), c)) survivors.push_back(c);
  CHECK(approx_score(q, 0, survivors, fx.index) == 0.0);
}

TEST_CASE("approx_score: equals exact score for centroid-exact documents") {
  // One-token docs placed exactly on trained centroids: the centroid
  // interaction and the decompressed interaction coincide (zero residuals).
  Fixture base(60, 8, 6, 8);
  std::vector<TokenMatrix> docs;
  for (uint32_t c = 0; c < base.index.nclusters(); ++c) {
    TokenMatrix m;
    m.doc_id = "c" + std::to_string(c);
    m.dim = 8;
    m.data.assign(base.index.codebook().centroid(c).begin(),
                  base.index.codebook().centroid(c).end());
    docs.push_back(std::move(m));
  }
  IndexConfig cfg = small_config(8, 6, base.index.nclusters(), 8);
  cfg.scale_nclusters = false;
  CompressedIndex index = build_index(docs, cfg);

  QueryEmbeddings q = base.query_from_doc(2, 8);
  std::vector<uint32_t> all(index.nclusters());
  std::iota(all.begin(), all.end(), 0u);
  for (size_t ord = 0; ord < index.doc_count(); ++ord) {
    double approx = approx_score(q, ord, all, index);
    double exact = exact_score(q, ord, index);
    CHECK(approx == doctest::Approx(exact).epsilon(1e-4));
  }
}

TEST_CASE("approx_score: equals a dense oracle over the doc's centroid set") {
  Fixture fx;
  for (uint64_t s = 0; s < 10; ++s) {
    QueryEmbeddings q = fx.query_from_doc((3 * s) % fx.index.doc_count(), 400 + s);
    std::vector<uint32_t> all(fx.index.nclusters());
    std::iota(all.begin(), all.end(), 0u);
    std::vector<uint32_t> survivors = prune_centroids(q, fx.index, all, 0.3f);

    size_t ord = (5 * s) % fx.index.doc_count();
    std::set<uint32_t> surv_set(survivors.begin(), survivors.end());
    double want = 0.0;
    for (size_t i = 0; i < q.rows(); ++i) {
      double best = 0.0;
      bool any = false;
      for (uint32_t c : fx.index.doc_centroids(ord)) {
        if (!surv_set.count(c)) continue;
        double d = double(dot_f32(q.row(i), fx.index.codebook().centroid(c)));
        if (!any || d > best) best = d;
        any = true;
      }
      if (any) want += best;
    }
    CHECK(approx_score(q, ord, survivors, fx.index) == doctest::Approx(want).epsilon(1e-9));
  }
}

TEST_CASE("plaid_search: unfiltered parameters reproduce exhaustive search") {
  Fixture fx(120, 16, 9, 16);
  for (uint64_t s = 0; s < 8; ++s) {
    QueryEmbeddings q = fx.query_from_doc(s % fx.index.doc_count(), 500 + s);
    uint32_t n = uint32_t(fx.index.doc_count());
    SearchParams params{fx.index.nclusters(), -1.0f, 4 * n, n};
    RankedList plaid = plaid_search(q, fx.index, params);
    RankedList exact = exhaustive_search(q, fx.index, n);
    REQUIRE(plaid.entries.size() == exact.entries.size());
    for (size_t i = 0; i < plaid.entries.size(); ++i) {
      CHECK(plaid.entries[i].doc_id == exact.entries[i].doc_id);
      CHECK(plaid.entries[i].score == doctest::Approx(exact.entries[i].score).epsilon(1e-5));
    }
  }
}

TEST_CASE("plaid presets match the published operating points") {
  SearchParams a = plaid_preset('a');
  CHECK(a.nprobe == 1);
  CHECK(a.t_cs == doctest::Approx(0.50));
  CHECK(a.ndocs == 256);
  SearchParams b = plaid_preset('b');
  CHECK(b.nprobe == 2);
  CHECK(b.t_cs == doctest::Approx(0.45));
  CHECK(b.ndocs == 1024);
  SearchParams c = plaid_preset('c');
  CHECK(c.nprobe == 4);
  CHECK(c.t_cs == doctest::Approx(0.40));
  CHECK(c.ndocs == 4096);
  CHECK(a.k == 1000);
  CHECK_THROWS_AS(plaid_preset('z'), Error);
}

TEST_CASE("plaid_search: RBO against exhaustive is non-decreasing in ndocs") {
  Fixture fx(300, 16, 10, 32);
  std::vector<QueryEmbeddings> queries;
  for (uint64_t s = 0; s < 12; ++s)
    queries.push_back(fx.query_from_doc(s % fx.index.doc_count(), 600 + s));

  double prev = -1.0;
  for (uint32_t ndocs : {64u, 256u, 1024u}) {
    double total = 0.0;
    for (const auto& q : queries) {
      SearchParams params{4, 0.3f, ndocs, 100};
      RankedList approx = plaid_search(q, fx.index, params);
      RankedList exact = exhaustive_search(q, fx.index, 100);
      total += rbo_ext(approx, exact, 0.99);
    }
    double mean = total / double(queries.size());
    CHECK(mean >= prev - 1e-9);
    prev = mean;
  }
}

TEST_CASE("plaid_search: stage safety, determinism, short-k behavior") {
  Fixture fx;
  QueryEmbeddings q = fx.query_from_doc(5, 13);
  SearchParams params{2, 0.4f, 8, 6};

  RankedList once = plaid_search(q, fx.index, params);
  RankedList twice = plaid_search(q, fx.index, params);
  CHECK(same_ranking(once, twice, 0.0));

  CandidateSet cands = generate_candidates(q, fx.index, params.nprobe);
  std::set<std::string> cand_ids;
  for (uint32_t ord : cands.docs) cand_ids.insert(fx.index.doc_id(ord));
  for (const auto& e : once.entries) CHECK(cand_ids.count(e.doc_id) == 1);

  // ndocs caps the rescored set: k beyond it yields a shorter list
  SearchParams tiny{fx.index.nclusters(), -1.0f, 4, 1000};
  RankedList few = plaid_search(q, fx.index, tiny);
  CHECK(few.entries.size() == 4);

  for (size_t i = 1; i < once.entries.size(); ++i)
    CHECK(once.entries[i - 1].score >= once.entries[i].score);
}

TEST_CASE("exhaustive_search: every document exactly once when k >= N") {
  Fixture fx(25, 8, 14, 8);
  QueryEmbeddings q = fx.query_from_doc(0, 15);
  RankedList all = exhaustive_search(q, fx.index, 1000);
  CHECK(all.entries.size() == fx.index.doc_count());
  std::set<std::string> ids;
  for (const auto& e : all.entries) ids.insert(e.doc_id);
  CHECK(ids.size() == fx.index.doc_count());
}

TEST_CASE("exhaustive_search: one-doc corpus puts it at rank 1") {
  std::vector<TokenMatrix> docs(1);
  docs[0].doc_id = "lonely";
  docs[0].dim = 8;
  docs[0].data.resize(8);
  Rng rng(20);
  rng.fill_unit_vector(docs[0].data);
  CompressedIndex index = build_index(docs, small_config(8, 20, 1));

  QueryEmbeddings q;
  q.query_id = "q";
  q.dim = 8;
  q.data.resize(8);
  rng.fill_unit_vector(q.data);
  RankedList r = exhaustive_search(q, index, 5);
  REQUIRE(r.entries.size() == 1);
  CHECK(r.entries[0].doc_id == "lonely");
}

TEST_CASE("exhaustive_search: matches an independent dense scorer") {
  Fixture fx(200, 8, 16, 16);
  for (uint64_t s = 0; s < 5; ++s) {
    QueryEmbeddings q = fx.query_from_doc((11 * s) % fx.index.doc_count(), 700 + s);
    RankedList got = exhaustive_search(q, fx.index, 20);

    // from-scratch scorer outside the index search path
    std::vector<std::pair<double, std::string>> scored;
    for (size_t ord = 0; ord < fx.index.doc_count(); ++ord)
      scored.emplace_back(maxsim_dense(query_rows(q), decompress_doc(fx.index, ord)),
                          fx.index.doc_id(ord));
    std::sort(scored.begin(), scored.end(), [](const auto& a, const auto& b) {
      if (a.first != b.first) return a.first > b.first;
      return a.second < b.second;
    });
    REQUIRE(got.entries.size() == 20);
    for (size_t i = 0; i < got.entries.size(); ++i) {
      CHECK(got.entries[i].doc_id == scored[i].second);
      CHECK(got.entries[i].score == doctest::Approx(scored[i].first).epsilon(1e-5));
    }
  }
}

TEST_CASE("concurrent searches over one immutable index agree with serial runs") {
  Fixture fx(80, 16, 52, 16);
  std::vector<QueryEmbeddings> queries;
  for (uint64_t s = 0; s < 8; ++s)
    queries.push_back(fx.query_from_doc(s % fx.index.doc_count(), 800 + s));

  std::vector<RankedList> serial;
  for (const auto& q : queries) serial.push_back(plaid_search(q, fx.index, {2, 0.4f, 32, 10}));

  std::vector<RankedList> parallel(queries.size());
  std::vector<std::thread> workers;
  for (size_t t = 0; t < 4; ++t) {
    workers.emplace_back([&, t] {
      for (size_t i = t; i < queries.size(); i += 4)
        parallel[i] = plaid_search(queries[i], fx.index, {2, 0.4f, 32, 10});
    });
  }
  for (auto& w : workers) w.join();
  for (size_t i = 0; i < queries.size(); ++i) CHECK(same_ranking(serial[i], parallel[i], 0.0));
}

TEST_CASE("search params validation") {
  SearchParams p;
  p.nprobe = 0;
  CHECK_THROWS_AS(p.validate(), Error);
  p = {};
  p.ndocs = 3;
  CHECK_THROWS_AS(p.validate(), Error);
  p = {};
  p.k = 0;
  CHECK_THROWS_AS(p.validate(), Error);

  Fixture fx(10, 8, 30, 4);
  QueryEmbeddings q;
  q.query_id = "empty";
  q.dim = 8;
  CHECK_THROWS_AS(exhaustive_search(q, fx.index, 5), Error);
}
