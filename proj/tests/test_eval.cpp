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

#include <cmath>

#include "binio.hpp"
#include "eval.hpp"
#include "support/oracles.hpp"
#include "support/util.hpp"

using namespace latte;
using namespace latte::test;

namespace {

RankedList ranked(const std::string& qid, std::vector<std::string> docs) {
  RankedList r;
  r.query_id = qid;
  double score = double(docs.size());
  for (auto& d : docs) r.entries.push_back({d, score--});
  return r;
}

Qrels qrels_of(const std::string& qid,
               std::vector<std::pair<std::string, int>> grades) {
  Qrels q;
  for (auto& [doc, g] : grades) q.grades[qid][doc] = g;
  return q;
}

}  // namespace

TEST_CASE("rr_at_k: rank positions and cutoff") {
  Qrels q = qrels_of("q", {{"rel", 1}});
  CHECK(rr_at_k(ranked("q", {"rel", "x"}), q, 10) == 1.0);
  CHECK(rr_at_k(ranked("q", {"a", "b", "rel"}), q, 10) == doctest::Approx(1.0 / 3));
  // relevant only at rank 11 with k=10
  std::vector<std::string> docs;
  for (int i = 0; i < 10; ++i) docs.push_back("d" + std::to_string(i));
  docs.push_back("rel");
  CHECK(rr_at_k(ranked("q", docs), q, 10) == 0.0);
  // query absent from qrels scores 0
  CHECK(rr_at_k(ranked("other", {"rel"}), q, 10) == 0.0);
}

TEST_CASE("ndcg_at_k: hand cases") {
  SUBCASE("single judged doc at rank 1") {
    Qrels q = qrels_of("q", {{"d", 1}});
    CHECK(ndcg_at_k(ranked("q", {"d"}), q, 10) == doctest::Approx(1.0));
  }
  SUBCASE("grades [0,1] returned low-first") {
    Qrels q = qrels_of("q", {{"lo", 0}, {"hi", 1}});
    double got = ndcg_at_k(ranked("q", {"lo", "hi"}), q, 10);
    CHECK(got == doctest::Approx(1.0 / std::log2(3.0)).epsilon(1e-4));
    CHECK(got == doctest::Approx(0.6309).epsilon(1e-3));
  }
  SUBCASE("no judged docs yields 0") {
    Qrels q;
    CHECK(ndcg_at_k(ranked("q", {"a", "b"}), q, 10) == 0.0);
    Qrels zeros = qrels_of("q", {{"a", 0}});
    CHECK(ndcg_at_k(ranked("q", {"a"}), zeros, 10) == 0.0);
  }
}

TEST_CASE("recall_at_k: thresholds and skips") {
  SUBCASE("all relevant retrieved") {
    Qrels q = qrels_of("q", {{"a", 1}, {"b", 1}, {"c", 1}});
    auto r = recall_at_k(ranked("q", {"a", "b", "c", "d"}), q, 10, 1);
    REQUIRE(r.has_value());
    CHECK(*r == 1.0);
  }
  SUBCASE("half retrieved") {
    Qrels q = qrels_of("q", {{"a", 1}, {"z", 1}});
    auto r = recall_at_k(ranked("q", {"a", "b"}), q, 10, 1);
    REQUIRE(r.has_value());
    CHECK(*r == 0.5);
  }
  SUBCASE("min_rel threshold excludes low grades") {
    Qrels q = qrels_of("q", {{"d1", 1}, {"d2", 2}});
    auto r = recall_at_k(ranked("q", {"d1"}), q, 10, 2);
    REQUIRE(r.has_value());
    CHECK(*r == 0.0);  // only d2 counts and it was missed
  }
  SUBCASE("no docs at min_rel -> skipped") {
    Qrels q = qrels_of("q", {{"d1", 1}});
    CHECK_FALSE(recall_at_k(ranked("q", {"d1"}), q, 10, 2).has_value());
  }
}

TEST_CASE("rbo_ext: hand-evaluated cases") {
  std::vector<std::string> ab = {"a", "b"};
  std::vector<std::string> ba = {"b", "a"};
  std::vector<std::string> cd = {"c", "d"};

  CHECK(rbo_ext(ab, ab, 0.99) == 1.0);  // exactly
  CHECK(rbo_ext(ab, cd, 0.9) == 0.0);
  CHECK(rbo_ext(ab, ba, 0.5) == doctest::Approx(0.5).epsilon(1e-12));

  // identical long rankings are exactly 1.0 too
  std::vector<std::string> longlist;
  for (int i = 0; i < 500; ++i) longlist.push_back("d" + std::to_string(i));
  CHECK(rbo_ext(longlist, longlist, 0.99) == 1.0);

  CHECK_THROWS_AS(rbo_ext({}, ab, 0.5), Error);
  CHECK_THROWS_AS(rbo_ext(ab, ab, 1.0), Error);
  CHECK_THROWS_AS(rbo_ext(ab, ab, 0.0), Error);
}

TEST_CASE("rbo_ext: symmetry, truncation, and prefix-append monotonicity") {
  Rng rng(505);
  for (int trial = 0; trial < 40; ++trial) {
    // random permutations over a small doc universe, uneven lengths
    std::vector<std::string> universe;
    for (int i = 0; i < 20; ++i) universe.push_back("u" + std::to_string(i));
    std::vector<std::string> s = universe, t = universe;
    rng.shuffle(s);
    rng.shuffle(t);
    s.resize(5 + rng.next_below(15));
    t.resize(5 + rng.next_below(15));

    double p = 0.5 + 0.4 * rng.next_double();
    double st = rbo_ext(s, t, p);
    CHECK(st == doctest::Approx(rbo_ext(t, s, p)).epsilon(1e-12));
    CHECK(st >= 0.0);
    CHECK(st <= 1.0 + 1e-12);

    // matches the straight-from-the-definition oracle after truncation
    size_t d = std::min(s.size(), t.size());
    std::vector<std::string> s_cut(s.begin(), s.begin() + long(d));
    std::vector<std::string> t_cut(t.begin(), t.begin() + long(d));
    CHECK(st == doctest::Approx(rbo_direct(s_cut, t_cut, p)).epsilon(1e-9));

    // appending the same unseen item to both never decreases the value
    std::vector<std::string> s2 = s_cut, t2 = t_cut;
    s2.push_back("fresh");
    t2.push_back("fresh");
    CHECK(rbo_ext(s2, t2, p) >= st - 1e-12);
  }
}

TEST_CASE("ndcg: invariant to relabeling doc_ids") {
  Rng rng(606);
  for (int trial = 0; trial < 25; ++trial) {
    size_t ndocs = 4 + rng.next_below(12);
    Qrels q;
    std::vector<std::string> order;
    for (size_t i = 0; i < ndocs; ++i) {
      order.push_back("d" + std::to_string(i));
      if (rng.next_below(2)) q.grades["z"][order.back()] = int(rng.next_below(4));
    }
    rng.shuffle(order);
    RankedList list = ranked("z", order);

    // rename every doc consistently in both the run and the qrels
    Qrels q2;
    for (auto& [doc, g] : q.grades["z"]) q2.grades["z"]["renamed_" + doc] = g;
    RankedList list2 = list;
    for (auto& e : list2.entries) e.doc_id = "renamed_" + e.doc_id;

    uint32_t k = 1 + uint32_t(rng.next_below(8));
    CHECK(ndcg_at_k(list, q, k) == doctest::Approx(ndcg_at_k(list2, q2, k)).epsilon(1e-12));
  }
}

TEST_CASE("qrels parsing: grades, duplicates, malformed lines") {
  TempDir tmp;
  write_file(tmp.path("q.txt"), "q1 0 d7 2\nq1 0 d8 0\nq2 0 d7 1\n");
  Qrels q = read_qrels(tmp.path("q.txt"));
  CHECK(q.grade("q1", "d7") == 2);
  CHECK(q.grade("q1", "d8") == 0);
  CHECK(q.grade("q2", "d7") == 1);
  CHECK(q.grade("q2", "nope") == 0);
  CHECK(q.relevant_count("q1", 1) == 1);

  write_file(tmp.path("dup.txt"), "q1 0 d7 2\nq1 0 d7 3\n");
  std::vector<std::string> warnings;
  Qrels dup = read_qrels(tmp.path("dup.txt"), &warnings);
  CHECK(dup.grade("q1", "d7") == 3);  // last wins
  CHECK(warnings.size() == 1);

  write_file(tmp.path("bad.txt"), "q1 0 d7\n");
  CHECK_THROWS_AS(read_qrels(tmp.path("bad.txt")), Error);
  write_file(tmp.path("badgrade.txt"), "q1 0 d7 x\n");
  CHECK_THROWS_AS(read_qrels(tmp.path("badgrade.txt")), Error);
}

TEST_CASE("run files: write then read is stable") {
  Run run;
  run.tag = "mytag";
  run.lists.push_back(ranked("q1", {"a", "b", "c"}));
  run.lists.push_back(ranked("q2", {"x", "y"}));
  run.lists[0].entries[0].score = 1.23456789;  // exercises %.6f rounding

  TempDir tmp;
  write_run(run, tmp.path("r.trec"));
  Run back = read_run(tmp.path("r.trec"));
  CHECK(back.tag == "mytag");
  REQUIRE(back.lists.size() == 2);
  CHECK(back.lists[0].query_id == "q1");
  CHECK(back.lists[0].entries[0].score == doctest::Approx(1.234568).epsilon(1e-9));

  // a second write of the parsed run is byte-identical
  write_run(back, tmp.path("r2.trec"));
  CHECK(read_file(tmp.path("r.trec")) == read_file(tmp.path("r2.trec")));

  write_file(tmp.path("badrank.trec"), "q1 Q0 d1 2 1.0 tag\n");
  CHECK_THROWS_AS(read_run(tmp.path("badrank.trec")), Error);
  write_file(tmp.path("dupdoc.trec"), "q1 Q0 d1 1 1.0 tag\nq1 Q0 d1 2 0.5 tag\n");
  CHECK_THROWS_AS(read_run(tmp.path("dupdoc.trec")), Error);
  write_file(tmp.path("short.trec"), "q1 Q0 d1 1 1.0\n");
  CHECK_THROWS_AS(read_run(tmp.path("short.trec")), Error);
}

TEST_CASE("measure specs parse depths, units and thresholds") {
  MeasureSpec rr = MeasureSpec::parse("rr@10");
  CHECK(rr.kind == MeasureSpec::Kind::RR);
  CHECK(rr.depth == 10);
  MeasureSpec nd = MeasureSpec::parse("ndcg@1k");
  CHECK(nd.kind == MeasureSpec::Kind::NDCG);
  CHECK(nd.depth == 1000);
  MeasureSpec rk = MeasureSpec::parse("r@1k:2");
  CHECK(rk.kind == MeasureSpec::Kind::Recall);
  CHECK(rk.depth == 1000);
  CHECK(rk.min_rel == 2);
  MeasureSpec rec = MeasureSpec::parse("recall@100");
  CHECK(rec.kind == MeasureSpec::Kind::Recall);
  CHECK(rec.depth == 100);

  CHECK_THROWS_AS(MeasureSpec::parse("rr"), Error);
  CHECK_THROWS_AS(MeasureSpec::parse("bogus@10"), Error);
  CHECK_THROWS_AS(MeasureSpec::parse("ndcg@10:2"), Error);
  CHECK_THROWS_AS(MeasureSpec::parse("rr@0"), Error);
}

TEST_CASE("evaluate_run: means, skips and perfect runs") {
  SUBCASE("perfect single-query run scores 1 on every measure") {
    Run run;
    run.lists.push_back(ranked("q", {"a", "b"}));
    Qrels q = qrels_of("q", {{"a", 1}, {"b", 1}});
    std::vector<MeasureSpec> specs = {MeasureSpec::parse("rr@10"),
                                      MeasureSpec::parse("ndcg@10"),
                                      MeasureSpec::parse("r@10")};
    EvalReport report = evaluate_run(run, q, specs);
    for (double m : report.means) CHECK(m == doctest::Approx(1.0));
  }

  SUBCASE("mean of RR 1.0 and 0.0 is 0.5") {
    Run run;
    run.lists.push_back(ranked("q1", {"rel1", "x"}));
    run.lists.push_back(ranked("q2", {"y", "z"}));
    Qrels q;
    q.grades["q1"]["rel1"] = 1;
    q.grades["q2"]["hidden"] = 1;
    std::vector<MeasureSpec> specs = {MeasureSpec::parse("rr@10")};
    EvalReport report = evaluate_run(run, q, specs);
    CHECK(report.means[0] == doctest::Approx(0.5));
  }

  SUBCASE("recall skips unjudged queries from its mean") {
    Run run;
    run.lists.push_back(ranked("q1", {"a"}));
    run.lists.push_back(ranked("q2", {"b"}));
    Qrels q = qrels_of("q1", {{"a", 1}});
    std::vector<MeasureSpec> specs = {MeasureSpec::parse("r@10")};
    EvalReport report = evaluate_run(run, q, specs);
    CHECK(report.evaluated[0] == 1);
    CHECK(report.means[0] == doctest::Approx(1.0));
    CHECK(report.unjudged_queries == 1);
    CHECK(std::isnan(report.values[1][0]));
  }
}

TEST_CASE("evaluate_run: randomized equivalence with the naive evaluator") {
  Rng rng(909);
  for (int trial = 0; trial < 200; ++trial) {
    // random universe, random grades, random ranking
    size_t ndocs = 3 + rng.next_below(20);
    std::vector<std::string> docs;
    for (size_t i = 0; i < ndocs; ++i) docs.push_back("d" + std::to_string(i));
    Qrels q;
    for (const auto& d : docs)
      if (rng.next_below(3) != 0) q.grades["qq"][d] = int(rng.next_below(4));
    std::vector<std::string> shuffled = docs;
    rng.shuffle(shuffled);
    shuffled.resize(1 + rng.next_below(ndocs));
    RankedList list = ranked("qq", shuffled);
    Run run;
    run.lists.push_back(list);

    uint32_t k = 1 + uint32_t(rng.next_below(10));
    int min_rel = 1 + int(rng.next_below(3));
    std::vector<MeasureSpec> specs = {
        MeasureSpec::parse("rr@" + std::to_string(k)),
        MeasureSpec::parse("ndcg@" + std::to_string(k)),
        MeasureSpec::parse("r@" + std::to_string(k) + ":" + std::to_string(min_rel)),
    };
    EvalReport report = evaluate_run(run, q, specs);

    CHECK(report.values[0][0] == doctest::Approx(NaiveMetrics::rr(list, q, k, 1)).epsilon(1e-12));
    CHECK(report.values[0][1] ==
          doctest::Approx(NaiveMetrics::ndcg(list, q, k)).epsilon(1e-9));
    auto [want_recall, counted] = NaiveMetrics::recall(list, q, k, min_rel);
    if (counted) {
      CHECK(report.values[0][2] == doctest::Approx(want_recall).epsilon(1e-12));
    } else {
      CHECK(std::isnan(report.values[0][2]));
    }
  }
}

TEST_CASE("report_jsonl: meta line, per-query lines, mean line") {
  Run run;
  run.lists.push_back(ranked("q1", {"a"}));
  Qrels q = qrels_of("q1", {{"a", 1}});
  std::vector<MeasureSpec> specs = {MeasureSpec::parse("rr@10")};
  EvalReport report = evaluate_run(run, q, specs);
  std::string text = report_jsonl(report, "tagx");

  size_t lines = size_t(std::count(text.begin(), text.end(), '\n'));
  CHECK(lines == 3);  // meta + q1 + mean
  CHECK(text.find("\"meta\"") != std::string::npos);
  CHECK(text.find("\"q1\"") != std::string::npos);
  CHECK(text.find("\"mean\"") != std::string::npos);
  // no rbo measure column was added; it appears only in the policy note
  size_t rbo_mentions = 0;
  for (size_t pos = text.find("\"rbo\""); pos != std::string::npos;
       pos = text.find("\"rbo\"", pos + 1))
    ++rbo_mentions;
  CHECK(rbo_mentions == 1);
}
