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

#include "plaid.hpp"

namespace latte {

// Graded relevance assessments keyed by (query_id, doc_id).
struct Qrels {
  std::unordered_map<std::string, std::unordered_map<std::string, int>> grades;

  bool has_query(const std::string& query_id) const {
    return grades.find(query_id) != grades.end();
  }

  int grade(const std::string& query_id, const std::string& doc_id) const;

  // Number of docs judged >= min_rel for a query.
  size_t relevant_count(const std::string& query_id, int min_rel) const;
};

struct Run {
  std::string tag = "latte";
  std::vector<RankedList> lists;
};

// 1/rank of the first doc graded >= min_rel within the top k, else 0.
// Queries absent from the qrels score 0.
double rr_at_k(const RankedList& ranked, const Qrels& qrels, uint32_t k = 10, int min_rel = 1);

// Linear-gain nDCG: DCG = sum grade_i / log2(i+1); ideal ranking over all
// judged docs. Returns 0 when the query has no positive judgments.
double ndcg_at_k(const RankedList& ranked, const Qrels& qrels, uint32_t k);

// Fraction of docs judged >= min_rel retrieved in the top k. Empty when the
// query has no such docs (the caller skips it from means).
std::optional<double> recall_at_k(const RankedList& ranked, const Qrels& qrels, uint32_t k,
                                  int min_rel = 1);

// Extrapolated rank-biased overlap. Both rankings are truncated to the
// shorter length d; RBO = (1-p) * sum_i p^(i-1) A_i + A_d p^d. Identical
// rankings return exactly 1.0.
double rbo_ext(std::span<const std::string> s, std::span<const std::string> t, double p);

// Convenience over RankedList doc ids.
double rbo_ext(const RankedList& s, const RankedList& t, double p);

// TREC qrels: "qid 0 docid grade". Duplicate (qid, docid) pairs keep the
// last grade; a note per duplicate is appended to warnings when given.
Qrels read_qrels(const std::string& path, std::vector<std::string>* warnings = nullptr);

// TREC run: "qid Q0 docid rank score tag".
Run read_run(const std::string& path);
void write_run(const Run& run, const std::string& path);
std::string format_run(const Run& run);

struct MeasureSpec {
  enum class Kind { RR, NDCG, Recall };
  Kind kind = Kind::RR;
  uint32_t depth = 10;
  int min_rel = 1;
  std::string label;

  // "rr@10", "ndcg@1k", "r@1k", "recall@100", optional ":<min_rel>" suffix
  // on rr/r, e.g. "r@1k:2".
  static MeasureSpec parse(std::string_view spec);
};

// Per-query values (NaN marks a skipped query) plus per-column means over
// the evaluated queries.
struct EvalReport {
  std::vector<std::string> query_ids;
  std::vector<std::string> columns;
  std::vector<std::vector<double>> values;  // [query][column]
  std::vector<double> means;                // [column]
  std::vector<size_t> evaluated;            // [column] queries contributing to the mean
  size_t unjudged_queries = 0;

  void add_column(const std::string& label, std::vector<double> per_query);
  double mean_of(const std::string& label) const;
};

EvalReport evaluate_run(const Run& run, const Qrels& qrels,
                        std::span<const MeasureSpec> measures);

// JSON-lines: a meta object, one object per query, then a mean object.
std::string report_jsonl(const EvalReport& report, const std::string& tag);

}  // namespace latte
