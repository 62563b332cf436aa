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

#include <array>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "eval.hpp"
#include "lexical.hpp"
#include "plaid.hpp"
#include "rerank.hpp"

namespace latte {

// ---- latency measurement ----

struct LatencyStats {
  double mean_ms = 0.0;
  double p50_ms = 0.0;
  double p95_ms = 0.0;
  size_t samples = 0;
  double pass_variance = 0.0;  // variance of per-pass means (repeats > 1)
};

// Runs run_query(i) for i in [0, warmup) untimed, then `repeats` timed
// passes over [warmup, num_queries). The monotonic clock wraps only the
// call itself; whatever the closure does to prepare inputs is on the
// caller. Errors when no queries remain after the warmup filter.
LatencyStats time_queries(const std::function<void(size_t)>& run_query, size_t num_queries,
                          uint32_t warmup = 3, uint32_t repeats = 1);

// ---- Pareto frontier ----

// Indices of points not dominated by any other: kept iff no other point has
// (cost <=, value >=) with at least one strict. Output sorted by cost
// ascending (value descending within ties).
std::vector<size_t> pareto_indices(std::span<const std::pair<double, double>> points);

struct SweepPoint {
  std::string engine;
  std::string label;
  // Fixed CSV parameter columns; empty string when not applicable.
  std::vector<std::pair<std::string, std::string>> params;
  double ms_q = 0.0;
  std::vector<std::pair<std::string, double>> measures;  // includes "rbo"

  double measure(const std::string& name) const;
};

std::vector<SweepPoint> pareto_frontier(std::span<const SweepPoint> points,
                                        const std::string& measure_key);

// ---- cluster analyses ----

// One direction of the cluster/token majority analysis. For the token
// direction, groups are clusters and members are tokens; for the cluster
// direction it is the reverse.
struct ClusterStats {
  std::vector<uint32_t> group_ids;
  std::vector<uint64_t> group_sizes;
  std::vector<uint32_t> majority_ids;
  std::vector<uint64_t> majority_counts;
  std::vector<double> proportions;            // majority_count / group_size
  std::array<uint64_t, 20> histogram{};       // 0.05-wide bins over (0, 1]
};

// Requires an index built with token ids retained.
ClusterStats majority_token_proportion(const CompressedIndex& index);
ClusterStats majority_cluster_proportion(const CompressedIndex& index);

std::string cluster_stats_csv(const ClusterStats& stats, const std::string& group_col,
                              const std::string& majority_col);
std::string histogram_csv(const ClusterStats& stats);

// Per-cluster top-token listing for the clusters a query would probe.
// Token vectors come from the synthetic encoder keyed by `seed`; `vocab`
// (optional) labels token ids with their strings.
std::string cluster_report(const CompressedIndex& index, std::string_view query_text,
                           uint32_t nprobe, uint64_t seed,
                           const std::vector<std::string>* vocab);

// ---- experiment orchestration ----

// Everything an engine needs to answer queries, plus the evaluation inputs.
struct BenchContext {
  CompressedIndex index;
  std::optional<LexicalIndex> lexical;
  std::optional<ProximityGraph> graph;
  std::vector<QueryEmbeddings> queries;
  Qrels qrels;
  bool has_qrels = false;
  std::vector<MeasureSpec> measures;
  uint32_t k = 1000;
  Run reference;  // exhaustive top-k, the RBO baseline
  std::vector<std::string> vocab;
  uint64_t seed = 0;
  bool synthetic = false;
};

// Builds (or loads) every artifact named by a JSON experiment config; see
// the README for the schema. Computes the exhaustive reference run.
BenchContext prepare_context(const std::string& config_json);

// Reads queries.jsonl and resolves one QueryEmbeddings per query, either
// through the synthetic encoder ({"source":"synthetic","seed":N}) or a
// token-embedding file keyed by query_id ({"source":"file","path":...}).
std::vector<QueryEmbeddings> load_query_embeddings(const std::string& queries_jsonl,
                                                   const std::string& embed_json,
                                                   uint32_t index_dim);

struct EngineSpec {
  std::string engine;  // plaid | rerank | ladr | exhaustive
  std::string label;
  SearchParams plaid_params;
  RerankParams rerank_params;
  LadrParams ladr_params;
};

// entry_json: {"engine":"plaid","preset":"a"} or explicit parameters.
EngineSpec parse_engine_spec(const std::string& entry_json, uint32_t default_k);

RankedList run_engine(const EngineSpec& spec, const BenchContext& ctx,
                      const QueryEmbeddings& q);
Run run_engine_all(const EngineSpec& spec, const BenchContext& ctx);

struct SweepOptions {
  std::vector<std::string> engines = {"plaid", "rerank", "ladr"};
  std::vector<uint32_t> plaid_nprobe = {1, 2, 4, 8};
  std::vector<float> plaid_t_cs = {0.3f, 0.4f, 0.45f, 0.5f, 0.6f};
  std::vector<uint32_t> plaid_ndocs = {256, 1024, 4096, 8192};
  std::vector<uint32_t> rerank_n = {200, 500, 1000, 2000, 5000, 10000};
  std::vector<uint32_t> ladr_n0 = {100, 500, 1000};
  std::vector<uint32_t> ladr_k_neighbors = {64, 128};
  std::vector<uint32_t> ladr_c = {10, 20, 50};
  uint32_t warmup = 3;
  uint32_t repeats = 1;
  std::vector<std::string> pareto_measures = {"rbo"};
};

// Full cartesian product per engine; one SweepPoint per combination. A
// failing point aborts with its parameter record in the error message.
std::vector<SweepPoint> grid_sweep(const BenchContext& ctx, const SweepOptions& options);

std::string sweep_csv(std::span<const SweepPoint> points,
                      std::span<const std::string> measure_labels);

// End-to-end driver: builds the context, runs every configured engine into
// out_dir/runs + out_dir/reports, then the optional sweep (out_dir/sweeps)
// and cluster analyses (out_dir/analysis).
void run_experiment(const std::string& config_json, const std::string& out_dir);

// The sweep-only subset of run_experiment.
void run_sweep_command(const std::string& config_json, const std::string& out_dir);

}  // namespace latte
