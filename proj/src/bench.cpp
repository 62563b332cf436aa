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

#include "bench.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <limits>
#include <numeric>
#include <unordered_map>

#include <json.hpp>

#include "binio.hpp"
#include "corpus.hpp"
#include "synthetic.hpp"
#include "tokenize.hpp"
#include "vecmath.hpp"

namespace latte {

namespace {

using nlohmann::json;

constexpr double kRboPersistence = 0.99;

std::string fmt6(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.6f", v);
  return buf;
}

std::string fmt2(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.2f", v);
  return buf;
}

// RFC 4180: quote fields containing commas, quotes or line breaks; CRLF
// row terminators.
std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\r\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += "\"\"";
    else out += c;
  }
  out += '"';
  return out;
}

std::string csv_row(const std::vector<std::string>& fields) {
  std::string out;
  for (size_t i = 0; i < fields.size(); ++i) {
    if (i) out += ',';
    out += csv_field(fields[i]);
  }
  out += "\r\n";
  return out;
}

json parse_json(const std::string& text, const char* what) {
  json obj = json::parse(text, nullptr, false);
  if (obj.is_discarded())
    throw Error(ErrorCode::Config, std::string("invalid JSON in ") + what);
  return obj;
}

}  // namespace

// ---------------------------------------------------------------- latency

LatencyStats time_queries(const std::function<void(size_t)>& run_query, size_t num_queries,
                          uint32_t warmup, uint32_t repeats) {
  if (num_queries == 0) throw Error(ErrorCode::Input, "no queries to time");
  if (num_queries <= warmup)
    throw Error(ErrorCode::Input, "no queries left after the warmup filter");
  if (repeats < 1) throw Error(ErrorCode::Config, "repeats must be >= 1");

  using clock = std::chrono::steady_clock;
  for (size_t i = 0; i < warmup; ++i) run_query(i);

  std::vector<double> samples;
  samples.reserve((num_queries - warmup) * repeats);
  std::vector<double> pass_means(repeats, 0.0);
  for (uint32_t r = 0; r < repeats; ++r) {
    double pass_sum = 0.0;
    for (size_t i = warmup; i < num_queries; ++i) {
      auto t0 = clock::now();
      run_query(i);
      auto t1 = clock::now();
      double ms = std::chrono::duration<double, std::milli>(t1 - t0).count();
      samples.push_back(ms);
      pass_sum += ms;
    }
    pass_means[r] = pass_sum / double(num_queries - warmup);
  }

  LatencyStats stats;
  stats.samples = samples.size();
  double sum = 0.0;
  for (double s : samples) sum += s;
  stats.mean_ms = sum / double(samples.size());

  std::vector<double> sorted(samples);
  std::sort(sorted.begin(), sorted.end());
  auto pct = [&](double p) {
    size_t idx = size_t(std::ceil(p * double(sorted.size())));
    return sorted[std::min(idx == 0 ? 0 : idx - 1, sorted.size() - 1)];
  };
  stats.p50_ms = pct(0.50);
  stats.p95_ms = pct(0.95);

  if (repeats > 1) {
    double mean_of_means = 0.0;
    for (double m : pass_means) mean_of_means += m;
    mean_of_means /= double(repeats);
    double var = 0.0;
    for (double m : pass_means) var += (m - mean_of_means) * (m - mean_of_means);
    stats.pass_variance = var / double(repeats - 1);
  }
  return stats;
}

// ----------------------------------------------------------------- pareto

std::vector<size_t> pareto_indices(std::span<const std::pair<double, double>> points) {
  if (points.empty()) throw Error(ErrorCode::Input, "pareto filter needs at least one point");
  std::vector<size_t> order(points.size());
  std::iota(order.begin(), order.end(), size_t(0));
  std::sort(order.begin(), order.end(), [&](size_t a, size_t b) {
    if (points[a].first != points[b].first) return points[a].first < points[b].first;
    if (points[a].second != points[b].second) return points[a].second > points[b].second;
    return a < b;
  });

  std::vector<size_t> kept;
  double best_prev = -std::numeric_limits<double>::infinity();
  size_t i = 0;
  while (i < order.size()) {
    size_t j = i;
    double cost = points[order[i]].first;
    while (j < order.size() && points[order[j]].first == cost) ++j;
    double group_best = points[order[i]].second;  // max value in the group
    if (group_best > best_prev) {
      for (size_t g = i; g < j && points[order[g]].second == group_best; ++g)
        kept.push_back(order[g]);
      best_prev = group_best;
    }
    i = j;
  }
  return kept;
}

double SweepPoint::measure(const std::string& name) const {
  for (const auto& [label, value] : measures)
    if (label == name) return value;
  throw Error(ErrorCode::Config, "sweep point has no measure named " + name);
}

std::vector<SweepPoint> pareto_frontier(std::span<const SweepPoint> points,
                                        const std::string& measure_key) {
  std::vector<std::pair<double, double>> pts;
  pts.reserve(points.size());
  for (const auto& p : points) pts.emplace_back(p.ms_q, p.measure(measure_key));
  std::vector<SweepPoint> out;
  for (size_t idx : pareto_indices(pts)) out.push_back(points[idx]);
  return out;
}

// -------------------------------------------------------- cluster analyses

namespace {

void require_token_ids(const CompressedIndex& index) {
  if (!index.has_token_ids())
    throw Error(ErrorCode::Config,
                "this index was built without token ids; rebuild it with token ids retained "
                "to run cluster analyses");
}

ClusterStats stats_from_counts(
    const std::unordered_map<uint32_t, std::unordered_map<uint32_t, uint64_t>>& counts) {
  ClusterStats stats;
  std::vector<uint32_t> groups;
  groups.reserve(counts.size());
  for (const auto& [g, members] : counts) groups.push_back(g);
  std::sort(groups.begin(), groups.end());

  for (uint32_t g : groups) {
    const auto& members = counts.at(g);
    uint64_t size = 0;
    uint64_t best_count = 0;
    uint32_t best_id = 0;
    for (const auto& [id, count] : members) {
      size += count;
      if (count > best_count || (count == best_count && id < best_id)) {
        best_count = count;
        best_id = id;
      }
    }
    double p = double(best_count) / double(size);
    stats.group_ids.push_back(g);
    stats.group_sizes.push_back(size);
    stats.majority_ids.push_back(best_id);
    stats.majority_counts.push_back(best_count);
    stats.proportions.push_back(p);
    size_t bin = std::min<size_t>(19, size_t(p / 0.05));
    ++stats.histogram[bin];
  }
  return stats;
}

}  // namespace

ClusterStats majority_token_proportion(const CompressedIndex& index) {
  require_token_ids(index);
  std::unordered_map<uint32_t, std::unordered_map<uint32_t, uint64_t>> counts;
  for (size_t ord = 0; ord < index.doc_count(); ++ord) {
    const DocRecord& doc = index.doc(ord);
    for (size_t j = 0; j < doc.ntokens(); ++j)
      ++counts[doc.centroid_ids[j]][doc.token_ids[j]];
  }
  return stats_from_counts(counts);
}

ClusterStats majority_cluster_proportion(const CompressedIndex& index) {
  require_token_ids(index);
  std::unordered_map<uint32_t, std::unordered_map<uint32_t, uint64_t>> counts;
  for (size_t ord = 0; ord < index.doc_count(); ++ord) {
    const DocRecord& doc = index.doc(ord);
    for (size_t j = 0; j < doc.ntokens(); ++j)
      ++counts[doc.token_ids[j]][doc.centroid_ids[j]];
  }
  return stats_from_counts(counts);
}

std::string cluster_stats_csv(const ClusterStats& stats, const std::string& group_col,
                              const std::string& majority_col) {
  std::string out = csv_row({group_col, "size", majority_col, "majority_count", "proportion"});
  for (size_t i = 0; i < stats.group_ids.size(); ++i) {
    out += csv_row({std::to_string(stats.group_ids[i]), std::to_string(stats.group_sizes[i]),
                    std::to_string(stats.majority_ids[i]),
                    std::to_string(stats.majority_counts[i]), fmt6(stats.proportions[i])});
  }
  return out;
}

std::string histogram_csv(const ClusterStats& stats) {
  std::string out = csv_row({"bin_lo", "bin_hi", "count"});
  for (size_t b = 0; b < stats.histogram.size(); ++b) {
    out += csv_row({fmt2(double(b) * 0.05), fmt2(double(b + 1) * 0.05),
                    std::to_string(stats.histogram[b])});
  }
  return out;
}

std::string cluster_report(const CompressedIndex& index, std::string_view query_text,
                           uint32_t nprobe, uint64_t seed,
                           const std::vector<std::string>* vocab) {
  require_token_ids(index);
  if (nprobe < 1) throw Error(ErrorCode::Config, "nprobe must be >= 1");
  nprobe = std::min(nprobe, index.nclusters());

  SyntheticEncoder enc(index.dim(), seed);
  std::vector<std::string> tokens = tokenize(query_text);

  auto token_label = [&](uint32_t id) {
    if (vocab && id < vocab->size()) return (*vocab)[id];
    return "#" + std::to_string(id);
  };

  // Probe list per token (the phase-1 rule), then per-cluster composition.
  std::string out = "query: " + std::string(query_text) + "\n";
  std::vector<uint32_t> probed;
  for (const auto& tok : tokens) {
    std::vector<float> v = enc.token_vector(tok);
    std::vector<std::pair<float, uint32_t>> sims;
    sims.reserve(index.nclusters());
    for (uint32_t c = 0; c < index.nclusters(); ++c)
      sims.emplace_back(dot_f32(std::span<const float>(v), index.codebook().centroid(c)), c);
    std::partial_sort(sims.begin(), sims.begin() + nprobe, sims.end(),
                      [](const auto& a, const auto& b) {
                        if (a.first != b.first) return a.first > b.first;
                        return a.second < b.second;
                      });
    out += "token \"" + tok + "\" -> clusters";
    for (uint32_t p = 0; p < nprobe; ++p) {
      out += (p ? ", " : " ") + std::to_string(sims[p].second);
      probed.push_back(sims[p].second);
    }
    out += "\n";
  }
  std::sort(probed.begin(), probed.end());
  probed.erase(std::unique(probed.begin(), probed.end()), probed.end());

  std::unordered_map<uint32_t, std::unordered_map<uint32_t, uint64_t>> counts;
  for (size_t ord = 0; ord < index.doc_count(); ++ord) {
    const DocRecord& doc = index.doc(ord);
    for (size_t j = 0; j < doc.ntokens(); ++j)
      ++counts[doc.centroid_ids[j]][doc.token_ids[j]];
  }

  for (uint32_t c : probed) {
    auto it = counts.find(c);
    if (it == counts.end()) {
      out += "cluster " + std::to_string(c) + " | empty\n";
      continue;
    }
    uint64_t size = 0;
    std::vector<std::pair<uint64_t, uint32_t>> members;
    for (const auto& [id, count] : it->second) {
      size += count;
      members.emplace_back(count, id);
    }
    std::sort(members.begin(), members.end(), [](const auto& a, const auto& b) {
      if (a.first != b.first) return a.first > b.first;
      return a.second < b.second;
    });
    out += "cluster " + std::to_string(c) + " | size " + std::to_string(size) + "\n";
    for (size_t i = 0; i < std::min<size_t>(10, members.size()); ++i) {
      double pct = 100.0 * double(members[i].first) / double(size);
      char buf[64];
      std::snprintf(buf, sizeof(buf), "%.1f%%", pct);
      out += "  " + token_label(members[i].second) + " " + buf + "\n";
    }
  }
  return out;
}

// ------------------------------------------------------------- experiment

std::vector<QueryEmbeddings> load_query_embeddings(const std::string& queries_jsonl,
                                                   const std::string& embed_json,
                                                   uint32_t index_dim) {
  json spec = parse_json(embed_json, "embedding options");
  std::vector<QuerySpec> specs = read_queries_jsonl(queries_jsonl);
  std::vector<QueryEmbeddings> out;
  out.reserve(specs.size());

  std::string source = spec.value("source", "synthetic");
  if (source == "synthetic") {
    if (!spec.contains("seed"))
      throw Error(ErrorCode::Config, "synthetic query embedding requires a seed");
    SyntheticEncoder enc(index_dim, spec["seed"].get<uint64_t>());
    for (const auto& s : specs) {
      QueryEmbeddings q;
      q.query_id = s.query_id;
      q.text = s.text;
      q.dim = index_dim;
      q.data = enc.encode_query_vectors(s.text);
      if (q.data.empty())
        throw Error(ErrorCode::Input, "query tokenizes to nothing: " + s.query_id);
      out.push_back(std::move(q));
    }
  } else if (source == "file") {
    if (!spec.contains("path"))
      throw Error(ErrorCode::Config, "file query embedding requires a path");
    std::vector<TokenMatrix> mats = load_embeddings(spec["path"].get<std::string>());
    std::unordered_map<std::string, const TokenMatrix*> by_id;
    for (const auto& m : mats) by_id[m.doc_id] = &m;
    for (const auto& s : specs) {
      auto it = by_id.find(s.query_id);
      if (it == by_id.end())
        throw Error(ErrorCode::Mismatch,
                    "query missing from the embedding file: " + s.query_id);
      const TokenMatrix& m = *it->second;
      if (m.dim != index_dim)
        throw Error(ErrorCode::Mismatch, "query embedding dim does not match the index");
      QueryEmbeddings q;
      q.query_id = s.query_id;
      q.text = s.text;
      q.dim = m.dim;
      q.data = m.data;
      if (q.data.empty())
        throw Error(ErrorCode::Input, "query has no token embeddings: " + s.query_id);
      out.push_back(std::move(q));
    }
  } else {
    throw Error(ErrorCode::Config, "unknown embedding source: " + source);
  }
  return out;
}

BenchContext prepare_context(const std::string& config_json) {
  json cfg = parse_json(config_json, "experiment config");
  BenchContext ctx;

  json emb = cfg.value("embeddings", json::object());
  std::string source = emb.value("source", "synthetic");
  ctx.synthetic = source == "synthetic";
  if (ctx.synthetic) {
    if (!cfg.contains("seed"))
      throw Error(ErrorCode::Config, "a seed is mandatory for synthetic pipelines");
    ctx.seed = cfg["seed"].get<uint64_t>();
  } else if (cfg.contains("seed")) {
    ctx.seed = cfg["seed"].get<uint64_t>();
  }

  // Which artifacts do the engines need?
  bool need_lexical = false, need_graph = false;
  auto scan_engines = [&](const json& engines) {
    for (const auto& e : engines) {
      std::string name = e.is_string() ? e.get<std::string>()
                                       : e.value("engine", std::string("exhaustive"));
      if (name == "rerank" || name == "ladr") need_lexical = true;
      if (name == "ladr") need_graph = true;
    }
  };
  if (cfg.contains("engines")) scan_engines(cfg["engines"]);
  if (cfg.contains("sweep")) {
    json sweep = cfg["sweep"];
    json engines = sweep.value("engines", json::array({"plaid", "rerank", "ladr"}));
    scan_engines(engines);
  }

  std::vector<CorpusDoc> corpus;
  bool corpus_loaded = false;
  auto require_corpus = [&]() -> std::vector<CorpusDoc>& {
    if (!corpus_loaded) {
      if (!cfg.contains("corpus"))
        throw Error(ErrorCode::Config, "this configuration requires a corpus path");
      corpus = read_corpus_jsonl(cfg["corpus"].get<std::string>());
      corpus_loaded = true;
    }
    return corpus;
  };

  // Embedding index: load or build.
  json index_cfg = cfg.value("index", json::object());
  if (index_cfg.contains("file")) {
    ctx.index = load_index(index_cfg["file"].get<std::string>());
  } else {
    std::vector<TokenMatrix> docs;
    uint32_t dim = 0;
    if (ctx.synthetic) {
      dim = emb.value("dim", 64u);
      SyntheticEncoder enc(dim, ctx.seed);
      for (const auto& d : require_corpus()) docs.push_back(enc.encode_doc(d.doc_id, d.text));
      ctx.vocab = enc.vocab();
    } else {
      if (!emb.contains("path"))
        throw Error(ErrorCode::Config, "embeddings.source=file requires embeddings.path");
      docs = load_embeddings(emb["path"].get<std::string>());
      if (docs.empty()) throw Error(ErrorCode::Input, "embedding file contains no documents");
      dim = docs.front().dim;
    }
    IndexConfig icfg;
    icfg.dim = dim;
    icfg.seed = ctx.seed;
    icfg.nclusters = index_cfg.value("nclusters", icfg.nclusters);
    icfg.nbits = index_cfg.value("nbits", icfg.nbits);
    icfg.kmeans_iters = index_cfg.value("kmeans_iters", icfg.kmeans_iters);
    icfg.sample_cap = index_cfg.value("sample_cap", icfg.sample_cap);
    icfg.scale_nclusters = index_cfg.value("scale_nclusters", icfg.scale_nclusters);
    ctx.index = build_index(docs, icfg);
  }

  json lex_cfg = cfg.value("lexical", json::object());
  if (lex_cfg.contains("file")) {
    ctx.lexical = load_lexical_index(lex_cfg["file"].get<std::string>());
  } else if (need_lexical) {
    Bm25Params params;
    params.k1 = lex_cfg.value("k1", params.k1);
    params.b = lex_cfg.value("b", params.b);
    ctx.lexical = build_lexical_index(require_corpus(), params);
  }

  json graph_cfg = cfg.value("graph", json::object());
  if (graph_cfg.contains("file")) {
    ctx.graph = load_graph(graph_cfg["file"].get<std::string>());
  } else if (need_graph) {
    if (!ctx.lexical) throw Error(ErrorCode::Config, "a proximity graph requires a lexical index");
    uint32_t neighbors = graph_cfg.value("neighbors", 128u);
    ctx.graph = build_proximity_graph(*ctx.lexical, require_corpus(), neighbors);
  }

  if (!cfg.contains("queries"))
    throw Error(ErrorCode::Config, "the configuration must name a queries file");
  json qemb;
  if (ctx.synthetic) {
    qemb = {{"source", "synthetic"}, {"seed", ctx.seed}};
  } else {
    qemb = {{"source", "file"},
            {"path", emb.value("queries_path", std::string())}};
    if (emb.contains("queries_path") == false)
      throw Error(ErrorCode::Config,
                  "embeddings.source=file requires embeddings.queries_path for query vectors");
  }
  ctx.queries = load_query_embeddings(cfg["queries"].get<std::string>(), qemb.dump(),
                                      ctx.index.dim());
  if (ctx.queries.empty()) throw Error(ErrorCode::Input, "no queries loaded");

  if (cfg.contains("qrels")) {
    std::vector<std::string> warnings;
    ctx.qrels = read_qrels(cfg["qrels"].get<std::string>(), &warnings);
    for (const auto& w : warnings) std::fprintf(stderr, "warning: %s\n", w.c_str());
    ctx.has_qrels = true;
  }

  ctx.k = cfg.value("k", 1000u);
  json measures = cfg.value("measures", json::array({"rr@10", "ndcg@10", "ndcg@1k", "r@1k"}));
  for (const auto& m : measures) ctx.measures.push_back(MeasureSpec::parse(m.get<std::string>()));

  ctx.reference.tag = "exhaustive";
  ctx.reference.lists.reserve(ctx.queries.size());
  for (const auto& q : ctx.queries)
    ctx.reference.lists.push_back(exhaustive_search(q, ctx.index, ctx.k));

  return ctx;
}

EngineSpec parse_engine_spec(const std::string& entry_json, uint32_t default_k) {
  json entry = parse_json(entry_json, "engine spec");
  if (entry.is_string()) entry = json{{"engine", entry.get<std::string>()}};
  EngineSpec spec;
  spec.engine = entry.value("engine", std::string());
  uint32_t k = entry.value("k", default_k);

  if (spec.engine == "plaid") {
    if (entry.contains("preset")) {
      std::string preset = entry["preset"].get<std::string>();
      if (preset.size() != 1)
        throw Error(ErrorCode::Config, "unknown plaid preset: " + preset);
      spec.plaid_params = plaid_preset(preset[0], k);
      spec.label = "plaid_" + preset;
    } else {
      spec.plaid_params.nprobe = entry.value("nprobe", spec.plaid_params.nprobe);
      spec.plaid_params.t_cs = entry.value("t_cs", spec.plaid_params.t_cs);
      spec.plaid_params.ndocs = entry.value("ndocs", spec.plaid_params.ndocs);
      spec.plaid_params.k = k;
      spec.label = "plaid_nprobe" + std::to_string(spec.plaid_params.nprobe) + "_tcs" +
                   fmt2(spec.plaid_params.t_cs) + "_ndocs" +
                   std::to_string(spec.plaid_params.ndocs);
    }
  } else if (spec.engine == "rerank") {
    spec.rerank_params.n = entry.value("n", spec.rerank_params.n);
    spec.rerank_params.k = k;
    spec.label = "rerank_n" + std::to_string(spec.rerank_params.n);
  } else if (spec.engine == "ladr") {
    spec.ladr_params.n0 = entry.value("n0", spec.ladr_params.n0);
    spec.ladr_params.k_neighbors = entry.value("k_neighbors", spec.ladr_params.k_neighbors);
    spec.ladr_params.c = entry.value("c", spec.ladr_params.c);
    spec.ladr_params.max_iters = entry.value("max_iters", spec.ladr_params.max_iters);
    spec.ladr_params.k = k;
    spec.label = "ladr_n0" + std::to_string(spec.ladr_params.n0) + "_k" +
                 std::to_string(spec.ladr_params.k_neighbors) + "_c" +
                 std::to_string(spec.ladr_params.c);
  } else if (spec.engine == "exhaustive") {
    spec.plaid_params.k = k;
    spec.label = "exhaustive";
  } else {
    throw Error(ErrorCode::Config, "unknown engine: " + spec.engine);
  }
  if (entry.contains("label")) spec.label = entry["label"].get<std::string>();
  return spec;
}

RankedList run_engine(const EngineSpec& spec, const BenchContext& ctx,
                      const QueryEmbeddings& q) {
  if (spec.engine == "plaid") return plaid_search(q, ctx.index, spec.plaid_params);
  if (spec.engine == "exhaustive") return exhaustive_search(q, ctx.index, spec.plaid_params.k);
  if (spec.engine == "rerank") {
    if (!ctx.lexical) throw Error(ErrorCode::Config, "rerank requires a lexical index");
    return rerank(q, spec.rerank_params, *ctx.lexical, ctx.index);
  }
  if (spec.engine == "ladr") {
    if (!ctx.lexical || !ctx.graph)
      throw Error(ErrorCode::Config, "ladr requires a lexical index and a proximity graph");
    return ladr_search(q, spec.ladr_params, *ctx.lexical, *ctx.graph, ctx.index);
  }
  throw Error(ErrorCode::Config, "unknown engine: " + spec.engine);
}

Run run_engine_all(const EngineSpec& spec, const BenchContext& ctx) {
  Run run;
  run.tag = spec.label;
  run.lists.reserve(ctx.queries.size());
  for (const auto& q : ctx.queries) run.lists.push_back(run_engine(spec, ctx, q));
  return run;
}

namespace {

std::vector<std::pair<std::string, std::string>> param_columns(const EngineSpec& spec) {
  std::vector<std::pair<std::string, std::string>> cols = {
      {"nprobe", ""}, {"t_cs", ""}, {"ndocs", ""}, {"n", ""},
      {"n0", ""},     {"k_neighbors", ""},         {"c", ""},
  };
  auto set = [&](const std::string& key, const std::string& value) {
    for (auto& [k, v] : cols)
      if (k == key) v = value;
  };
  if (spec.engine == "plaid") {
    set("nprobe", std::to_string(spec.plaid_params.nprobe));
    set("t_cs", fmt2(spec.plaid_params.t_cs));
    set("ndocs", std::to_string(spec.plaid_params.ndocs));
  } else if (spec.engine == "rerank") {
    set("n", std::to_string(spec.rerank_params.n));
  } else if (spec.engine == "ladr") {
    set("n0", std::to_string(spec.ladr_params.n0));
    set("k_neighbors", std::to_string(spec.ladr_params.k_neighbors));
    set("c", std::to_string(spec.ladr_params.c));
  }
  return cols;
}

SweepPoint evaluate_point(const EngineSpec& spec, const BenchContext& ctx, uint32_t warmup,
                          uint32_t repeats) {
  std::vector<RankedList> results(ctx.queries.size());
  auto fn = [&](size_t i) { results[i] = run_engine(spec, ctx, ctx.queries[i]); };
  LatencyStats lat = time_queries(fn, ctx.queries.size(), warmup, repeats);

  Run run;
  run.tag = spec.label;
  run.lists = std::move(results);

  SweepPoint point;
  point.engine = spec.engine;
  point.label = spec.label;
  point.params = param_columns(spec);
  point.ms_q = lat.mean_ms;

  if (ctx.has_qrels) {
    EvalReport report = evaluate_run(run, ctx.qrels, ctx.measures);
    for (size_t c = 0; c < report.columns.size(); ++c)
      point.measures.emplace_back(report.columns[c], report.means[c]);
  }
  double rbo_sum = 0.0;
  for (size_t i = 0; i < run.lists.size(); ++i)
    rbo_sum += rbo_ext(run.lists[i], ctx.reference.lists[i], kRboPersistence);
  point.measures.emplace_back("rbo", rbo_sum / double(run.lists.size()));
  return point;
}

}  // namespace

std::vector<SweepPoint> grid_sweep(const BenchContext& ctx, const SweepOptions& options) {
  std::vector<EngineSpec> specs;
  for (const std::string& engine : options.engines) {
    if (engine == "plaid") {
      for (uint32_t nprobe : options.plaid_nprobe)
        for (float t_cs : options.plaid_t_cs)
          for (uint32_t ndocs : options.plaid_ndocs) {
            json entry{{"engine", "plaid"}, {"nprobe", nprobe}, {"t_cs", t_cs},
                       {"ndocs", ndocs}};
            specs.push_back(parse_engine_spec(entry.dump(), ctx.k));
          }
    } else if (engine == "rerank") {
      for (uint32_t n : options.rerank_n) {
        json entry{{"engine", "rerank"}, {"n", n}};
        specs.push_back(parse_engine_spec(entry.dump(), ctx.k));
      }
    } else if (engine == "ladr") {
      for (uint32_t n0 : options.ladr_n0)
        for (uint32_t kn : options.ladr_k_neighbors)
          for (uint32_t c : options.ladr_c) {
            json entry{{"engine", "ladr"}, {"n0", n0}, {"k_neighbors", kn}, {"c", c}};
            specs.push_back(parse_engine_spec(entry.dump(), ctx.k));
          }
    } else if (engine == "exhaustive") {
      specs.push_back(parse_engine_spec(R"({"engine":"exhaustive"})", ctx.k));
    } else {
      throw Error(ErrorCode::Config, "unknown engine in sweep: " + engine);
    }
  }

  std::vector<SweepPoint> points;
  points.reserve(specs.size());
  for (const EngineSpec& spec : specs) {
    try {
      points.push_back(evaluate_point(spec, ctx, options.warmup, options.repeats));
    } catch (const Error& e) {
      throw Error(e.code(), "sweep point " + spec.label + " failed: " + e.what());
    }
  }
  return points;
}

std::string sweep_csv(std::span<const SweepPoint> points,
                      std::span<const std::string> measure_labels) {
  std::vector<std::string> header = {"engine", "nprobe", "t_cs", "ndocs",
                                     "n",      "n0",     "k_neighbors", "c", "ms_q"};
  for (const auto& m : measure_labels) header.push_back(m);
  std::string out = csv_row(header);
  for (const SweepPoint& p : points) {
    std::vector<std::string> row = {p.engine};
    for (const auto& [key, value] : p.params) row.push_back(value);
    row.push_back(fmt6(p.ms_q));
    for (const auto& m : measure_labels) {
      bool found = false;
      for (const auto& [label, value] : p.measures) {
        if (label == m) {
          row.push_back(fmt6(value));
          found = true;
          break;
        }
      }
      if (!found) row.push_back("");
    }
    out += csv_row(row);
  }
  return out;
}

namespace {

SweepOptions parse_sweep_options(const json& sweep) {
  SweepOptions options;
  if (sweep.contains("engines")) {
    options.engines.clear();
    for (const auto& e : sweep["engines"]) options.engines.push_back(e.get<std::string>());
  }
  auto grid_u32 = [&](const char* engine, const char* key, std::vector<uint32_t>& out) {
    if (sweep.contains(engine) && sweep[engine].contains(key)) {
      out.clear();
      for (const auto& v : sweep[engine][key]) out.push_back(v.get<uint32_t>());
    }
  };
  grid_u32("plaid", "nprobe", options.plaid_nprobe);
  grid_u32("plaid", "ndocs", options.plaid_ndocs);
  if (sweep.contains("plaid") && sweep["plaid"].contains("t_cs")) {
    options.plaid_t_cs.clear();
    for (const auto& v : sweep["plaid"]["t_cs"]) options.plaid_t_cs.push_back(v.get<float>());
  }
  grid_u32("rerank", "n", options.rerank_n);
  grid_u32("ladr", "n0", options.ladr_n0);
  grid_u32("ladr", "k_neighbors", options.ladr_k_neighbors);
  grid_u32("ladr", "c", options.ladr_c);
  options.warmup = sweep.value("warmup", options.warmup);
  options.repeats = sweep.value("repeats", options.repeats);
  if (sweep.contains("pareto_measures")) {
    options.pareto_measures.clear();
    for (const auto& m : sweep["pareto_measures"])
      options.pareto_measures.push_back(m.get<std::string>());
  }
  return options;
}

std::vector<std::string> measure_labels_for(const BenchContext& ctx) {
  std::vector<std::string> labels;
  for (const auto& m : ctx.measures) labels.push_back(m.label);
  labels.push_back("rbo");
  return labels;
}

void write_sweep_outputs(const BenchContext& ctx, const SweepOptions& options,
                         const std::vector<SweepPoint>& points, const std::string& dir) {
  std::filesystem::create_directories(dir);
  std::vector<std::string> labels = measure_labels_for(ctx);
  write_file(dir + "/sweep.csv", sweep_csv(points, labels));
  for (const std::string& m : options.pareto_measures) {
    std::vector<SweepPoint> frontier = pareto_frontier(points, m);
    write_file(dir + "/pareto_" + m + ".csv", sweep_csv(frontier, labels));
  }
}

}  // namespace

void run_experiment(const std::string& config_json, const std::string& out_dir) {
  json cfg = parse_json(config_json, "experiment config");
  BenchContext ctx = prepare_context(config_json);

  std::filesystem::create_directories(out_dir + "/runs");
  std::filesystem::create_directories(out_dir + "/reports");

  json engines = cfg.value("engines", json::array({json{{"engine", "exhaustive"}}}));
  for (const auto& entry : engines) {
    EngineSpec spec = parse_engine_spec(entry.dump(), ctx.k);
    Run run = run_engine_all(spec, ctx);
    write_run(run, out_dir + "/runs/" + spec.label + ".trec");

    EvalReport report;
    if (ctx.has_qrels) {
      report = evaluate_run(run, ctx.qrels, ctx.measures);
    } else {
      for (const auto& list : run.lists) report.query_ids.push_back(list.query_id);
      report.values.assign(run.lists.size(), {});
    }
    std::vector<double> rbo_col;
    rbo_col.reserve(run.lists.size());
    for (size_t i = 0; i < run.lists.size(); ++i)
      rbo_col.push_back(rbo_ext(run.lists[i], ctx.reference.lists[i], kRboPersistence));
    report.add_column("rbo", std::move(rbo_col));
    write_file(out_dir + "/reports/" + spec.label + ".jsonl", report_jsonl(report, spec.label));
  }

  if (cfg.contains("sweep")) {
    SweepOptions options = parse_sweep_options(cfg["sweep"]);
    std::vector<SweepPoint> points = grid_sweep(ctx, options);
    write_sweep_outputs(ctx, options, points, out_dir + "/sweeps");
  }

  json analysis = cfg.value("analysis", json::object());
  if (analysis.value("clusters", false)) {
    std::string dir = out_dir + "/analysis";
    std::filesystem::create_directories(dir);
    ClusterStats token_stats = majority_token_proportion(ctx.index);
    write_file(dir + "/majority_token_proportion.csv",
               cluster_stats_csv(token_stats, "cluster_id", "majority_token_id"));
    write_file(dir + "/majority_token_histogram.csv", histogram_csv(token_stats));
    ClusterStats cluster_stats = majority_cluster_proportion(ctx.index);
    write_file(dir + "/majority_cluster_proportion.csv",
               cluster_stats_csv(cluster_stats, "token_id", "majority_cluster_id"));
    write_file(dir + "/majority_cluster_histogram.csv", histogram_csv(cluster_stats));
    if (!ctx.vocab.empty()) save_vocab(ctx.vocab, dir + "/vocab.json");
    if (analysis.contains("queries")) {
      uint32_t nprobe = analysis.value("nprobe", 4u);
      std::string reports;
      for (const auto& q : analysis["queries"]) {
        reports += cluster_report(ctx.index, q.get<std::string>(), nprobe, ctx.seed,
                                  ctx.vocab.empty() ? nullptr : &ctx.vocab);
        reports += "\n";
      }
      write_file(dir + "/cluster_reports.txt", reports);
    }
  }
}

void run_sweep_command(const std::string& config_json, const std::string& out_dir) {
  json cfg = parse_json(config_json, "sweep config");
  BenchContext ctx = prepare_context(config_json);
  SweepOptions options =
      cfg.contains("sweep") ? parse_sweep_options(cfg["sweep"]) : SweepOptions{};
  std::vector<SweepPoint> points = grid_sweep(ctx, options);
  write_sweep_outputs(ctx, options, points, out_dir);
}

}  // namespace latte
