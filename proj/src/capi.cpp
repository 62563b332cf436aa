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

#include "latte/latte.h"

#include <cstdio>
#include <cstring>
#include <filesystem>
#include <string>
#include <unordered_map>

#include <json.hpp>

#include "bench.hpp"
#include "binio.hpp"
#include "corpus.hpp"
#include "embedding.hpp"
#include "error.hpp"
#include "eval.hpp"
#include "lexical.hpp"
#include "synthetic.hpp"

struct latte_index {
  latte::CompressedIndex impl;
};
struct latte_lexical {
  latte::LexicalIndex impl;
};
struct latte_graph {
  latte::ProximityGraph impl;
};

namespace {

using nlohmann::json;

thread_local std::string g_last_error;

latte_status to_status(latte::ErrorCode code) {
  switch (code) {
    case latte::ErrorCode::Config: return LATTE_ERR_CONFIG;
    case latte::ErrorCode::Input: return LATTE_ERR_INPUT;
    case latte::ErrorCode::Io: return LATTE_ERR_IO;
    case latte::ErrorCode::Format: return LATTE_ERR_FORMAT;
    case latte::ErrorCode::Corrupt: return LATTE_ERR_CORRUPT;
    case latte::ErrorCode::Mismatch: return LATTE_ERR_MISMATCH;
    case latte::ErrorCode::Internal: return LATTE_ERR_INTERNAL;
  }
  return LATTE_ERR_INTERNAL;
}

template <typename Fn>
latte_status guarded(Fn&& fn) {
  try {
    fn();
    g_last_error.clear();
    return LATTE_OK;
  } catch (const latte::Error& e) {
    g_last_error = e.what();
    return to_status(e.code());
  } catch (const std::exception& e) {
    g_last_error = e.what();
    return LATTE_ERR_INTERNAL;
  }
}

latte_status require(bool ok, const char* message) {
  if (ok) return LATTE_OK;
  g_last_error = message;
  return LATTE_ERR_INPUT;
}

char* dup_string(const std::string& s) {
  char* out = new char[s.size() + 1];
  std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

json parse_options(const char* options_json, const char* what) {
  if (options_json == nullptr || options_json[0] == '\0') return json::object();
  json obj = json::parse(options_json, nullptr, false);
  if (obj.is_discarded() || !obj.is_object())
    throw latte::Error(latte::ErrorCode::Config, std::string("invalid JSON for ") + what);
  return obj;
}

}  // namespace

extern "C" {

const char* latte_version(void) { return "0.1.0"; }

const char* latte_last_error(void) { return g_last_error.c_str(); }

void latte_string_free(char* s) { delete[] s; }

latte_status latte_index_build(const char* corpus_jsonl_path, const char* options_json,
                               latte_index** out) {
  if (auto s = require(corpus_jsonl_path && out, "corpus path and out handle are required"))
    return s;
  return guarded([&] {
    json opt = parse_options(options_json, "index build options");
    latte::IndexConfig cfg;
    if (!opt.contains("seed"))
      throw latte::Error(latte::ErrorCode::Config, "index build options require a seed");
    cfg.seed = opt["seed"].get<uint64_t>();
    cfg.dim = opt.value("dim", cfg.dim);
    cfg.nclusters = opt.value("nclusters", cfg.nclusters);
    cfg.nbits = opt.value("nbits", cfg.nbits);
    cfg.kmeans_iters = opt.value("kmeans_iters", cfg.kmeans_iters);
    cfg.sample_cap = opt.value("sample_cap", cfg.sample_cap);
    cfg.scale_nclusters = opt.value("scale_nclusters", cfg.scale_nclusters);

    std::vector<latte::TokenMatrix> docs;
    if (opt.contains("embeddings_path")) {
      docs = latte::load_embeddings(opt["embeddings_path"].get<std::string>());
      if (docs.empty())
        throw latte::Error(latte::ErrorCode::Input, "embedding file contains no documents");
      cfg.dim = docs.front().dim;
    } else {
      latte::SyntheticEncoder enc(cfg.dim, cfg.seed);
      for (const auto& d : latte::read_corpus_jsonl(corpus_jsonl_path))
        docs.push_back(enc.encode_doc(d.doc_id, d.text));
      if (opt.contains("vocab_out")) latte::save_vocab(enc.vocab(), opt["vocab_out"]);
    }
    *out = new latte_index{latte::build_index(docs, cfg)};
  });
}

latte_status latte_index_save(const latte_index* index, const char* path) {
  if (auto s = require(index && path, "index handle and path are required")) return s;
  return guarded([&] { latte::save_index(index->impl, path); });
}

latte_status latte_index_load(const char* path, latte_index** out) {
  if (auto s = require(path && out, "path and out handle are required")) return s;
  return guarded([&] { *out = new latte_index{latte::load_index(path)}; });
}

latte_status latte_index_inspect(const latte_index* index, char** out_json) {
  if (auto s = require(index && out_json, "index handle and out pointer are required")) return s;
  return guarded([&] {
    const latte::CompressedIndex& ix = index->impl;
    size_t nonempty = 0, postings = 0;
    for (uint32_t c = 0; c < ix.nclusters(); ++c) {
      if (!ix.ivf(c).empty()) ++nonempty;
      postings += ix.ivf(c).size();
    }
    json info{
        {"dim", ix.dim()},
        {"nclusters", ix.nclusters()},
        {"nbits", ix.codec().nbits},
        {"doc_count", ix.doc_count()},
        {"total_tokens", ix.total_tokens()},
        {"has_token_ids", ix.has_token_ids()},
        {"nonempty_clusters", nonempty},
        {"ivf_postings", postings},
    };
    *out_json = dup_string(info.dump(2) + "\n");
  });
}

void latte_index_free(latte_index* index) { delete index; }

latte_status latte_lexical_build(const char* corpus_jsonl_path, const char* options_json,
                                 latte_lexical** out) {
  if (auto s = require(corpus_jsonl_path && out, "corpus path and out handle are required"))
    return s;
  return guarded([&] {
    json opt = parse_options(options_json, "lexical build options");
    latte::Bm25Params params;
    params.k1 = opt.value("k1", params.k1);
    params.b = opt.value("b", params.b);
    *out = new latte_lexical{
        latte::build_lexical_index(latte::read_corpus_jsonl(corpus_jsonl_path), params)};
  });
}

latte_status latte_lexical_save(const latte_lexical* lexical, const char* path) {
  if (auto s = require(lexical && path, "lexical handle and path are required")) return s;
  return guarded([&] { latte::save_lexical_index(lexical->impl, path); });
}

latte_status latte_lexical_load(const char* path, latte_lexical** out) {
  if (auto s = require(path && out, "path and out handle are required")) return s;
  return guarded([&] { *out = new latte_lexical{latte::load_lexical_index(path)}; });
}

void latte_lexical_free(latte_lexical* lexical) { delete lexical; }

latte_status latte_graph_build(const latte_lexical* lexical, const char* corpus_jsonl_path,
                               uint32_t neighbors, latte_graph** out) {
  if (auto s = require(lexical && corpus_jsonl_path && out,
                       "lexical handle, corpus path and out handle are required"))
    return s;
  return guarded([&] {
    *out = new latte_graph{latte::build_proximity_graph(
        lexical->impl, latte::read_corpus_jsonl(corpus_jsonl_path), neighbors)};
  });
}

latte_status latte_graph_save(const latte_graph* graph, const char* path) {
  if (auto s = require(graph && path, "graph handle and path are required")) return s;
  return guarded([&] { latte::save_graph(graph->impl, path); });
}

latte_status latte_graph_load(const char* path, latte_graph** out) {
  if (auto s = require(path && out, "path and out handle are required")) return s;
  return guarded([&] { *out = new latte_graph{latte::load_graph(path)}; });
}

void latte_graph_free(latte_graph* graph) { delete graph; }

latte_status latte_search(const latte_index* index, const latte_lexical* lexical,
                          const latte_graph* graph, const char* engine,
                          const char* params_json, const char* queries_jsonl_path,
                          const char* embed_json, const char* run_tag,
                          const char* out_run_path) {
  if (auto s = require(index && engine && queries_jsonl_path && embed_json && out_run_path,
                       "index, engine, queries, embed options and output path are required"))
    return s;
  return guarded([&] {
    json params = parse_options(params_json, "search params");
    params["engine"] = engine;
    uint32_t k = params.value("k", 1000u);
    latte::EngineSpec spec = latte::parse_engine_spec(params.dump(), k);

    // A context over borrowed artifacts; only the fields run_engine touches.
    latte::BenchContext ctx;
    ctx.index = index->impl;  // copy keeps the C handles independent
    if (lexical) ctx.lexical = lexical->impl;
    if (graph) ctx.graph = graph->impl;
    ctx.k = k;
    ctx.queries =
        latte::load_query_embeddings(queries_jsonl_path, embed_json, ctx.index.dim());

    latte::Run run = latte::run_engine_all(spec, ctx);
    if (run_tag && run_tag[0] != '\0') run.tag = run_tag;
    latte::write_run(run, out_run_path);
  });
}

latte_status latte_eval(const char* run_path, const char* qrels_path, const char* measures,
                        const char* rbo_ref_run_path, double rbo_p, char** out_report) {
  if (auto s = require(run_path && qrels_path && measures && out_report,
                       "run, qrels, measures and out pointer are required"))
    return s;
  return guarded([&] {
    latte::Run run = latte::read_run(run_path);
    std::vector<std::string> warnings;
    latte::Qrels qrels = latte::read_qrels(qrels_path, &warnings);
    for (const auto& w : warnings) std::fprintf(stderr, "warning: %s\n", w.c_str());

    std::vector<latte::MeasureSpec> specs;
    std::string list(measures);
    size_t pos = 0;
    while (pos <= list.size()) {
      size_t comma = list.find(',', pos);
      if (comma == std::string::npos) comma = list.size();
      std::string item = list.substr(pos, comma - pos);
      if (!item.empty()) specs.push_back(latte::MeasureSpec::parse(item));
      pos = comma + 1;
    }

    latte::EvalReport report = latte::evaluate_run(run, qrels, specs);
    if (rbo_ref_run_path && rbo_ref_run_path[0] != '\0') {
      latte::Run ref = latte::read_run(rbo_ref_run_path);
      std::unordered_map<std::string, const latte::RankedList*> ref_lists;
      for (const auto& list_ : ref.lists) ref_lists[list_.query_id] = &list_;
      double p = rbo_p > 0.0 ? rbo_p : 0.99;
      std::vector<double> col;
      col.reserve(run.lists.size());
      for (const auto& l : run.lists) {
        auto it = ref_lists.find(l.query_id);
        if (it == ref_lists.end())
          throw latte::Error(latte::ErrorCode::Mismatch,
                             "query missing from the reference run: " + l.query_id);
        col.push_back(latte::rbo_ext(l, *it->second, p));
      }
      report.add_column("rbo", std::move(col));
    }
    *out_report = dup_string(latte::report_jsonl(report, run.tag));
  });
}

latte_status latte_experiment(const char* config_json, const char* out_dir) {
  if (auto s = require(config_json && out_dir, "config and output directory are required"))
    return s;
  return guarded([&] { latte::run_experiment(config_json, out_dir); });
}

latte_status latte_sweep(const char* config_json, const char* out_dir) {
  if (auto s = require(config_json && out_dir, "config and output directory are required"))
    return s;
  return guarded([&] { latte::run_sweep_command(config_json, out_dir); });
}

latte_status latte_analyze_clusters(const latte_index* index, const char* vocab_json_path,
                                    const char* out_dir) {
  if (auto s = require(index && out_dir, "index handle and output directory are required"))
    return s;
  return guarded([&] {
    (void)vocab_json_path;  // vocab only affects the textual report, not the CSVs
    std::filesystem::create_directories(out_dir);
    std::string dir(out_dir);
    latte::ClusterStats token_stats = latte::majority_token_proportion(index->impl);
    latte::write_file(dir + "/majority_token_proportion.csv",
                      latte::cluster_stats_csv(token_stats, "cluster_id", "majority_token_id"));
    latte::write_file(dir + "/majority_token_histogram.csv",
                      latte::histogram_csv(token_stats));
    latte::ClusterStats cluster_stats = latte::majority_cluster_proportion(index->impl);
    latte::write_file(
        dir + "/majority_cluster_proportion.csv",
        latte::cluster_stats_csv(cluster_stats, "token_id", "majority_cluster_id"));
    latte::write_file(dir + "/majority_cluster_histogram.csv",
                      latte::histogram_csv(cluster_stats));
  });
}

latte_status latte_cluster_report(const latte_index* index, const char* vocab_json_path,
                                  const char* query_text, uint32_t nprobe, uint64_t seed,
                                  char** out_text) {
  if (auto s = require(index && query_text && out_text,
                       "index handle, query text and out pointer are required"))
    return s;
  return guarded([&] {
    std::vector<std::string> vocab;
    if (vocab_json_path && vocab_json_path[0] != '\0')
      vocab = latte::load_vocab(vocab_json_path);
    *out_text = dup_string(latte::cluster_report(index->impl, query_text, nprobe, seed,
                                                 vocab.empty() ? nullptr : &vocab));
  });
}

}  // extern "C"
