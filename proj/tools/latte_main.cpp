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

// latte command-line front end. Everything goes through the shared C API.

#include <cstdint>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <sstream>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include <latte/latte.h>

namespace {

using nlohmann::json;

int fail(latte_status status) {
  std::cerr << "error: " << latte_last_error() << "\n";
  return int(status);
}

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    std::cerr << "error: cannot read " << path << "\n";
    std::exit(3);
  }
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void spill(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out || !(out << content)) {
    std::cerr << "error: cannot write " << path << "\n";
    std::exit(3);
  }
}

// Every CLI flag mirrors a config key: start from --config (when given),
// then overlay the flags the user actually passed.
json base_config(const std::string& config_path) {
  if (config_path.empty()) return json::object();
  json cfg = json::parse(slurp(config_path), nullptr, false);
  if (cfg.is_discarded() || !cfg.is_object()) {
    std::cerr << "error: " << config_path << " is not a JSON object\n";
    std::exit(1);
  }
  return cfg;
}

struct IndexHandle {
  latte_index* ptr = nullptr;
  ~IndexHandle() { latte_index_free(ptr); }
};
struct LexicalHandle {
  latte_lexical* ptr = nullptr;
  ~LexicalHandle() { latte_lexical_free(ptr); }
};
struct GraphHandle {
  latte_graph* ptr = nullptr;
  ~GraphHandle() { latte_graph_free(ptr); }
};
struct OwnedString {
  char* ptr = nullptr;
  ~OwnedString() { latte_string_free(ptr); }
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"latte: late-interaction retrieval engine"};
  app.require_subcommand(1);

  // ---- index build / inspect ----
  auto* index_cmd = app.add_subcommand("index", "build or inspect an embedding index");
  index_cmd->require_subcommand(1);

  auto* index_build = index_cmd->add_subcommand("build", "build a compressed index");
  std::string ib_corpus, ib_out, ib_config, ib_embeddings, ib_vocab_out;
  uint64_t ib_seed = 0;
  uint32_t ib_dim = 64, ib_nclusters = 1024, ib_nbits = 4, ib_iters = 20, ib_cap = 16384;
  bool ib_no_scale = false;
  index_build->add_option("--corpus", ib_corpus, "corpus JSONL (doc_id, text)");
  index_build->add_option("--out", ib_out, "output index path")->required();
  index_build->add_option("--config", ib_config, "JSON config; flags override keys");
  index_build->add_option("--seed", ib_seed, "PRNG seed (mandatory for synthetic embeddings)");
  index_build->add_option("--dim", ib_dim, "embedding dimension (synthetic)");
  index_build->add_option("--nclusters", ib_nclusters, "codebook size");
  index_build->add_option("--nbits", ib_nbits, "residual bits per dimension {1,2,4,8}");
  index_build->add_option("--kmeans-iters", ib_iters, "k-means iteration cap");
  index_build->add_option("--sample-cap", ib_cap, "max codebook training samples");
  index_build->add_flag("--no-scale-nclusters", ib_no_scale,
                        "do not cap nclusters at total_tokens/16");
  index_build->add_option("--embeddings", ib_embeddings,
                          "token-embedding file (skips the synthetic encoder)");
  index_build->add_option("--vocab-out", ib_vocab_out, "write the synthetic vocabulary here");

  auto* index_inspect = index_cmd->add_subcommand("inspect", "print index statistics");
  std::string ii_index;
  index_inspect->add_option("--index", ii_index, "index path")->required();

  // ---- lexical build ----
  auto* lexical_cmd = app.add_subcommand("lexical", "build a BM25 index");
  lexical_cmd->require_subcommand(1);
  auto* lexical_build = lexical_cmd->add_subcommand("build", "build a BM25 inverted index");
  std::string lb_corpus, lb_out, lb_config;
  double lb_k1 = 0.9, lb_b = 0.4;
  lexical_build->add_option("--corpus", lb_corpus, "corpus JSONL")->required();
  lexical_build->add_option("--out", lb_out, "output path")->required();
  lexical_build->add_option("--config", lb_config, "JSON config; flags override keys");
  lexical_build->add_option("--k1", lb_k1, "BM25 k1");
  lexical_build->add_option("--b", lb_b, "BM25 b");

  // ---- graph build ----
  auto* graph_cmd = app.add_subcommand("graph", "build a BM25 proximity graph");
  graph_cmd->require_subcommand(1);
  auto* graph_build = graph_cmd->add_subcommand("build", "build the nearest-neighbor graph");
  std::string gb_lexical, gb_corpus, gb_out;
  uint32_t gb_neighbors = 128;
  graph_build->add_option("--lexical", gb_lexical, "lexical index path")->required();
  graph_build->add_option("--corpus", gb_corpus, "corpus JSONL")->required();
  graph_build->add_option("--out", gb_out, "output path")->required();
  graph_build->add_option("--neighbors", gb_neighbors, "neighbors per document");

  // ---- search ----
  auto* search_cmd = app.add_subcommand("search", "run one retrieval engine over queries");
  std::string s_engine, s_index, s_lexical, s_graph, s_queries, s_out, s_tag, s_config;
  std::string s_preset, s_query_embeddings;
  uint64_t s_seed = 0;
  uint32_t s_k = 1000, s_nprobe = 1, s_ndocs = 1024, s_n = 1000, s_n0 = 100;
  uint32_t s_kneigh = 64, s_c = 10, s_max_iters = 50;
  double s_tcs = 0.45;
  search_cmd->add_option("engine", s_engine, "plaid | rerank | ladr | exhaustive")->required();
  search_cmd->add_option("--index", s_index, "embedding index path")->required();
  search_cmd->add_option("--lexical", s_lexical, "lexical index path (rerank/ladr)");
  search_cmd->add_option("--graph", s_graph, "proximity graph path (ladr)");
  search_cmd->add_option("--queries", s_queries, "queries JSONL (query_id, text)")->required();
  search_cmd->add_option("--out", s_out, "output TREC run file")->required();
  search_cmd->add_option("--config", s_config, "JSON config; flags override keys");
  search_cmd->add_option("--seed", s_seed, "synthetic encoder seed (mandatory unless "
                                           "--query-embeddings is given)");
  search_cmd->add_option("--query-embeddings", s_query_embeddings,
                         "token-embedding file holding query vectors by query_id");
  search_cmd->add_option("--tag", s_tag, "run tag (defaults to the engine label)");
  search_cmd->add_option("--k", s_k, "result depth");
  search_cmd->add_option("--preset", s_preset, "plaid preset a|b|c");
  search_cmd->add_option("--nprobe", s_nprobe, "plaid: centroids probed per query token");
  search_cmd->add_option("--t-cs", s_tcs, "plaid: centroid pruning threshold");
  search_cmd->add_option("--ndocs", s_ndocs, "plaid: approximate-scoring survivors");
  search_cmd->add_option("--n", s_n, "rerank: BM25 pool size");
  search_cmd->add_option("--n0", s_n0, "ladr: seed pool size");
  search_cmd->add_option("--k-neighbors", s_kneigh, "ladr: neighbors per expanded doc");
  search_cmd->add_option("--c", s_c, "ladr: expansion window");
  search_cmd->add_option("--max-iters", s_max_iters, "ladr: expansion round cap");

  // ---- sweep ----
  auto* sweep_cmd = app.add_subcommand("sweep", "parameter grid sweep -> CSV");
  std::string sw_config, sw_out_dir;
  sweep_cmd->add_option("--config", sw_config, "experiment JSON config")->required();
  sweep_cmd->add_option("--out-dir", sw_out_dir, "output directory")->required();

  // ---- eval ----
  auto* eval_cmd = app.add_subcommand("eval", "evaluate a TREC run against qrels");
  std::string e_run, e_qrels, e_measures = "rr@10,ndcg@10,ndcg@1k,r@1k", e_rbo_ref, e_out;
  double e_rbo_p = 0.99;
  eval_cmd->add_option("--run", e_run, "TREC run file")->required();
  eval_cmd->add_option("--qrels", e_qrels, "TREC qrels file")->required();
  eval_cmd->add_option("--measures", e_measures, "comma-separated measure specs");
  eval_cmd->add_option("--rbo-ref", e_rbo_ref, "reference run for the rbo column");
  eval_cmd->add_option("--rbo-p", e_rbo_p, "rbo persistence");
  eval_cmd->add_option("--out", e_out, "write the JSONL report here (default stdout)");

  // ---- analyze clusters ----
  auto* analyze_cmd = app.add_subcommand("analyze", "index analyses");
  analyze_cmd->require_subcommand(1);
  auto* clusters_cmd = analyze_cmd->add_subcommand("clusters", "majority-proportion analyses");
  std::string ac_index, ac_out_dir, ac_vocab, ac_query;
  uint32_t ac_nprobe = 4;
  uint64_t ac_seed = 0;
  clusters_cmd->add_option("--index", ac_index, "index path (built with token ids)")->required();
  clusters_cmd->add_option("--out-dir", ac_out_dir, "output directory")->required();
  clusters_cmd->add_option("--vocab", ac_vocab, "vocabulary JSON for token labels");
  clusters_cmd->add_option("--query", ac_query, "also print a per-query cluster report");
  clusters_cmd->add_option("--nprobe", ac_nprobe, "probes per query token for the report");
  clusters_cmd->add_option("--seed", ac_seed, "synthetic encoder seed for the report");

  // ---- experiment ----
  auto* exp_cmd = app.add_subcommand("experiment", "end-to-end experiment driver");
  std::string x_config, x_out_dir;
  exp_cmd->add_option("--config", x_config, "experiment JSON config")->required();
  exp_cmd->add_option("--out-dir", x_out_dir, "output directory")->required();

  CLI11_PARSE(app, argc, argv);

  if (index_build->parsed()) {
    json cfg = base_config(ib_config);
    auto set = [&](const char* key, const json& v, const CLI::Option* opt) {
      if (opt->count() > 0 || !cfg.contains(key)) cfg[key] = v;
    };
    set("seed", ib_seed, index_build->get_option("--seed"));
    set("dim", ib_dim, index_build->get_option("--dim"));
    set("nclusters", ib_nclusters, index_build->get_option("--nclusters"));
    set("nbits", ib_nbits, index_build->get_option("--nbits"));
    set("kmeans_iters", ib_iters, index_build->get_option("--kmeans-iters"));
    set("sample_cap", ib_cap, index_build->get_option("--sample-cap"));
    if (ib_no_scale) cfg["scale_nclusters"] = false;
    if (!ib_embeddings.empty()) cfg["embeddings_path"] = ib_embeddings;
    if (!ib_vocab_out.empty()) cfg["vocab_out"] = ib_vocab_out;
    if (index_build->get_option("--seed")->count() == 0 && !cfg.contains("seed") &&
        !cfg.contains("embeddings_path")) {
      std::cerr << "error: --seed is mandatory for synthetic pipelines\n";
      return 1;
    }
    std::string corpus = ib_corpus;
    if (corpus.empty() && cfg.contains("corpus")) corpus = cfg["corpus"].get<std::string>();
    if (corpus.empty() && !cfg.contains("embeddings_path")) {
      std::cerr << "error: --corpus is required unless --embeddings is given\n";
      return 1;
    }
    IndexHandle index;
    if (auto s = latte_index_build(corpus.c_str(), cfg.dump().c_str(), &index.ptr))
      return fail(s);
    if (auto s = latte_index_save(index.ptr, ib_out.c_str())) return fail(s);
    std::cout << "wrote " << ib_out << "\n";
    return 0;
  }

  if (index_inspect->parsed()) {
    IndexHandle index;
    if (auto s = latte_index_load(ii_index.c_str(), &index.ptr)) return fail(s);
    OwnedString info;
    if (auto s = latte_index_inspect(index.ptr, &info.ptr)) return fail(s);
    std::cout << info.ptr;
    return 0;
  }

  if (lexical_build->parsed()) {
    json cfg = base_config(lb_config);
    if (lexical_build->get_option("--k1")->count() > 0 || !cfg.contains("k1")) cfg["k1"] = lb_k1;
    if (lexical_build->get_option("--b")->count() > 0 || !cfg.contains("b")) cfg["b"] = lb_b;
    LexicalHandle lex;
    if (auto s = latte_lexical_build(lb_corpus.c_str(), cfg.dump().c_str(), &lex.ptr))
      return fail(s);
    if (auto s = latte_lexical_save(lex.ptr, lb_out.c_str())) return fail(s);
    std::cout << "wrote " << lb_out << "\n";
    return 0;
  }

  if (graph_build->parsed()) {
    LexicalHandle lex;
    if (auto s = latte_lexical_load(gb_lexical.c_str(), &lex.ptr)) return fail(s);
    GraphHandle graph;
    if (auto s = latte_graph_build(lex.ptr, gb_corpus.c_str(), gb_neighbors, &graph.ptr))
      return fail(s);
    if (auto s = latte_graph_save(graph.ptr, gb_out.c_str())) return fail(s);
    std::cout << "wrote " << gb_out << "\n";
    return 0;
  }

  if (search_cmd->parsed()) {
    json params = base_config(s_config);
    auto set = [&](const char* key, const json& v, const char* flag) {
      if (search_cmd->get_option(flag)->count() > 0 || !params.contains(key)) params[key] = v;
    };
    set("k", s_k, "--k");
    if (!s_preset.empty()) params["preset"] = s_preset;
    if (s_engine == "plaid" && s_preset.empty()) {
      set("nprobe", s_nprobe, "--nprobe");
      set("t_cs", s_tcs, "--t-cs");
      set("ndocs", s_ndocs, "--ndocs");
    } else if (s_engine == "rerank") {
      set("n", s_n, "--n");
    } else if (s_engine == "ladr") {
      set("n0", s_n0, "--n0");
      set("k_neighbors", s_kneigh, "--k-neighbors");
      set("c", s_c, "--c");
      set("max_iters", s_max_iters, "--max-iters");
    }

    json embed;
    if (!s_query_embeddings.empty()) {
      embed = {{"source", "file"}, {"path", s_query_embeddings}};
    } else {
      if (search_cmd->get_option("--seed")->count() == 0 && !params.contains("seed")) {
        std::cerr << "error: --seed is mandatory for synthetic pipelines\n";
        return 1;
      }
      uint64_t seed = search_cmd->get_option("--seed")->count() > 0
                          ? s_seed
                          : params["seed"].get<uint64_t>();
      embed = {{"source", "synthetic"}, {"seed", seed}};
    }
    params.erase("seed");

    IndexHandle index;
    if (auto s = latte_index_load(s_index.c_str(), &index.ptr)) return fail(s);
    LexicalHandle lex;
    if (!s_lexical.empty())
      if (auto s = latte_lexical_load(s_lexical.c_str(), &lex.ptr)) return fail(s);
    GraphHandle graph;
    if (!s_graph.empty())
      if (auto s = latte_graph_load(s_graph.c_str(), &graph.ptr)) return fail(s);

    if (auto s = latte_search(index.ptr, lex.ptr, graph.ptr, s_engine.c_str(),
                              params.dump().c_str(), s_queries.c_str(), embed.dump().c_str(),
                              s_tag.c_str(), s_out.c_str()))
      return fail(s);
    std::cout << "wrote " << s_out << "\n";
    return 0;
  }

  if (sweep_cmd->parsed()) {
    if (auto s = latte_sweep(slurp(sw_config).c_str(), sw_out_dir.c_str())) return fail(s);
    std::cout << "wrote " << sw_out_dir << "/sweep.csv\n";
    return 0;
  }

  if (eval_cmd->parsed()) {
    OwnedString report;
    if (auto s = latte_eval(e_run.c_str(), e_qrels.c_str(), e_measures.c_str(),
                            e_rbo_ref.empty() ? nullptr : e_rbo_ref.c_str(), e_rbo_p,
                            &report.ptr))
      return fail(s);
    if (e_out.empty())
      std::cout << report.ptr;
    else
      spill(e_out, report.ptr);
    return 0;
  }

  if (clusters_cmd->parsed()) {
    IndexHandle index;
    if (auto s = latte_index_load(ac_index.c_str(), &index.ptr)) return fail(s);
    if (auto s = latte_analyze_clusters(index.ptr, ac_vocab.empty() ? nullptr : ac_vocab.c_str(),
                                        ac_out_dir.c_str()))
      return fail(s);
    if (!ac_query.empty()) {
      OwnedString report;
      if (auto s = latte_cluster_report(index.ptr, ac_vocab.empty() ? nullptr : ac_vocab.c_str(),
                                        ac_query.c_str(), ac_nprobe, ac_seed, &report.ptr))
        return fail(s);
      std::cout << report.ptr;
    }
    std::cout << "wrote analyses to " << ac_out_dir << "\n";
    return 0;
  }

  if (exp_cmd->parsed()) {
    if (auto s = latte_experiment(slurp(x_config).c_str(), x_out_dir.c_str())) return fail(s);
    std::cout << "experiment artifacts in " << x_out_dir << "\n";
    return 0;
  }

  return 0;
}
