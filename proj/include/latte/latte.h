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

/*
 * latte: a late-interaction retrieval engine, exposed as a C ABI.
 *
 * Every function returns LATTE_OK or an error code; latte_last_error()
 * returns a thread-local message for the most recent failure. Handles are
 * opaque and freed with their matching *_free function. Strings returned
 * through char** out-parameters are owned by the caller and released with
 * latte_string_free().
 *
 * Structured options travel as JSON documents (see the README for the
 * schemas); simple scalars are plain arguments.
 */

#ifndef LATTE_LATTE_H
#define LATTE_LATTE_H

#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

typedef enum latte_status {
  LATTE_OK = 0,
  LATTE_ERR_CONFIG = 1,    /* bad parameter or configuration value */
  LATTE_ERR_INPUT = 2,     /* malformed caller-supplied data */
  LATTE_ERR_IO = 3,        /* filesystem failure */
  LATTE_ERR_FORMAT = 4,    /* unrecognized or malformed file format */
  LATTE_ERR_CORRUPT = 5,   /* recognized format but inconsistent content */
  LATTE_ERR_MISMATCH = 6,  /* artifacts that must agree do not */
  LATTE_ERR_INTERNAL = 7
} latte_status;

typedef struct latte_index latte_index;     /* compressed token-embedding index */
typedef struct latte_lexical latte_lexical; /* BM25 inverted index */
typedef struct latte_graph latte_graph;     /* BM25 proximity graph */

const char* latte_version(void);

/* Message for the most recent error on this thread; empty string if none. */
const char* latte_last_error(void);

void latte_string_free(char* s);

/* ---- compressed embedding index ---------------------------------------- */

/*
 * options_json keys: seed (required), dim, nclusters, nbits, kmeans_iters,
 * sample_cap, scale_nclusters. Embeddings come from the synthetic encoder
 * unless "embeddings_path" names a token-embedding file.
 */
latte_status latte_index_build(const char* corpus_jsonl_path, const char* options_json,
                               latte_index** out);
latte_status latte_index_save(const latte_index* index, const char* path);
latte_status latte_index_load(const char* path, latte_index** out);
latte_status latte_index_inspect(const latte_index* index, char** out_json);
void latte_index_free(latte_index* index);

/* ---- lexical index and proximity graph --------------------------------- */

/* options_json keys: k1, b. */
latte_status latte_lexical_build(const char* corpus_jsonl_path, const char* options_json,
                                 latte_lexical** out);
latte_status latte_lexical_save(const latte_lexical* lexical, const char* path);
latte_status latte_lexical_load(const char* path, latte_lexical** out);
void latte_lexical_free(latte_lexical* lexical);

latte_status latte_graph_build(const latte_lexical* lexical, const char* corpus_jsonl_path,
                               uint32_t neighbors, latte_graph** out);
latte_status latte_graph_save(const latte_graph* graph, const char* path);
latte_status latte_graph_load(const char* path, latte_graph** out);
void latte_graph_free(latte_graph* graph);

/* ---- search ------------------------------------------------------------- */

/*
 * engine: "plaid" | "rerank" | "ladr" | "exhaustive".
 * params_json: engine parameters plus "k", e.g. {"nprobe":2,"t_cs":0.45,
 * "ndocs":1024,"k":1000} or {"preset":"b","k":1000}.
 * embed_json: how query vectors are obtained, {"source":"synthetic",
 * "seed":42} or {"source":"file","path":"queries.llemb"}.
 * Writes a TREC run file to out_run_path. lexical/graph may be NULL when
 * the engine does not need them.
 */
latte_status latte_search(const latte_index* index, const latte_lexical* lexical,
                          const latte_graph* graph, const char* engine,
                          const char* params_json, const char* queries_jsonl_path,
                          const char* embed_json, const char* run_tag,
                          const char* out_run_path);

/* ---- evaluation ---------------------------------------------------------- */

/*
 * measures: comma-separated specs such as "rr@10,ndcg@10,ndcg@1k,r@1k"
 * (append ":2" to a recall spec for a minimum relevance grade).
 * rbo_ref_run_path (optional, may be NULL): adds an "rbo" column against
 * the reference run with persistence rbo_p (pass 0 for the default 0.99).
 * The JSON-lines report is returned through out_report.
 */
latte_status latte_eval(const char* run_path, const char* qrels_path, const char* measures,
                        const char* rbo_ref_run_path, double rbo_p, char** out_report);

/* ---- harness ------------------------------------------------------------- */

/* Full experiment driver; see the README for the config schema. */
latte_status latte_experiment(const char* config_json, const char* out_dir);

/* Parameter grid sweep only; writes sweep.csv and pareto_*.csv. */
latte_status latte_sweep(const char* config_json, const char* out_dir);

/*
 * Cluster analyses over an index built with token ids. Writes
 * majority_token_proportion.csv, majority_cluster_proportion.csv and the
 * two histogram CSVs into out_dir. vocab_json_path may be NULL.
 */
latte_status latte_analyze_clusters(const latte_index* index, const char* vocab_json_path,
                                    const char* out_dir);

/* Fig-style inspection of the clusters a query probes. */
latte_status latte_cluster_report(const latte_index* index, const char* vocab_json_path,
                                  const char* query_text, uint32_t nprobe, uint64_t seed,
                                  char** out_text);

#ifdef __cplusplus
} /* extern "C" */
#endif

#endif /* LATTE_LATTE_H */
