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

#include <string>
#include <vector>

namespace latte {

struct CorpusDoc {
  std::string doc_id;
  std::string text;
};

struct QuerySpec {
  std::string query_id;
  std::string text;
};

// JSON-lines, one object per line: {"doc_id": ..., "text": ...}
std::vector<CorpusDoc> read_corpus_jsonl(const std::string& path);
void write_corpus_jsonl(const std::vector<CorpusDoc>& docs, const std::string& path);

// JSON-lines, one object per line: {"query_id": ..., "text": ...}
std::vector<QuerySpec> read_queries_jsonl(const std::string& path);
void write_queries_jsonl(const std::vector<QuerySpec>& queries, const std::string& path);

}  // namespace latte
