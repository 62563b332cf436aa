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

#include "corpus.hpp"

#include <json.hpp>

#include "binio.hpp"
#include "error.hpp"

namespace latte {

namespace {

using nlohmann::json;

// Calls fn(line_number, object) for each non-empty line.
template <typename Fn>
void for_each_jsonl(const std::string& path, Fn&& fn) {
  std::string content = read_file(path);
  size_t line_no = 0;
  size_t pos = 0;
  while (pos < content.size()) {
    size_t nl = content.find('\n', pos);
    if (nl == std::string::npos) nl = content.size();
    ++line_no;
    std::string_view line(content.data() + pos, nl - pos);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    pos = nl + 1;
    if (line.empty()) continue;
    json obj = json::parse(line, nullptr, false);
    if (obj.is_discarded() || !obj.is_object()) {
      throw Error(ErrorCode::Format,
                  path + ":" + std::to_string(line_no) + ": not a JSON object");
    }
    fn(line_no, obj);
  }
}

std::string require_string(const json& obj, const char* key, const std::string& path,
                           size_t line_no) {
  auto it = obj.find(key);
  if (it == obj.end() || !it->is_string()) {
    throw Error(ErrorCode::Format, path + ":" + std::to_string(line_no) +
                                       ": missing string field \"" + key + "\"");
  }
  return it->get<std::string>();
}

}  // namespace

std::vector<CorpusDoc> read_corpus_jsonl(const std::string& path) {
  std::vector<CorpusDoc> docs;
  for_each_jsonl(path, [&](size_t line_no, const json& obj) {
    docs.push_back({require_string(obj, "doc_id", path, line_no),
                    require_string(obj, "text", path, line_no)});
  });
  return docs;
}

void write_corpus_jsonl(const std::vector<CorpusDoc>& docs, const std::string& path) {
  std::string out;
  for (const auto& d : docs) {
    json obj{{"doc_id", d.doc_id}, {"text", d.text}};
    out += obj.dump();
    out += '\n';
  }
  write_file(path, out);
}

std::vector<QuerySpec> read_queries_jsonl(const std::string& path) {
  std::vector<QuerySpec> queries;
  for_each_jsonl(path, [&](size_t line_no, const json& obj) {
    queries.push_back({require_string(obj, "query_id", path, line_no),
                       require_string(obj, "text", path, line_no)});
  });
  return queries;
}

void write_queries_jsonl(const std::vector<QuerySpec>& queries, const std::string& path) {
  std::string out;
  for (const auto& q : queries) {
    json obj{{"query_id", q.query_id}, {"text", q.text}};
    out += obj.dump();
    out += '\n';
  }
  write_file(path, out);
}

}  // namespace latte
