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

#include "synthetic.hpp"

#include <json.hpp>

#include "binio.hpp"
#include "rng.hpp"
#include "tokenize.hpp"

namespace latte {

SyntheticEncoder::SyntheticEncoder(uint32_t dim, uint64_t seed) : dim_(dim), seed_(seed) {
  if (dim < 2) throw Error(ErrorCode::Config, "encoder dim must be >= 2");
}

std::vector<float> SyntheticEncoder::token_vector(std::string_view token) const {
  // Key the generator by (token, seed); the 0x9e37... offset decouples the
  // stream from a plain hash64(token) seed.
  Rng rng(hash64(token) ^ (seed_ * 0x9e3779b97f4a7c15ULL + 0x7f4a7c159e3779b9ULL));
  std::vector<float> v(dim_);
  rng.fill_unit_vector(v);
  return v;
}

uint32_t SyntheticEncoder::vocab_id(const std::string& token) {
  auto it = vocab_lookup_.find(token);
  if (it != vocab_lookup_.end()) return it->second;
  uint32_t id = uint32_t(vocab_.size());
  vocab_.push_back(token);
  vocab_lookup_.emplace(token, id);
  return id;
}

TokenMatrix SyntheticEncoder::encode_doc(std::string_view doc_id, std::string_view text) {
  TokenMatrix m;
  m.doc_id = std::string(doc_id);
  m.dim = dim_;
  std::vector<std::string> tokens = tokenize(text);
  m.token_ids.reserve(tokens.size());
  m.data.reserve(tokens.size() * dim_);
  for (const auto& tok : tokens) {
    m.token_ids.push_back(vocab_id(tok));
    std::vector<float> v = token_vector(tok);
    m.data.insert(m.data.end(), v.begin(), v.end());
  }
  return m;
}

std::vector<float> SyntheticEncoder::encode_query_vectors(std::string_view text) const {
  std::vector<float> out;
  for (const auto& tok : tokenize(text)) {
    std::vector<float> v = token_vector(tok);
    out.insert(out.end(), v.begin(), v.end());
  }
  return out;
}

void save_vocab(const std::vector<std::string>& vocab, const std::string& path) {
  nlohmann::json arr = nlohmann::json::array();
  for (const auto& tok : vocab) arr.push_back(tok);
  write_file(path, arr.dump() + "\n");
}

std::vector<std::string> load_vocab(const std::string& path) {
  nlohmann::json arr = nlohmann::json::parse(read_file(path), nullptr, false);
  if (arr.is_discarded() || !arr.is_array())
    throw Error(ErrorCode::Format, "vocabulary file is not a JSON array: " + path);
  std::vector<std::string> vocab;
  vocab.reserve(arr.size());
  for (const auto& tok : arr) {
    if (!tok.is_string())
      throw Error(ErrorCode::Format, "vocabulary entries must be strings: " + path);
    vocab.push_back(tok.get<std::string>());
  }
  return vocab;
}

}  // namespace latte
