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
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "embedding.hpp"

namespace latte {

// Deterministic stand-in for a neural token encoder: every distinct token
// string maps to a fixed unit vector drawn from a PRNG keyed by
// (token, seed). The vocabulary persists across encode calls so token ids
// are stable over a whole corpus.
class SyntheticEncoder {
 public:
  SyntheticEncoder(uint32_t dim, uint64_t seed);

  // Tokenizes (lowercase, split on non-alphanumeric) and embeds; assigns
  // vocabulary ids in first-seen order. Empty text yields an empty matrix.
  TokenMatrix encode_doc(std::string_view doc_id, std::string_view text);

  // Embeds the text without touching the vocabulary.
  std::vector<float> encode_query_vectors(std::string_view text) const;

  std::vector<float> token_vector(std::string_view token) const;

  const std::vector<std::string>& vocab() const { return vocab_; }
  uint32_t dim() const { return dim_; }
  uint64_t seed() const { return seed_; }

 private:
  uint32_t vocab_id(const std::string& token);

  uint32_t dim_;
  uint64_t seed_;
  std::vector<std::string> vocab_;
  std::unordered_map<std::string, uint32_t> vocab_lookup_;
};

// Vocabulary sidecar: a JSON array of token strings, position == token id.
void save_vocab(const std::vector<std::string>& vocab, const std::string& path);
std::vector<std::string> load_vocab(const std::string& path);

}  // namespace latte
