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
#include <string_view>
#include <vector>

namespace latte {

// Lowercases and splits on any byte outside [a-z0-9]. Multi-byte UTF-8
// sequences therefore act as separators; token text is ASCII.
std::vector<std::string> tokenize(std::string_view text);

// Classic Porter stemming. Tokens containing digits pass through unchanged.
std::string porter_stem(std::string word);

// tokenize() followed by porter_stem() on every token.
std::vector<std::string> tokenize_stem(std::string_view text);

}  // namespace latte
