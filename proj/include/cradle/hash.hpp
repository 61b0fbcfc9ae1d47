// Copyright 2026 The cradle Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef CRADLE_HASH_HPP_
#define CRADLE_HASH_HPP_

#include <span>
#include <string>
#include <string_view>

namespace cradle {

// Lowercase hex SHA-256 of `data`.
std::string Sha256Hex(std::string_view data);

// Content hash of a submitted source set: SHA-256 over the file texts
// concatenated in order, with no separators. Paths do not participate, so a
// single-file candidate hashes exactly like `sha256sum candidate.v`.
std::string ContentHash(std::span<const std::string_view> texts);

}  // namespace cradle

#endif  // CRADLE_HASH_HPP_
