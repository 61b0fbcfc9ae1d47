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

#ifndef CRADLE_CODE_BLOCKS_HPP_
#define CRADLE_CODE_BLOCKS_HPP_

#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace cradle {

struct CodeBlock {
  std::string info;  // text after the opening fence, trimmed
  std::string code;
  bool unterminated = false;  // ran to the end of the text without a fence
};

// Contents of ``` fenced blocks, in order. Fences may open mid-line; the info
// string runs to the end of the opening line. Nesting is not supported. With
// `tag`, only blocks whose info string equals it are returned.
std::vector<CodeBlock> ExtractCodeBlocks(
    std::string_view text, std::optional<std::string_view> tag = {});

}  // namespace cradle

#endif  // CRADLE_CODE_BLOCKS_HPP_
