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

#include "cradle/code_blocks.hpp"

namespace cradle {
namespace {

constexpr std::string_view kFence = "```";

std::string_view Trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

}  // namespace

std::vector<CodeBlock> ExtractCodeBlocks(std::string_view text,
                                         std::optional<std::string_view> tag) {
  std::vector<CodeBlock> out;
  std::size_t pos = 0;
  while (true) {
    std::size_t open = text.find(kFence, pos);
    if (open == std::string_view::npos) break;
    std::size_t info_begin = open + kFence.size();
    // Longer backtick runs are treated as part of the fence.
    while (info_begin < text.size() && text[info_begin] == '`') ++info_begin;
    std::size_t nl = text.find('\n', info_begin);

    CodeBlock block;
    if (nl == std::string_view::npos) {
      block.info = std::string(Trim(text.substr(info_begin)));
      block.unterminated = true;
      pos = text.size();
    } else {
      block.info = std::string(Trim(text.substr(info_begin, nl - info_begin)));
      std::size_t body = nl + 1;
      std::size_t close = text.find(kFence, body);
      if (close == std::string_view::npos) {
        block.code = std::string(text.substr(body));
        block.unterminated = true;
        pos = text.size();
      } else {
        block.code = std::string(text.substr(body, close - body));
        pos = close + kFence.size();
        while (pos < text.size() && text[pos] == '`') ++pos;
      }
      if (!block.code.empty() && block.code.back() == '\n') {
        block.code.pop_back();
        if (!block.code.empty() && block.code.back() == '\r') {
          block.code.pop_back();
        }
      }
    }
    if (!tag || block.info == *tag) out.push_back(std::move(block));
    if (pos >= text.size()) break;
  }
  return out;
}

}  // namespace cradle
