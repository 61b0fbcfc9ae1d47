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

#ifndef CRADLE_VERILOG_SCAN_HPP_
#define CRADLE_VERILOG_SCAN_HPP_

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

// Lexer-level Verilog scanning. This is not an elaborator: it finds module
// declarations and instantiation statements well enough to build a display
// hierarchy, and ignores generate blocks and parameter indirection.
namespace cradle::verilog {

enum class TokenKind {
  kIdentifier,
  kKeyword,
  kNumber,
  kString,
  kSystemName,  // $display, $finish, ...
  kMacro,       // `FOO usages (directives themselves are dropped)
  kPunct,
};

struct Token {
  TokenKind kind;
  std::string text;
  std::size_t offset;  // byte offset of the first character in the source
};

bool IsKeyword(std::string_view word);

// Comments, compiler directives and (* attributes *) produce no tokens.
std::vector<Token> Tokenize(std::string_view source);

struct InstanceRef {
  std::string module_name;
  std::string instance_name;
};

struct ModuleDecl {
  std::string name;
  // Token texts from `module` through the terminating `;` of the header.
  std::vector<std::string> header_tokens;
  std::vector<InstanceRef> instances;
  std::size_t begin_offset = 0;      // at `module`
  std::size_t header_end_offset = 0; // one past the header `;`
  std::size_t end_keyword_offset = 0;// at `endmodule` (or source end)
};

std::vector<ModuleDecl> ScanModules(std::string_view source);

}  // namespace cradle::verilog

#endif  // CRADLE_VERILOG_SCAN_HPP_
