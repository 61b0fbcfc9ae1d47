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

#include "cradle/verilog_scan.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <unordered_set>

namespace cradle::verilog {
namespace {

const std::unordered_set<std::string_view>& Keywords() {
  static const std::unordered_set<std::string_view> kWords = {
      "always", "always_comb", "always_ff", "always_latch", "and", "assign",
      "assert", "automatic", "begin", "bit", "buf", "bufif0", "bufif1",
      "byte", "case", "casex", "casez", "cmos", "deassign", "default",
      "defparam", "disable", "edge", "else", "end", "endcase", "endfunction",
      "endgenerate", "endmodule", "endprimitive", "endspecify", "endtable",
      "endtask", "enum", "event", "for", "force", "forever", "fork",
      "function", "generate", "genvar", "highz0", "highz1", "if", "ifnone",
      "initial", "inout", "input", "int", "integer", "join", "large",
      "localparam", "logic", "longint", "macromodule", "medium", "module",
      "nand", "negedge", "nmos", "nor", "not", "notif0", "notif1", "or",
      "output", "parameter", "pmos", "posedge", "primitive", "pull0",
      "pull1", "pulldown", "pullup", "rcmos", "real", "realtime", "reg",
      "release", "repeat", "rnmos", "rpmos", "rtran", "rtranif0",
      "rtranif1", "scalared", "shortint", "signed", "small", "specify",
      "specparam", "strong0", "strong1", "struct", "supply0", "supply1",
      "table", "task", "time", "tran", "tranif0", "tranif1", "tri",
      "tri0", "tri1", "triand", "trior", "trireg", "typedef", "unique",
      "unsigned", "vectored", "wait", "wand", "weak0", "weak1", "while",
      "wire", "wor", "xnor", "xor",
  };
  return kWords;
}

bool IsIdentStart(char c) {
  return std::isalpha(static_cast<unsigned char>(c)) || c == '_';
}

bool IsIdentChar(char c) {
  return std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '$';
}

bool IsSpace(char c) { return std::isspace(static_cast<unsigned char>(c)); }

std::size_t SkipToLineEnd(std::string_view s, std::size_t i) {
  while (i < s.size() && s[i] != '\n') {
    if (s[i] == '\\' && i + 1 < s.size() && s[i + 1] == '\n') {
      i += 2;
      continue;
    }
    ++i;
  }
  return i;
}

class Lexer {
 public:
  explicit Lexer(std::string_view src) : src_(src) {}

  std::vector<Token> Run() {
    while (pos_ < src_.size()) {
      char c = src_[pos_];
      if (IsSpace(c)) {
        ++pos_;
      } else if (StartsWith("//")) {
        pos_ = SkipToLineEnd(src_, pos_);
      } else if (StartsWith("/*")) {
        SkipPast("*/", pos_ + 2);
      } else if (StartsWith("(*") && !StartsWith("(*)")) {
        SkipPast("*)", pos_ + 2);
      } else if (c == '"') {
        LexString();
      } else if (c == '`') {
        LexDirective();
      } else if (c == '\\') {
        LexEscapedIdentifier();
      } else if (IsIdentStart(c)) {
        LexWord();
      } else if (c == '$') {
        std::size_t b = pos_++;
        while (pos_ < src_.size() && IsIdentChar(src_[pos_])) ++pos_;
        Push(TokenKind::kSystemName, b);
      } else if (std::isdigit(static_cast<unsigned char>(c)) ||
                 (c == '\'' && pos_ + 1 < src_.size() &&
                  std::string_view("sSdDhHoObB").find(src_[pos_ + 1]) !=
                      std::string_view::npos)) {
        LexNumber();
      } else {
        std::size_t b = pos_++;
        Push(TokenKind::kPunct, b);
      }
    }
    return std::move(tokens_);
  }

 private:
  bool StartsWith(std::string_view p) const {
    return src_.substr(pos_, p.size()) == p;
  }

  void SkipPast(std::string_view close, std::size_t from) {
    std::size_t e = src_.find(close, from);
    pos_ = e == std::string_view::npos ? src_.size() : e + close.size();
  }

  void Push(TokenKind kind, std::size_t begin) {
    tokens_.push_back(
        Token{kind, std::string(src_.substr(begin, pos_ - begin)), begin});
  }

  void LexString() {
    std::size_t b = pos_++;
    while (pos_ < src_.size() && src_[pos_] != '"' && src_[pos_] != '\n') {
      if (src_[pos_] == '\\') ++pos_;
      ++pos_;
    }
    if (pos_ < src_.size()) ++pos_;
    pos_ = std::min(pos_, src_.size());
    Push(TokenKind::kString, b);
  }

  void LexDirective() {
    std::size_t b = pos_++;
    while (pos_ < src_.size() && IsIdentChar(src_[pos_])) ++pos_;
    std::string_view name = src_.substr(b + 1, pos_ - b - 1);
    static constexpr std::array<std::string_view, 3> kWithArg = {
        "ifdef", "ifndef", "elsif"};
    static constexpr std::array<std::string_view, 4> kBare = {
        "else", "endif", "celldefine", "endcelldefine"};
    static constexpr std::array<std::string_view, 9> kLine = {
        "define",   "include", "timescale", "undef",  "default_nettype",
        "resetall", "line",    "pragma",    "begin_keywords"};
    if (std::find(kLine.begin(), kLine.end(), name) != kLine.end()) {
      pos_ = SkipToLineEnd(src_, pos_);
    } else if (std::find(kWithArg.begin(), kWithArg.end(), name) !=
               kWithArg.end()) {
      while (pos_ < src_.size() && IsSpace(src_[pos_])) ++pos_;
      while (pos_ < src_.size() && IsIdentChar(src_[pos_])) ++pos_;
    } else if (std::find(kBare.begin(), kBare.end(), name) == kBare.end()) {
      Push(TokenKind::kMacro, b);
    }
  }

  void LexEscapedIdentifier() {
    std::size_t b = pos_++;
    while (pos_ < src_.size() && !IsSpace(src_[pos_])) ++pos_;
    Push(TokenKind::kIdentifier, b);
  }

  void LexWord() {
    std::size_t b = pos_;
    while (pos_ < src_.size() && IsIdentChar(src_[pos_])) ++pos_;
    std::string_view w = src_.substr(b, pos_ - b);
    Push(IsKeyword(w) ? TokenKind::kKeyword : TokenKind::kIdentifier, b);
  }

  void LexNumber() {
    std::size_t b = pos_;
    auto digits = [&] {
      while (pos_ < src_.size() &&
             (std::isxdigit(static_cast<unsigned char>(src_[pos_])) ||
              std::string_view("_xXzZ?.").find(src_[pos_]) !=
                  std::string_view::npos)) {
        ++pos_;
      }
    };
    if (src_[pos_] != '\'') {
      while (pos_ < src_.size() &&
             (std::isdigit(static_cast<unsigned char>(src_[pos_])) ||
              src_[pos_] == '_' || src_[pos_] == '.')) {
        ++pos_;
      }
    }
    std::size_t save = pos_;
    while (pos_ < src_.size() && (src_[pos_] == ' ' || src_[pos_] == '\t')) {
      ++pos_;
    }
    if (pos_ + 1 < src_.size() && src_[pos_] == '\'') {
      ++pos_;
      if (pos_ < src_.size() && (src_[pos_] == 's' || src_[pos_] == 'S')) {
        ++pos_;
      }
      if (pos_ < src_.size() && std::string_view("dDhHoObB").find(
                                    src_[pos_]) != std::string_view::npos) {
        ++pos_;
        while (pos_ < src_.size() && IsSpace(src_[pos_])) ++pos_;
        digits();
      } else {
        pos_ = save;
      }
    } else {
      pos_ = save;
    }
    Push(TokenKind::kNumber, b);
  }

  std::string_view src_;
  std::size_t pos_ = 0;
  std::vector<Token> tokens_;
};

bool IsName(const Token& t) { return t.kind == TokenKind::kIdentifier; }

bool IsPunct(const Token& t, char c) {
  return t.kind == TokenKind::kPunct && t.text.size() == 1 && t.text[0] == c;
}

// Index one past the bracket group opening at `i`, or tokens.size().
std::size_t SkipGroup(const std::vector<Token>& toks, std::size_t i,
                      char open, char close) {
  int depth = 0;
  for (; i < toks.size(); ++i) {
    if (IsPunct(toks[i], open)) ++depth;
    if (IsPunct(toks[i], close) && --depth == 0) return i + 1;
  }
  return toks.size();
}

bool IsStatementBoundary(const Token& t) {
  if (t.kind == TokenKind::kPunct) {
    return t.text == ";" || t.text == ")" || t.text == ":";
  }
  if (t.kind == TokenKind::kKeyword) {
    static const std::unordered_set<std::string_view> kB = {
        "begin", "end", "generate", "endgenerate", "else", "endcase",
        "endfunction", "endtask"};
    return kB.contains(t.text);
  }
  return false;
}

// Tries to read `<inst> [range] ( ... )` at `j`; returns the index after the
// port group, or 0 on mismatch.
std::size_t ReadInstanceTail(const std::vector<Token>& toks, std::size_t j,
                             std::string* inst_name) {
  if (j >= toks.size() || !IsName(toks[j])) return 0;
  *inst_name = toks[j].text;
  ++j;
  if (j < toks.size() && IsPunct(toks[j], '[')) j = SkipGroup(toks, j, '[', ']');
  if (j >= toks.size() || !IsPunct(toks[j], '(')) return 0;
  return SkipGroup(toks, j, '(', ')');
}

void ScanBody(const std::vector<Token>& toks, std::size_t begin,
              std::size_t end, ModuleDecl* decl) {
  for (std::size_t i = begin; i < end; ++i) {
    if (!IsName(toks[i])) continue;
    if (i > begin && !IsStatementBoundary(toks[i - 1])) continue;
    std::size_t j = i + 1;
    if (j < end && IsPunct(toks[j], '#')) {
      ++j;
      if (j < end && IsPunct(toks[j], '(')) {
        j = SkipGroup(toks, j, '(', ')');
      } else if (j < end) {
        ++j;
      }
    }
    std::string inst;
    std::size_t after = ReadInstanceTail(toks, j, &inst);
    if (after == 0 || after > end) continue;
    decl->instances.push_back({toks[i].text, inst});
    // `mod a(...), b(...);`
    while (after < end && IsPunct(toks[after], ',')) {
      std::size_t next = ReadInstanceTail(toks, after + 1, &inst);
      if (next == 0 || next > end) break;
      decl->instances.push_back({toks[i].text, inst});
      after = next;
    }
    i = after - 1;
  }
}

}  // namespace

bool IsKeyword(std::string_view word) { return Keywords().contains(word); }

std::vector<Token> Tokenize(std::string_view source) {
  return Lexer(source).Run();
}

std::vector<ModuleDecl> ScanModules(std::string_view source) {
  std::vector<Token> toks = Tokenize(source);
  std::vector<ModuleDecl> out;
  std::size_t i = 0;
  while (i < toks.size()) {
    const Token& t = toks[i];
    if (t.kind != TokenKind::kKeyword ||
        (t.text != "module" && t.text != "macromodule")) {
      ++i;
      continue;
    }
    ModuleDecl decl;
    decl.begin_offset = t.offset;
    std::size_t j = i + 1;
    if (j < toks.size() && toks[j].kind == TokenKind::kKeyword &&
        toks[j].text == "automatic") {
      ++j;
    }
    if (j >= toks.size() || !IsName(toks[j])) {
      i = j;
      continue;
    }
    decl.name = toks[j].text;
    // Header runs to the first `;` outside brackets.
    int depth = 0;
    std::size_t h = i;
    for (; h < toks.size(); ++h) {
      decl.header_tokens.push_back(toks[h].text);
      if (IsPunct(toks[h], '(') || IsPunct(toks[h], '[')) ++depth;
      if (IsPunct(toks[h], ')') || IsPunct(toks[h], ']')) --depth;
      if (depth <= 0 && IsPunct(toks[h], ';')) break;
    }
    decl.header_end_offset =
        h < toks.size() ? toks[h].offset + 1 : source.size();
    std::size_t body = std::min(h + 1, toks.size());
    std::size_t e = body;
    while (e < toks.size() && !(toks[e].kind == TokenKind::kKeyword &&
                                toks[e].text == "endmodule")) {
      ++e;
    }
    decl.end_keyword_offset = e < toks.size() ? toks[e].offset : source.size();
    ScanBody(toks, body, e, &decl);
    out.push_back(std::move(decl));
    i = e + 1;
  }
  return out;
}

}  // namespace cradle::verilog
