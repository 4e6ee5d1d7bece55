#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace lseq {

struct SourceSpan {
  std::string module;
  std::size_t start = 0;
  std::size_t end = 0;

  auto operator<=>(const SourceSpan&) const = default;
};

struct Diagnostic {
  SourceSpan span;
  std::string message;
};

std::string to_string(const Diagnostic& d);

enum class TokenKind {
  Identifier,
  Constructor,
  Integer,
  String,
  Operator,
  Punctuation,
};

struct Token {
  TokenKind kind;
  std::string text;  // raw source slice
  SourceSpan span;
};

class LexError : public std::runtime_error {
 public:
  explicit LexError(Diagnostic d);
  const Diagnostic& diagnostic() const { return diag_; }

 private:
  Diagnostic diag_;
};

class ParseError : public std::runtime_error {
 public:
  explicit ParseError(Diagnostic d);
  const Diagnostic& diagnostic() const { return diag_; }

 private:
  Diagnostic diag_;
};

/// Splits source into tokens. Whitespace and `--` line comments are skipped.
std::vector<Token> tokenize(std::string_view source, std::string_view module_name = {});

// ---------------------------------------------------------------------------
// Surface syntax

struct Expr;
using ExprPtr = std::unique_ptr<Expr>;

struct Expr {
  struct Var { std::string name; };           // identifier or parenthesized operator
  struct Con { std::string name; };           // constructor, including `[]` and `:`
  struct Int { std::int64_t value; };
  struct Str { std::string value; };
  struct App { ExprPtr function; std::vector<ExprPtr> args; };
  struct Infix { std::string op; ExprPtr lhs; ExprPtr rhs; };
  struct List { std::vector<ExprPtr> items; };
  struct Paren { ExprPtr inner; };

  std::variant<Var, Con, Int, Str, App, Infix, List, Paren> node;
  SourceSpan span;
};

struct Pattern {
  struct Variable { std::string name; std::size_t slot; };
  struct Wildcard {};
  struct Int { std::int64_t value; };
  struct Str { std::string value; };
  struct Constructor { std::string name; std::vector<Pattern> args; };

  std::variant<Variable, Wildcard, Int, Str, Constructor> node;
};

struct Rule {
  std::string function;
  std::vector<Pattern> params;
  ExprPtr body;
  SourceSpan span;
  std::size_t slot_count = 0;  // number of distinct pattern variables
};

struct ParsedModule {
  std::string name;
  std::optional<std::vector<std::string>> exports;  // nullopt exports everything
  std::vector<std::string> imports;
  std::vector<Rule> rules;
  std::string source;
};

/// Parses a whole module. A `module Name where` header is optional; without
/// it the module takes `expected_name` and exports all of its definitions.
ParsedModule parse_module(std::string_view source, std::string_view expected_name);

/// Parses a standalone expression (no trailing semicolon).
ExprPtr parse_expression(std::string_view source, std::string_view module_name = {});

// Fixed operator table.
enum class Assoc { Left, Right, None };

struct OperatorInfo {
  int precedence;
  Assoc assoc;
};

std::optional<OperatorInfo> operator_info(std::string_view op);

bool is_constructor_name(std::string_view name);

}  // namespace lseq
