#include "lseq/syntax.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <limits>
#include <map>
#include <set>

namespace lseq {

std::string to_string(const Diagnostic& d) {
  std::string out = d.span.module.empty() ? std::string("<input>") : d.span.module;
  out += ":" + std::to_string(d.span.start) + "-" + std::to_string(d.span.end) + ": " + d.message;
  return out;
}

LexError::LexError(Diagnostic d) : std::runtime_error(to_string(d)), diag_(std::move(d)) {}
ParseError::ParseError(Diagnostic d) : std::runtime_error(to_string(d)), diag_(std::move(d)) {}

bool is_constructor_name(std::string_view name) {
  if (name.empty()) return false;
  if (name == ":" || name == "[]") return true;
  return name.front() >= 'A' && name.front() <= 'Z';
}

std::optional<OperatorInfo> operator_info(std::string_view op) {
  static const std::map<std::string_view, OperatorInfo> table{
      {":", {5, Assoc::Right}},  {"++", {5, Assoc::Right}}, {"=:=", {5, Assoc::Right}},
      {"+", {6, Assoc::Left}},   {"-", {6, Assoc::Left}},   {"*", {7, Assoc::Left}},
      {"div", {7, Assoc::Left}}, {"mod", {7, Assoc::Left}}, {"==", {4, Assoc::None}},
      {"/=", {4, Assoc::None}},  {"<", {4, Assoc::None}},   {"<=", {4, Assoc::None}},
      {">", {4, Assoc::None}},   {">=", {4, Assoc::None}},
  };
  if (auto it = table.find(op); it != table.end()) return it->second;
  return std::nullopt;
}

// ---------------------------------------------------------------------------
// Lexer

namespace {

bool is_lower(char c) { return (c >= 'a' && c <= 'z') || c == '_'; }
bool is_upper(char c) { return c >= 'A' && c <= 'Z'; }
bool is_digit(char c) { return c >= '0' && c <= '9'; }
bool is_ident_char(char c) { return is_lower(c) || is_upper(c) || is_digit(c) || c == '\''; }
bool is_symbol_char(char c) {
  static constexpr std::string_view symbols = "!#$%&*+./<=>?@\\^|-~:";
  return symbols.find(c) != std::string_view::npos;
}
bool is_punct(char c) {
  static constexpr std::string_view punct = "()[],;`";
  return punct.find(c) != std::string_view::npos;
}

}  // namespace

std::vector<Token> tokenize(std::string_view source, std::string_view module_name) {
  std::vector<Token> tokens;
  const std::string module(module_name);
  std::size_t i = 0;
  const std::size_t n = source.size();

  auto span = [&](std::size_t from, std::size_t to) { return SourceSpan{module, from, to}; };
  auto emit = [&](TokenKind kind, std::size_t from, std::size_t to) {
    tokens.push_back(Token{kind, std::string(source.substr(from, to - from)), span(from, to)});
  };

  while (i < n) {
    const char c = source[i];
    if (c == ' ' || c == '\t' || c == '\n' || c == '\r') {
      ++i;
      continue;
    }
    const std::size_t start = i;
    if (is_lower(c) || is_upper(c)) {
      while (i < n && is_ident_char(source[i])) ++i;
      emit(is_upper(c) ? TokenKind::Constructor : TokenKind::Identifier, start, i);
    } else if (is_digit(c)) {
      while (i < n && is_digit(source[i])) ++i;
      std::int64_t value = 0;
      auto [ptr, ec] = std::from_chars(source.data() + start, source.data() + i, value);
      if (ec != std::errc{}) throw LexError({span(start, i), "integer literal out of range"});
      emit(TokenKind::Integer, start, i);
    } else if (c == '"') {
      ++i;
      bool closed = false;
      while (i < n) {
        if (source[i] == '\n') break;
        if (source[i] == '\\') {
          if (i + 1 >= n) break;
          const char e = source[i + 1];
          if (e != '\\' && e != '"' && e != 'n') {
            throw LexError({span(i, i + 2), "unsupported escape sequence"});
          }
          i += 2;
          continue;
        }
        if (source[i] == '"') {
          ++i;
          closed = true;
          break;
        }
        ++i;
      }
      if (!closed) throw LexError({span(start, i), "unterminated string literal"});
      emit(TokenKind::String, start, i);
    } else if (is_symbol_char(c)) {
      while (i < n && is_symbol_char(source[i])) ++i;
      const auto op = source.substr(start, i - start);
      if (op.size() >= 2 && std::all_of(op.begin(), op.end(), [](char ch) { return ch == '-'; })) {
        while (i < n && source[i] != '\n') ++i;
        continue;
      }
      emit(TokenKind::Operator, start, i);
    } else if (is_punct(c)) {
      ++i;
      emit(TokenKind::Punctuation, start, i);
    } else {
      throw LexError({span(start, start + 1), "illegal character"});
    }
  }
  return tokens;
}

// ---------------------------------------------------------------------------
// Parser

namespace {

std::string unescape(std::string_view raw) {
  std::string out;
  for (std::size_t i = 1; i + 1 < raw.size(); ++i) {
    if (raw[i] == '\\') {
      ++i;
      out += raw[i] == 'n' ? '\n' : raw[i];
    } else {
      out += raw[i];
    }
  }
  return out;
}

const std::set<std::string_view>& unsupported_keywords() {
  static const std::set<std::string_view> words{
      "let",  "in",   "case",    "of",      "do",       "if",     "then",  "else",
      "data", "type", "class",   "instance", "newtype", "deriving", "infix", "infixl",
      "infixr", "where", "module", "import"};
  return words;
}

std::string unsupported_operator_message(std::string_view op) {
  if (op == "::") return "type signatures are not supported";
  if (op == "|") return "guards and list comprehensions are not supported";
  if (op == "\\") return "lambda expressions are not supported";
  if (op == "..") return "arithmetic sequences are not supported";
  if (op == "<-") return "do notation and list comprehensions are not supported";
  if (op == "->") return "case expressions and lambdas are not supported";
  return "unknown operator '" + std::string(op) + "' (custom infix operators are not supported)";
}

template <typename T>
ExprPtr make_expr(T node, SourceSpan span) {
  auto e = std::make_unique<Expr>();
  e->node = std::move(node);
  e->span = std::move(span);
  return e;
}

SourceSpan join(const SourceSpan& a, const SourceSpan& b) {
  return SourceSpan{a.module, std::min(a.start, b.start), std::max(a.end, b.end)};
}

class Parser {
 public:
  Parser(std::string_view source, std::string_view module_name)
      : source_(source), module_(module_name), tokens_(tokenize(source, module_name)) {}

  ParsedModule parse_module(std::string_view expected_name) {
    ParsedModule result;
    result.name = std::string(expected_name);
    result.source = std::string(source_);

    if (at_identifier("module")) {
      advance();
      const Token& name = expect(TokenKind::Constructor, "expected module name");
      result.name = name.text;
      if (at_punct("(")) result.exports = parse_export_list();
      if (!at_identifier("where")) fail(peek_span(), "expected 'where' after module header");
      advance();
    }
    while (at_identifier("import")) {
      advance();
      const Token& name = expect(TokenKind::Constructor, "expected module name after 'import'");
      result.imports.push_back(name.text);
      expect_punct(";", "expected ';' after import");
    }
    while (!at_end()) {
      if (at_punct(";")) {
        advance();
        continue;
      }
      if (at_identifier("import")) fail(peek_span(), "imports must precede all declarations");
      result.rules.push_back(parse_rule());
    }
    return result;
  }

  ExprPtr parse_standalone_expression() {
    auto e = parse_expr();
    if (!at_end()) fail(peek_span(), "unexpected token after expression");
    return e;
  }

 private:
  // -- token helpers ---------------------------------------------------------

  bool at_end() const { return pos_ >= tokens_.size(); }
  const Token* peek(std::size_t ahead = 0) const {
    return pos_ + ahead < tokens_.size() ? &tokens_[pos_ + ahead] : nullptr;
  }
  SourceSpan peek_span() const {
    if (const Token* t = peek()) return t->span;
    return SourceSpan{module_, source_.size(), source_.size()};
  }
  const Token& advance() { return tokens_[pos_++]; }

  bool at(TokenKind kind, std::string_view text, std::size_t ahead = 0) const {
    const Token* t = peek(ahead);
    return t && t->kind == kind && t->text == text;
  }
  bool at_identifier(std::string_view text) const { return at(TokenKind::Identifier, text); }
  bool at_punct(std::string_view text, std::size_t ahead = 0) const {
    return at(TokenKind::Punctuation, text, ahead);
  }
  bool at_kind(TokenKind kind, std::size_t ahead = 0) const {
    const Token* t = peek(ahead);
    return t && t->kind == kind;
  }

  [[noreturn]] void fail(SourceSpan span, std::string message) const {
    throw ParseError({std::move(span), std::move(message)});
  }

  const Token& expect(TokenKind kind, std::string_view message) {
    if (!at_kind(kind)) fail(peek_span(), std::string(message));
    return advance();
  }
  const Token& expect_punct(std::string_view p, std::string_view message) {
    if (!at_punct(p)) fail(peek_span(), std::string(message));
    return advance();
  }

  // -- module structure ------------------------------------------------------

  std::vector<std::string> parse_export_list() {
    std::vector<std::string> names;
    advance();  // (
    while (!at_punct(")")) {
      if (at_kind(TokenKind::Identifier)) {
        names.push_back(advance().text);
      } else if (at_punct("(") && at_kind(TokenKind::Operator, 1) && at_punct(")", 2)) {
        advance();
        names.push_back(advance().text);
        advance();
      } else {
        fail(peek_span(), "expected exported identifier");
      }
      if (at_punct(",")) {
        advance();
      } else if (!at_punct(")")) {
        fail(peek_span(), "expected ',' or ')' in export list");
      }
    }
    advance();  // )
    return names;
  }

  Rule parse_rule() {
    const SourceSpan begin = peek_span();
    auto lhs = parse_expr();
    if (!at(TokenKind::Operator, "=")) fail(peek_span(), "expected '=' in declaration");
    advance();
    auto body = parse_expr();
    if (!at_punct(";")) fail(peek_span(), "expected ';' at end of declaration");
    const SourceSpan end = advance().span;

    Rule rule;
    rule.span = join(begin, end);
    rule.body = std::move(body);
    std::map<std::string, std::size_t> slots;
    split_lhs(*lhs, rule, slots);
    rule.slot_count = slots.size();
    return rule;
  }

  void split_lhs(const Expr& lhs, Rule& rule, std::map<std::string, std::size_t>& slots) {
    if (const auto* infix = std::get_if<Expr::Infix>(&lhs.node)) {
      if (is_constructor_name(infix->op)) fail(lhs.span, "cannot define a constructor");
      rule.function = infix->op;
      rule.params.push_back(to_pattern(*infix->lhs, slots));
      rule.params.push_back(to_pattern(*infix->rhs, slots));
      return;
    }
    const Expr* head = &lhs;
    std::vector<const Expr*> args;
    if (const auto* app = std::get_if<Expr::App>(&lhs.node)) {
      head = app->function.get();
      for (const auto& a : app->args) args.push_back(a.get());
    }
    const auto* var = std::get_if<Expr::Var>(&head->node);
    if (!var) fail(head->span, "left-hand side must start with a function name");
    rule.function = var->name;
    for (const Expr* a : args) rule.params.push_back(to_pattern(*a, slots));
  }

  Pattern to_pattern(const Expr& e, std::map<std::string, std::size_t>& slots) {
    return std::visit(
        [&](const auto& node) -> Pattern {
          using T = std::decay_t<decltype(node)>;
          if constexpr (std::is_same_v<T, Expr::Var>) {
            if (node.name == "_") return Pattern{Pattern::Wildcard{}};
            if (!is_lower(node.name.front())) fail(e.span, "operator in pattern position");
            auto [it, inserted] = slots.emplace(node.name, slots.size());
            if (!inserted) fail(e.span, "variable '" + node.name + "' bound twice in one rule");
            return Pattern{Pattern::Variable{node.name, it->second}};
          } else if constexpr (std::is_same_v<T, Expr::Con>) {
            return Pattern{Pattern::Constructor{node.name, {}}};
          } else if constexpr (std::is_same_v<T, Expr::Int>) {
            return Pattern{Pattern::Int{node.value}};
          } else if constexpr (std::is_same_v<T, Expr::Str>) {
            return Pattern{Pattern::Str{node.value}};
          } else if constexpr (std::is_same_v<T, Expr::Paren>) {
            return to_pattern(*node.inner, slots);
          } else if constexpr (std::is_same_v<T, Expr::App>) {
            const auto* con = std::get_if<Expr::Con>(&node.function->node);
            if (!con) fail(e.span, "only constructors may be applied in patterns");
            Pattern::Constructor p{con->name, {}};
            for (const auto& a : node.args) p.args.push_back(to_pattern(*a, slots));
            return Pattern{std::move(p)};
          } else if constexpr (std::is_same_v<T, Expr::Infix>) {
            if (node.op != ":") fail(e.span, "only ':' may appear infix in patterns");
            Pattern::Constructor p{":", {}};
            p.args.push_back(to_pattern(*node.lhs, slots));
            p.args.push_back(to_pattern(*node.rhs, slots));
            return Pattern{std::move(p)};
          } else {
            static_assert(std::is_same_v<T, Expr::List>);
            Pattern result{Pattern::Constructor{"[]", {}}};
            std::vector<Pattern> items;
            for (const auto& item : node.items) items.push_back(to_pattern(*item, slots));
            for (auto it = items.rbegin(); it != items.rend(); ++it) {
              Pattern::Constructor cell{":", {}};
              cell.args.push_back(std::move(*it));
              cell.args.push_back(std::move(result));
              result = Pattern{std::move(cell)};
            }
            return result;
          }
        },
        e.node);
  }

  // -- expressions -----------------------------------------------------------

  // Returns the operator at the cursor, if any, along with its fixity.
  std::optional<std::pair<std::string, OperatorInfo>> peek_operator() const {
    const Token* t = peek();
    if (!t) return std::nullopt;
    if (t->kind == TokenKind::Operator) {
      if (t->text == "=") return std::nullopt;
      auto info = operator_info(t->text);
      if (!info) fail(t->span, unsupported_operator_message(t->text));
      return std::pair{t->text, *info};
    }
    if (t->kind == TokenKind::Punctuation && t->text == "`") {
      const Token* name = peek(1);
      if (!name || name->kind != TokenKind::Identifier || !at_punct("`", 2)) {
        fail(t->span, "malformed backtick operator");
      }
      auto info = operator_info(name->text).value_or(OperatorInfo{9, Assoc::Left});
      return std::pair{name->text, info};
    }
    return std::nullopt;
  }

  void consume_operator() {
    if (at_punct("`")) {
      pos_ += 3;
    } else {
      ++pos_;
    }
  }

  ExprPtr parse_expr(int min_prec = 0) {
    auto lhs = parse_application();
    while (auto op = peek_operator()) {
      const auto& [name, info] = *op;
      if (info.precedence < min_prec) break;
      const SourceSpan op_span = peek_span();
      consume_operator();
      if (at_punct(")")) fail(op_span, "operator sections are not supported");
      const int next_min = info.assoc == Assoc::Right ? info.precedence : info.precedence + 1;
      auto rhs = parse_expr(next_min);
      SourceSpan span = join(lhs->span, rhs->span);
      lhs = make_expr(Expr::Infix{name, std::move(lhs), std::move(rhs)}, span);
      if (info.assoc == Assoc::None) {
        if (auto next = peek_operator(); next && next->second.precedence == info.precedence) {
          fail(peek_span(), "non-associative operator '" + next->first + "' cannot be chained");
        }
      }
    }
    return lhs;
  }

  bool at_atom_start() const {
    const Token* t = peek();
    if (!t) return false;
    switch (t->kind) {
      case TokenKind::Identifier:
        if (unsupported_keywords().count(t->text)) {
          fail(t->span, "'" + t->text + "' is not supported");
        }
        return true;
      case TokenKind::Constructor:
      case TokenKind::Integer:
      case TokenKind::String:
        return true;
      case TokenKind::Punctuation:
        return t->text == "(" || t->text == "[";
      case TokenKind::Operator:
        return false;
    }
    return false;
  }

  ExprPtr parse_application() {
    if (!at_atom_start()) {
      if (const Token* t = peek(); t && t->kind == TokenKind::Operator && t->text != "=") {
        if (!operator_info(t->text)) fail(t->span, unsupported_operator_message(t->text));
        if (t->text == "-") fail(t->span, "unary minus is not supported; use negate");
      }
      fail(peek_span(), at_end() ? "unexpected end of input" : "expected expression");
    }
    auto head = parse_atom();
    std::vector<ExprPtr> args;
    while (at_atom_start()) args.push_back(parse_atom());
    if (args.empty()) return head;
    SourceSpan span = join(head->span, args.back()->span);
    return make_expr(Expr::App{std::move(head), std::move(args)}, span);
  }

  ExprPtr parse_atom() {
    const Token& t = advance();
    switch (t.kind) {
      case TokenKind::Identifier:
        return make_expr(Expr::Var{t.text}, t.span);
      case TokenKind::Constructor:
        return make_expr(Expr::Con{t.text}, t.span);
      case TokenKind::Integer: {
        std::int64_t v = 0;
        std::from_chars(t.text.data(), t.text.data() + t.text.size(), v);
        return make_expr(Expr::Int{v}, t.span);
      }
      case TokenKind::String:
        return make_expr(Expr::Str{unescape(t.text)}, t.span);
      default:
        break;
    }
    if (t.text == "(") return parse_paren(t.span);
    return parse_list(t.span);
  }

  ExprPtr parse_paren(const SourceSpan& open) {
    // (op)
    if (at_kind(TokenKind::Operator) && at_punct(")", 1)) {
      const Token& op = advance();
      const SourceSpan close = advance().span;
      if (!operator_info(op.text)) fail(op.span, unsupported_operator_message(op.text));
      if (op.text == ":") return make_expr(Expr::Con{":"}, join(open, close));
      return make_expr(Expr::Var{op.text}, join(open, close));
    }
    // (-n): negative integer literal
    if (at(TokenKind::Operator, "-") && at_kind(TokenKind::Integer, 1) && at_punct(")", 2)) {
      advance();
      const Token& digits = advance();
      const SourceSpan close = advance().span;
      std::int64_t v = 0;
      std::from_chars(digits.text.data(), digits.text.data() + digits.text.size(), v);
      return make_expr(Expr::Int{-v}, join(open, close));
    }
    if (at_kind(TokenKind::Operator) && !at(TokenKind::Operator, "=")) {
      if (operator_info(peek()->text)) fail(peek_span(), "operator sections are not supported");
    }
    if (at_punct(")")) fail(peek_span(), "unit and tuples are not supported");
    auto inner = parse_expr();
    if (at_punct(",")) fail(peek_span(), "tuples are not supported");
    const SourceSpan close = expect_punct(")", "expected ')'").span;
    return make_expr(Expr::Paren{std::move(inner)}, join(open, close));
  }

  ExprPtr parse_list(const SourceSpan& open) {
    if (at_punct("]")) {
      const SourceSpan close = advance().span;
      return make_expr(Expr::Con{"[]"}, join(open, close));
    }
    std::vector<ExprPtr> items;
    for (;;) {
      items.push_back(parse_expr());
      if (at_punct(",")) {
        advance();
        continue;
      }
      if (at_punct("]")) break;
      if (const Token* t = peek(); t && t->kind == TokenKind::Operator) {
        fail(t->span, unsupported_operator_message(t->text));
      }
      fail(peek_span(), "expected ',' or ']' in list");
    }
    const SourceSpan close = advance().span;
    return make_expr(Expr::List{std::move(items)}, join(open, close));
  }

  std::string_view source_;
  std::string module_;
  std::vector<Token> tokens_;
  std::size_t pos_ = 0;
};

}  // namespace

ParsedModule parse_module(std::string_view source, std::string_view expected_name) {
  Parser parser(source, expected_name);
  return parser.parse_module(expected_name);
}

ExprPtr parse_expression(std::string_view source, std::string_view module_name) {
  Parser parser(source, module_name);
  return parser.parse_standalone_expression();
}

}  // namespace lseq
