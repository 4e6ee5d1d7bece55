#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>
#include <string>
#include <string_view>

namespace lseq {

/// Interned identifier. Comparison is by id; the table lives for the whole process.
class Symbol {
 public:
  Symbol() = default;
  explicit Symbol(std::string_view text);

  const std::string& str() const;
  std::uint32_t id() const { return id_; }
  bool empty() const { return id_ == 0; }

  friend bool operator==(Symbol a, Symbol b) { return a.id_ == b.id_; }
  friend auto operator<=>(Symbol a, Symbol b) { return a.id_ <=> b.id_; }

 private:
  std::uint32_t id_ = 0;
};

struct Term;
using TermPtr = std::unique_ptr<Term>;

/// A node of the interpreter's operator tree. Terms are strict trees: every
/// node has exactly one owner, and copying a subterm deep-copies it.
struct Term {
  enum class Kind : std::uint8_t {
    Apply,
    Name,         // function reference, resolved in `scope` at reduction time
    Constructor,  // includes `:` and `[]`
    Integer,
    Text,
    Local,        // pattern variable slot; appears only in rule-body templates
  };

  Kind kind;
  Symbol symbol;  // Name, Constructor
  Symbol scope;   // Name: module whose imports govern resolution
  std::int64_t integer = 0;  // Integer value, Local slot
  std::string text;
  TermPtr function;  // Apply
  TermPtr argument;  // Apply

  explicit Term(Kind k) : kind(k) {}
  ~Term();
  Term(const Term&) = delete;
  Term& operator=(const Term&) = delete;

  bool is_apply() const { return kind == Kind::Apply; }
  bool is_constructor(Symbol s) const { return kind == Kind::Constructor && symbol == s; }
};

TermPtr make_apply(TermPtr function, TermPtr argument);
TermPtr make_name(Symbol name, Symbol scope = {});
TermPtr make_name(std::string_view name, std::string_view scope = {});
TermPtr make_constructor(Symbol name);
TermPtr make_constructor(std::string_view name);
TermPtr make_integer(std::int64_t value);
TermPtr make_text(std::string value);
TermPtr make_local(std::size_t slot);

/// Applies `function` to each of `args` in turn (left-associated spine).
template <typename... Args>
TermPtr make_call(TermPtr function, Args&&... args) {
  ((function = make_apply(std::move(function), std::forward<Args>(args))), ...);
  return function;
}

TermPtr clone(const Term& term);
std::size_t term_node_count(const Term& term);

/// Equality of shape and payload. Name scopes are ignored.
bool structurally_equal(const Term& a, const Term& b);

// Well-known symbols.
namespace sym {
Symbol cons();
Symbol nil();
Symbol true_();
Symbol false_();
}  // namespace sym

}  // namespace lseq
