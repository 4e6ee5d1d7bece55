#include "lseq/term.hpp"

#include <deque>
#include <mutex>
#include <unordered_map>
#include <utility>
#include <vector>

namespace lseq {
namespace {

struct SymbolTable {
  std::mutex mutex;
  std::deque<std::string> names{std::string{}};
  std::unordered_map<std::string_view, std::uint32_t> ids{{std::string_view{}, 0}};
};

SymbolTable& symbols() {
  static SymbolTable table;
  return table;
}

}  // namespace

Symbol::Symbol(std::string_view text) {
  auto& table = symbols();
  std::lock_guard lock(table.mutex);
  if (auto it = table.ids.find(text); it != table.ids.end()) {
    id_ = it->second;
    return;
  }
  id_ = static_cast<std::uint32_t>(table.names.size());
  const auto& stored = table.names.emplace_back(text);
  table.ids.emplace(stored, id_);
}

const std::string& Symbol::str() const {
  auto& table = symbols();
  std::lock_guard lock(table.mutex);
  return table.names[id_];
}

// Iterative teardown so that long lists do not exhaust the stack.
Term::~Term() {
  if (!function && !argument) return;
  std::vector<TermPtr> pending;
  if (function) pending.push_back(std::move(function));
  if (argument) pending.push_back(std::move(argument));
  while (!pending.empty()) {
    TermPtr node = std::move(pending.back());
    pending.pop_back();
    if (node->function) pending.push_back(std::move(node->function));
    if (node->argument) pending.push_back(std::move(node->argument));
  }
}

TermPtr make_apply(TermPtr function, TermPtr argument) {
  auto t = std::make_unique<Term>(Term::Kind::Apply);
  t->function = std::move(function);
  t->argument = std::move(argument);
  return t;
}

TermPtr make_name(Symbol name, Symbol scope) {
  auto t = std::make_unique<Term>(Term::Kind::Name);
  t->symbol = name;
  t->scope = scope;
  return t;
}

TermPtr make_name(std::string_view name, std::string_view scope) {
  return make_name(Symbol(name), Symbol(scope));
}

TermPtr make_constructor(Symbol name) {
  auto t = std::make_unique<Term>(Term::Kind::Constructor);
  t->symbol = name;
  return t;
}

TermPtr make_constructor(std::string_view name) { return make_constructor(Symbol(name)); }

TermPtr make_integer(std::int64_t value) {
  auto t = std::make_unique<Term>(Term::Kind::Integer);
  t->integer = value;
  return t;
}

TermPtr make_text(std::string value) {
  auto t = std::make_unique<Term>(Term::Kind::Text);
  t->text = std::move(value);
  return t;
}

TermPtr make_local(std::size_t slot) {
  auto t = std::make_unique<Term>(Term::Kind::Local);
  t->integer = static_cast<std::int64_t>(slot);
  return t;
}

namespace {

TermPtr shallow_copy(const Term& src) {
  auto t = std::make_unique<Term>(src.kind);
  t->symbol = src.symbol;
  t->scope = src.scope;
  t->integer = src.integer;
  t->text = src.text;
  return t;
}

}  // namespace

TermPtr clone(const Term& term) {
  TermPtr root = shallow_copy(term);
  std::vector<std::pair<const Term*, Term*>> work{{&term, root.get()}};
  while (!work.empty()) {
    auto [src, dst] = work.back();
    work.pop_back();
    if (src->function) {
      dst->function = shallow_copy(*src->function);
      work.emplace_back(src->function.get(), dst->function.get());
    }
    if (src->argument) {
      dst->argument = shallow_copy(*src->argument);
      work.emplace_back(src->argument.get(), dst->argument.get());
    }
  }
  return root;
}

std::size_t term_node_count(const Term& term) {
  std::size_t count = 0;
  std::vector<const Term*> work{&term};
  while (!work.empty()) {
    const Term* t = work.back();
    work.pop_back();
    ++count;
    if (t->function) work.push_back(t->function.get());
    if (t->argument) work.push_back(t->argument.get());
  }
  return count;
}

bool structurally_equal(const Term& a, const Term& b) {
  std::vector<std::pair<const Term*, const Term*>> work{{&a, &b}};
  while (!work.empty()) {
    auto [x, y] = work.back();
    work.pop_back();
    if (x->kind != y->kind) return false;
    switch (x->kind) {
      case Term::Kind::Apply:
        work.emplace_back(x->function.get(), y->function.get());
        work.emplace_back(x->argument.get(), y->argument.get());
        break;
      case Term::Kind::Name:
      case Term::Kind::Constructor:
        if (x->symbol != y->symbol) return false;
        break;
      case Term::Kind::Integer:
      case Term::Kind::Local:
        if (x->integer != y->integer) return false;
        break;
      case Term::Kind::Text:
        if (x->text != y->text) return false;
        break;
    }
  }
  return true;
}

namespace sym {
Symbol cons() {
  static const Symbol s(":");
  return s;
}
Symbol nil() {
  static const Symbol s("[]");
  return s;
}
Symbol true_() {
  static const Symbol s("True");
  return s;
}
Symbol false_() {
  static const Symbol s("False");
  return s;
}
}  // namespace sym

}  // namespace lseq
