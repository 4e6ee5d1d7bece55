#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

#include "lseq/syntax.hpp"
#include "lseq/term.hpp"

namespace lseq {

/// A pattern with names interned for fast matching.
struct CompiledPattern {
  enum class Kind { Variable, Wildcard, Integer, Text, Constructor };
  Kind kind = Kind::Wildcard;
  std::size_t slot = 0;
  std::int64_t integer = 0;
  std::string text;
  Symbol constructor;
  std::vector<CompiledPattern> args;
};

CompiledPattern compile_pattern(const Pattern& pattern);

struct CompiledRule {
  std::vector<CompiledPattern> params;
  TermPtr body;  // template; pattern variables appear as Local slots
  std::size_t slot_count = 0;
  SourceSpan span;
};

struct Function {
  Symbol name;
  std::string module;
  std::size_t arity = 0;
  std::vector<CompiledRule> rules;  // source order; first match wins
};

enum class Builtin { Add, Subtract, Multiply, Div, Mod, Negate, Eq, Ne, Lt, Le, Gt, Ge };

std::optional<Builtin> builtin_named(std::string_view name);
std::size_t builtin_arity(Builtin b);

/// What a name refers to in some module's scope.
struct Resolution {
  const Function* function = nullptr;  // null for builtins
  Builtin builtin = Builtin::Add;

  bool is_builtin() const { return function == nullptr; }
  std::size_t arity() const { return function ? function->arity : builtin_arity(builtin); }
};

class LoadError : public std::runtime_error {
 public:
  explicit LoadError(std::vector<Diagnostic> diagnostics);
  const std::vector<Diagnostic>& diagnostics() const { return diagnostics_; }

 private:
  std::vector<Diagnostic> diagnostics_;
};

struct CompiledModule {
  ParsedModule parsed;
  std::map<Symbol, Function> functions;
  std::set<Symbol> exports;
};

/// An immutable snapshot of all loaded modules plus the name index used by
/// the reducer. Swapping a module yields a new snapshot; terms already
/// expanded keep whatever they were expanded to.
class Program {
 public:
  Program() = default;

  /// Builds generation 0 from a set of modules. Every module other than
  /// `List` implicitly imports `List` when it is present.
  static Program build(std::vector<ParsedModule> modules);

  std::uint64_t generation() const { return generation_; }

  /// Resolves `name` as seen from module `scope`. An empty scope sees every
  /// unambiguous export of every module.
  const Resolution* resolve(Symbol scope, Symbol name) const;

  const CompiledModule* module(const std::string& name) const;
  std::vector<std::string> module_names() const;

  friend Program swap_module(const Program& program, ParsedModule module);

 private:
  void index();

  std::map<std::string, std::shared_ptr<const CompiledModule>> modules_;
  std::unordered_map<std::uint64_t, Resolution> scope_index_;
  std::uint64_t generation_ = 0;
};

/// Returns a copy of `program` with `module` replaced (or added) and the
/// generation bumped by one. Throws LoadError and leaves `program` as is if
/// the result would not load.
Program swap_module(const Program& program, ParsedModule module);

/// Order-independent digest of every rule in the program, rendered back to
/// source form. Two programs with equal fingerprints contain the same rules.
std::uint64_t program_fingerprint(const Program& program);

}  // namespace lseq
