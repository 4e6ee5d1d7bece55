#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "lseq/program.hpp"
#include "lseq/term.hpp"

namespace lseq {

struct Budget {
  std::size_t max_steps = 1'000'000;
  std::size_t max_term_nodes = 10'000'000;
};

/// Address of a node: 0 descends into the function of an application,
/// 1 into its argument.
using TermPath = std::vector<std::uint8_t>;

struct ReductionStep {
  SourceSpan rule_span;
  TermPath redex_path;
  std::uint64_t generation = 0;
};

enum class ReductionErrorKind {
  StepBudgetExceeded,
  TermSizeExceeded,
  NestingTooDeep,
  UndefinedName,
  NoMatchingRule,
  TypeMismatch,
  ArithmeticError,
};

std::string_view to_string(ReductionErrorKind kind);

class ReductionError : public std::runtime_error {
 public:
  ReductionError(ReductionErrorKind kind, const std::string& message);
  ReductionErrorKind kind() const { return kind_; }

 private:
  ReductionErrorKind kind_;
};

/// Lazy leftmost-outermost rewriting of a term in place.
///
/// A reducer lives for one extraction: it carries the step and size budget
/// and records every applied rule. Subterms are reduced where they sit in
/// the tree, so forcing an argument during pattern matching leaves the
/// evaluated form behind for later use (but never shared with copies).
class Reducer {
 public:
  /// `root` is the whole term being worked on; its size seeds the node budget.
  Reducer(const Program& program, Budget budget, const Term& root);

  /// Rewrites `term` until its head is a constructor, a literal, or an
  /// under-applied function. `path` locates `term` below the root.
  void whnf(TermPtr& term, const TermPath& path = {});

  /// Reduces `term` to full normal form.
  void force(TermPtr& term, const TermPath& path = {});

  /// Matches one pattern, forcing the term only as far as the pattern needs.
  /// On success `slots[v]` points at the subterm bound to variable slot v.
  bool match(const CompiledPattern& pattern, TermPtr& term, std::vector<const Term*>& slots);

  const std::vector<ReductionStep>& steps() const { return steps_; }
  std::vector<ReductionStep> take_steps() { return std::move(steps_); }
  std::size_t steps_used() const { return step_count_; }
  std::size_t live_nodes() const { return live_nodes_; }

 private:
  void reduce_whnf(TermPtr& term);
  void reduce_force(TermPtr& term);
  bool match_at(const CompiledPattern& pattern, TermPtr& term, std::vector<const Term*>& slots);
  void replace(TermPtr& redex, TermPtr replacement);

  const Program& program_;
  Budget budget_;
  std::vector<ReductionStep> steps_;
  std::size_t step_count_ = 0;
  std::size_t live_nodes_ = 0;
  std::size_t depth_ = 0;
  TermPath path_;
};

struct Reduction {
  TermPtr term;
  std::vector<ReductionStep> steps;
};

/// Value-style wrappers around Reducer.
Reduction whnf(const Program& program, TermPtr term, Budget budget = {});
Reduction force(const Program& program, TermPtr term, Budget budget = {});

struct MatchOutcome {
  bool matched = false;
  std::map<std::string, TermPtr> bindings;  // copies of the bound subterms
  TermPtr term;                              // the argument after forcing
  std::vector<ReductionStep> steps;
};

MatchOutcome match(const Pattern& pattern, TermPtr term, const Program& program,
                   Budget budget = {});

/// Applies a builtin to arguments already in weak head normal form.
TermPtr eval_builtin(Builtin op, std::span<const Term* const> args);
TermPtr eval_builtin(std::string_view op, std::span<const Term* const> args);

/// Substitutes copies of `slots` for the Local nodes of a rule template.
TermPtr instantiate(const Term& tmpl, std::span<const Term* const> slots);

}  // namespace lseq
