#include "lseq/reduce.hpp"

#include <functional>

#include "lseq/desugar.hpp"

namespace lseq {
namespace {

// Keeps native recursion well inside a default 8 MiB thread stack.
constexpr std::size_t kMaxNesting = 4000;

class PathScope {
 public:
  PathScope(TermPath& path, std::size_t zeros, bool argument) : path_(path), size_(path.size()) {
    path_.insert(path_.end(), zeros, 0);
    if (argument) path_.push_back(1);
  }
  ~PathScope() { path_.resize(size_); }

 private:
  TermPath& path_;
  std::size_t size_;
};

class NestingGuard {
 public:
  explicit NestingGuard(std::size_t& depth) : depth_(depth) {
    if (++depth_ > kMaxNesting) {
      --depth_;
      throw ReductionError(ReductionErrorKind::NestingTooDeep,
                           "evaluation nested deeper than " + std::to_string(kMaxNesting));
    }
  }
  ~NestingGuard() { --depth_; }

 private:
  std::size_t& depth_;
};

struct Spine {
  Term* head = nullptr;
  TermPtr* head_slot = nullptr;
  std::vector<TermPtr*> nodes;  // nodes[0] is the outermost application

  std::size_t arg_count() const { return nodes.size(); }
  // Argument i counted from the left.
  TermPtr& arg(std::size_t i) { return (*nodes[nodes.size() - 1 - i])->argument; }
  // The application node carrying exactly `n` arguments.
  TermPtr& prefix(std::size_t n) { return n == 0 ? *head_slot : *nodes[nodes.size() - n]; }
};

Spine unwind(TermPtr& term) {
  Spine s;
  TermPtr* cur = &term;
  while ((*cur)->kind == Term::Kind::Apply) {
    s.nodes.push_back(cur);
    cur = &(*cur)->function;
  }
  s.head_slot = cur;
  s.head = cur->get();
  return s;
}

std::int64_t int_arg(Builtin op, const Term& t) {
  if (t.kind != Term::Kind::Integer) {
    throw ReductionError(ReductionErrorKind::TypeMismatch,
                         "integer expected by builtin, got " + render_term(t, 4));
  }
  (void)op;
  return t.integer;
}

std::int64_t checked(bool overflow, std::int64_t value) {
  if (overflow) throw ReductionError(ReductionErrorKind::ArithmeticError, "integer overflow");
  return value;
}

TermPtr boolean(bool b) { return make_constructor(b ? sym::true_() : sym::false_()); }

}  // namespace

std::string_view to_string(ReductionErrorKind kind) {
  switch (kind) {
    case ReductionErrorKind::StepBudgetExceeded: return "StepBudgetExceeded";
    case ReductionErrorKind::TermSizeExceeded: return "TermSizeExceeded";
    case ReductionErrorKind::NestingTooDeep: return "NestingTooDeep";
    case ReductionErrorKind::UndefinedName: return "UndefinedName";
    case ReductionErrorKind::NoMatchingRule: return "NoMatchingRule";
    case ReductionErrorKind::TypeMismatch: return "TypeMismatch";
    case ReductionErrorKind::ArithmeticError: return "ArithmeticError";
  }
  return "ReductionError";
}

ReductionError::ReductionError(ReductionErrorKind kind, const std::string& message)
    : std::runtime_error(std::string(to_string(kind)) + ": " + message), kind_(kind) {}

TermPtr eval_builtin(Builtin op, std::span<const Term* const> args) {
  if (args.size() != builtin_arity(op)) {
    throw ReductionError(ReductionErrorKind::TypeMismatch, "wrong number of builtin arguments");
  }
  if (op == Builtin::Negate) {
    std::int64_t v = int_arg(op, *args[0]);
    return make_integer(checked(v == INT64_MIN, -v));
  }
  const Term& a = *args[0];
  const Term& b = *args[1];
  switch (op) {
    case Builtin::Add: {
      std::int64_t r = 0;
      const bool overflow = __builtin_add_overflow(int_arg(op, a), int_arg(op, b), &r);
      return make_integer(checked(overflow, r));
    }
    case Builtin::Subtract: {
      std::int64_t r = 0;
      const bool overflow = __builtin_sub_overflow(int_arg(op, a), int_arg(op, b), &r);
      return make_integer(checked(overflow, r));
    }
    case Builtin::Multiply: {
      std::int64_t r = 0;
      const bool overflow = __builtin_mul_overflow(int_arg(op, a), int_arg(op, b), &r);
      return make_integer(checked(overflow, r));
    }
    case Builtin::Div:
    case Builtin::Mod: {
      const std::int64_t x = int_arg(op, a);
      const std::int64_t y = int_arg(op, b);
      if (y == 0) throw ReductionError(ReductionErrorKind::ArithmeticError, "division by zero");
      if (x == INT64_MIN && y == -1) {
        if (op == Builtin::Mod) return make_integer(0);
        throw ReductionError(ReductionErrorKind::ArithmeticError, "integer overflow");
      }
      // Haskell semantics: quotient rounds toward negative infinity.
      std::int64_t q = x / y;
      std::int64_t r = x % y;
      if (r != 0 && ((r < 0) != (y < 0))) {
        --q;
        r += y;
      }
      return make_integer(op == Builtin::Div ? q : r);
    }
    default:
      break;
  }

  // Comparisons work on two integers or two texts.
  int cmp = 0;
  if (a.kind == Term::Kind::Integer && b.kind == Term::Kind::Integer) {
    cmp = a.integer < b.integer ? -1 : (a.integer > b.integer ? 1 : 0);
  } else if (a.kind == Term::Kind::Text && b.kind == Term::Kind::Text) {
    cmp = a.text.compare(b.text);
    cmp = cmp < 0 ? -1 : (cmp > 0 ? 1 : 0);
  } else {
    throw ReductionError(ReductionErrorKind::TypeMismatch,
                         "cannot compare " + render_term(a, 4) + " with " + render_term(b, 4));
  }
  switch (op) {
    case Builtin::Eq: return boolean(cmp == 0);
    case Builtin::Ne: return boolean(cmp != 0);
    case Builtin::Lt: return boolean(cmp < 0);
    case Builtin::Le: return boolean(cmp <= 0);
    case Builtin::Gt: return boolean(cmp > 0);
    case Builtin::Ge: return boolean(cmp >= 0);
    default: break;
  }
  throw ReductionError(ReductionErrorKind::TypeMismatch, "unknown builtin");
}

TermPtr eval_builtin(std::string_view op, std::span<const Term* const> args) {
  auto b = builtin_named(op);
  if (!b) throw ReductionError(ReductionErrorKind::UndefinedName, std::string(op));
  return eval_builtin(*b, args);
}

TermPtr instantiate(const Term& tmpl, std::span<const Term* const> slots) {
  auto copy_node = [&](const Term& src) -> TermPtr {
    if (src.kind == Term::Kind::Local) return clone(*slots[static_cast<std::size_t>(src.integer)]);
    auto t = std::make_unique<Term>(src.kind);
    t->symbol = src.symbol;
    t->scope = src.scope;
    t->integer = src.integer;
    t->text = src.text;
    return t;
  };
  TermPtr root = copy_node(tmpl);
  std::vector<std::pair<const Term*, Term*>> work;
  if (tmpl.kind == Term::Kind::Apply) work.emplace_back(&tmpl, root.get());
  while (!work.empty()) {
    auto [src, dst] = work.back();
    work.pop_back();
    dst->function = copy_node(*src->function);
    dst->argument = copy_node(*src->argument);
    if (src->function->kind == Term::Kind::Apply) work.emplace_back(src->function.get(), dst->function.get());
    if (src->argument->kind == Term::Kind::Apply) work.emplace_back(src->argument.get(), dst->argument.get());
  }
  return root;
}

// ---------------------------------------------------------------------------

Reducer::Reducer(const Program& program, Budget budget, const Term& root)
    : program_(program), budget_(budget), live_nodes_(term_node_count(root)) {}

void Reducer::whnf(TermPtr& term, const TermPath& path) {
  path_ = path;
  reduce_whnf(term);
}

void Reducer::force(TermPtr& term, const TermPath& path) {
  path_ = path;
  reduce_force(term);
}

bool Reducer::match(const CompiledPattern& pattern, TermPtr& term, std::vector<const Term*>& slots) {
  return match_at(pattern, term, slots);
}

void Reducer::replace(TermPtr& redex, TermPtr replacement) {
  const std::size_t removed = term_node_count(*redex);
  const std::size_t added = term_node_count(*replacement);
  redex = std::move(replacement);
  live_nodes_ = live_nodes_ - removed + added;
  if (live_nodes_ > budget_.max_term_nodes) {
    throw ReductionError(ReductionErrorKind::TermSizeExceeded,
                         "term grew beyond " + std::to_string(budget_.max_term_nodes) + " nodes");
  }
}

void Reducer::reduce_whnf(TermPtr& term) {
  NestingGuard guard(depth_);
  for (;;) {
    Spine spine = unwind(term);
    const Term& head = *spine.head;
    if (head.kind == Term::Kind::Local) {
      throw std::logic_error("pattern slot outside a rule template");
    }
    if (head.kind != Term::Kind::Name) return;

    const Resolution* res = program_.resolve(head.scope, head.symbol);
    if (!res) {
      std::string where = head.scope.empty() ? std::string() : " in module " + head.scope.str();
      throw ReductionError(ReductionErrorKind::UndefinedName,
                           "'" + head.symbol.str() + "'" + where);
    }
    const std::size_t arity = res->arity();
    const std::size_t nargs = spine.arg_count();
    if (nargs < arity) return;  // partial application
    const std::size_t outer = nargs - arity;

    if (res->is_builtin()) {
      std::vector<const Term*> args(arity);
      for (std::size_t i = 0; i < arity; ++i) {
        PathScope scope(path_, nargs - 1 - i, true);
        reduce_whnf(spine.arg(i));
        args[i] = spine.arg(i).get();
      }
      replace(spine.prefix(arity), eval_builtin(res->builtin, args));
      continue;
    }

    const Function& fn = *res->function;
    const CompiledRule* fired = nullptr;
    std::vector<const Term*> slots;
    for (const CompiledRule& rule : fn.rules) {
      slots.assign(rule.slot_count, nullptr);
      bool ok = true;
      for (std::size_t i = 0; i < arity && ok; ++i) {
        PathScope scope(path_, nargs - 1 - i, true);
        ok = match_at(rule.params[i], spine.arg(i), slots);
      }
      if (ok) {
        fired = &rule;
        break;
      }
    }
    if (!fired) {
      std::string args;
      for (std::size_t i = 0; i < arity; ++i) args += " " + render_term(*spine.arg(i), 3);
      throw ReductionError(ReductionErrorKind::NoMatchingRule,
                           "no rule of '" + fn.name.str() + "' matches" + args);
    }
    if (step_count_ >= budget_.max_steps) {
      throw ReductionError(ReductionErrorKind::StepBudgetExceeded,
                           "more than " + std::to_string(budget_.max_steps) + " reduction steps");
    }
    ++step_count_;
    TermPath redex_path = path_;
    redex_path.insert(redex_path.end(), outer, 0);
    steps_.push_back(ReductionStep{fired->span, std::move(redex_path), program_.generation()});
    replace(spine.prefix(arity), instantiate(*fired->body, slots));
  }
}

void Reducer::reduce_force(TermPtr& term) {
  NestingGuard guard(depth_);
  const std::size_t base = path_.size();
  TermPtr* cur = &term;
  // The last argument is handled by iteration so long lists stay flat.
  for (;;) {
    reduce_whnf(*cur);
    Spine spine = unwind(*cur);
    const std::size_t n = spine.arg_count();
    if (n == 0) break;
    for (std::size_t i = 0; i + 1 < n; ++i) {
      PathScope scope(path_, n - 1 - i, true);
      reduce_force(spine.arg(i));
    }
    path_.push_back(1);
    cur = &spine.arg(n - 1);
  }
  path_.resize(base);
}

bool Reducer::match_at(const CompiledPattern& pattern, TermPtr& term,
                       std::vector<const Term*>& slots) {
  switch (pattern.kind) {
    case CompiledPattern::Kind::Variable:
      slots[pattern.slot] = term.get();
      return true;
    case CompiledPattern::Kind::Wildcard:
      return true;
    case CompiledPattern::Kind::Integer:
      reduce_whnf(term);
      return term->kind == Term::Kind::Integer && term->integer == pattern.integer;
    case CompiledPattern::Kind::Text:
      reduce_whnf(term);
      return term->kind == Term::Kind::Text && term->text == pattern.text;
    case CompiledPattern::Kind::Constructor:
      break;
  }
  reduce_whnf(term);
  Spine spine = unwind(term);
  if (spine.head->kind != Term::Kind::Constructor || spine.head->symbol != pattern.constructor ||
      spine.arg_count() != pattern.args.size()) {
    return false;
  }
  const std::size_t n = spine.arg_count();
  for (std::size_t i = 0; i < n; ++i) {
    PathScope scope(path_, n - 1 - i, true);
    if (!match_at(pattern.args[i], spine.arg(i), slots)) return false;
  }
  return true;
}

// ---------------------------------------------------------------------------

Reduction whnf(const Program& program, TermPtr term, Budget budget) {
  Reducer r(program, budget, *term);
  r.whnf(term);
  return {std::move(term), r.take_steps()};
}

Reduction force(const Program& program, TermPtr term, Budget budget) {
  Reducer r(program, budget, *term);
  r.force(term);
  return {std::move(term), r.take_steps()};
}

MatchOutcome match(const Pattern& pattern, TermPtr term, const Program& program, Budget budget) {
  MatchOutcome out;
  std::map<std::string, std::size_t> names;
  std::function<void(const Pattern&)> collect = [&](const Pattern& p) {
    if (const auto* v = std::get_if<Pattern::Variable>(&p.node)) names.emplace(v->name, v->slot);
    if (const auto* c = std::get_if<Pattern::Constructor>(&p.node)) {
      for (const auto& a : c->args) collect(a);
    }
  };
  collect(pattern);
  std::size_t slot_count = 0;
  for (const auto& [n, s] : names) slot_count = std::max(slot_count, s + 1);

  Reducer r(program, budget, *term);
  std::vector<const Term*> slots(slot_count, nullptr);
  out.matched = r.match(compile_pattern(pattern), term, slots);
  if (out.matched) {
    for (const auto& [n, s] : names) out.bindings.emplace(n, clone(*slots[s]));
  }
  out.term = std::move(term);
  out.steps = r.take_steps();
  return out;
}

}  // namespace lseq
