#include "lseq/program.hpp"

#include <algorithm>
#include <functional>

#include "lseq/desugar.hpp"

namespace lseq {
namespace {

const char* const kImplicitImport = "List";

std::uint64_t scope_key(Symbol scope, Symbol name) {
  return (static_cast<std::uint64_t>(scope.id()) << 32) | name.id();
}

void collect_locals(const Pattern& p, std::map<std::string, std::size_t>& out) {
  std::visit(
      [&](const auto& node) {
        using T = std::decay_t<decltype(node)>;
        if constexpr (std::is_same_v<T, Pattern::Variable>) {
          out.emplace(node.name, node.slot);
        } else if constexpr (std::is_same_v<T, Pattern::Constructor>) {
          for (const auto& a : node.args) collect_locals(a, out);
        }
      },
      p.node);
}

// Calls `visit(name, span)` for every free variable reference in `expr`.
void free_names(const Expr& expr, const std::map<std::string, std::size_t>& locals,
                const std::function<void(const std::string&, const SourceSpan&)>& visit) {
  std::visit(
      [&](const auto& node) {
        using T = std::decay_t<decltype(node)>;
        if constexpr (std::is_same_v<T, Expr::Var>) {
          if (!locals.count(node.name)) visit(node.name, expr.span);
        } else if constexpr (std::is_same_v<T, Expr::App>) {
          free_names(*node.function, locals, visit);
          for (const auto& a : node.args) free_names(*a, locals, visit);
        } else if constexpr (std::is_same_v<T, Expr::Infix>) {
          if (node.op != ":" && !locals.count(node.op)) visit(node.op, expr.span);
          free_names(*node.lhs, locals, visit);
          free_names(*node.rhs, locals, visit);
        } else if constexpr (std::is_same_v<T, Expr::List>) {
          for (const auto& i : node.items) free_names(*i, locals, visit);
        } else if constexpr (std::is_same_v<T, Expr::Paren>) {
          free_names(*node.inner, locals, visit);
        }
      },
      expr.node);
}

std::shared_ptr<const CompiledModule> compile_module(ParsedModule parsed,
                                                     std::vector<Diagnostic>& diags) {
  auto module = std::make_shared<CompiledModule>();
  const Symbol scope(parsed.name);
  for (const Rule& rule : parsed.rules) {
    if (builtin_named(rule.function)) {
      diags.push_back({rule.span, "cannot redefine builtin '" + rule.function + "'"});
      continue;
    }
    const Symbol name(rule.function);
    auto [it, inserted] = module->functions.try_emplace(name);
    Function& fn = it->second;
    if (inserted) {
      fn.name = name;
      fn.module = parsed.name;
      fn.arity = rule.params.size();
    } else if (fn.arity != rule.params.size()) {
      diags.push_back({rule.span, "rules for '" + rule.function + "' have different arities (" +
                                      std::to_string(fn.arity) + " and " +
                                      std::to_string(rule.params.size()) + ")"});
      continue;
    }
    CompiledRule compiled;
    std::map<std::string, std::size_t> locals;
    for (const Pattern& p : rule.params) {
      compiled.params.push_back(compile_pattern(p));
      collect_locals(p, locals);
    }
    compiled.body = desugar_template(*rule.body, scope, locals);
    compiled.slot_count = rule.slot_count;
    compiled.span = rule.span;
    fn.rules.push_back(std::move(compiled));
  }

  if (parsed.exports) {
    for (const std::string& e : *parsed.exports) {
      if (!module->functions.count(Symbol(e))) {
        diags.push_back({{parsed.name, 0, 0}, "exported name '" + e + "' is not defined"});
      } else {
        module->exports.insert(Symbol(e));
      }
    }
  } else {
    for (const auto& [name, fn] : module->functions) module->exports.insert(name);
  }
  module->parsed = std::move(parsed);
  return module;
}

std::vector<std::string> effective_imports(const CompiledModule& m,
                                           const std::map<std::string, std::shared_ptr<const CompiledModule>>& all) {
  std::vector<std::string> imports = m.parsed.imports;
  if (m.parsed.name != kImplicitImport && all.count(kImplicitImport) &&
      std::find(imports.begin(), imports.end(), kImplicitImport) == imports.end()) {
    imports.insert(imports.begin(), kImplicitImport);
  }
  return imports;
}

std::uint64_t fnv1a(std::uint64_t h, std::string_view s) {
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

}  // namespace

CompiledPattern compile_pattern(const Pattern& pattern) {
  CompiledPattern out;
  std::visit(
      [&](const auto& node) {
        using T = std::decay_t<decltype(node)>;
        if constexpr (std::is_same_v<T, Pattern::Variable>) {
          out.kind = CompiledPattern::Kind::Variable;
          out.slot = node.slot;
        } else if constexpr (std::is_same_v<T, Pattern::Wildcard>) {
          out.kind = CompiledPattern::Kind::Wildcard;
        } else if constexpr (std::is_same_v<T, Pattern::Int>) {
          out.kind = CompiledPattern::Kind::Integer;
          out.integer = node.value;
        } else if constexpr (std::is_same_v<T, Pattern::Str>) {
          out.kind = CompiledPattern::Kind::Text;
          out.text = node.value;
        } else {
          out.kind = CompiledPattern::Kind::Constructor;
          out.constructor = Symbol(node.name);
          for (const auto& a : node.args) out.args.push_back(compile_pattern(a));
        }
      },
      pattern.node);
  return out;
}

std::optional<Builtin> builtin_named(std::string_view name) {
  static const std::map<std::string_view, Builtin> table{
      {"+", Builtin::Add}, {"-", Builtin::Subtract}, {"*", Builtin::Multiply},
      {"div", Builtin::Div}, {"mod", Builtin::Mod}, {"negate", Builtin::Negate},
      {"==", Builtin::Eq}, {"/=", Builtin::Ne}, {"<", Builtin::Lt},
      {"<=", Builtin::Le}, {">", Builtin::Gt}, {">=", Builtin::Ge},
  };
  if (auto it = table.find(name); it != table.end()) return it->second;
  return std::nullopt;
}

std::size_t builtin_arity(Builtin b) { return b == Builtin::Negate ? 1 : 2; }

LoadError::LoadError(std::vector<Diagnostic> diagnostics)
    : std::runtime_error([&] {
        std::string msg;
        for (const auto& d : diagnostics) msg += (msg.empty() ? "" : "\n") + to_string(d);
        return msg;
      }()),
      diagnostics_(std::move(diagnostics)) {}

Program Program::build(std::vector<ParsedModule> modules) {
  Program program;
  std::vector<Diagnostic> diags;
  for (auto& m : modules) {
    std::string name = m.name;
    if (program.modules_.count(name)) {
      diags.push_back({{name, 0, 0}, "module '" + name + "' defined twice"});
      continue;
    }
    program.modules_.emplace(std::move(name), compile_module(std::move(m), diags));
  }
  if (!diags.empty()) throw LoadError(std::move(diags));
  program.index();
  return program;
}

Program swap_module(const Program& program, ParsedModule module) {
  Program next;
  next.modules_ = program.modules_;
  std::vector<Diagnostic> diags;
  std::string name = module.name;
  next.modules_[name] = compile_module(std::move(module), diags);
  if (!diags.empty()) throw LoadError(std::move(diags));
  next.index();
  next.generation_ = program.generation_ + 1;
  return next;
}

void Program::index() {
  std::vector<Diagnostic> diags;
  scope_index_.clear();

  // Imports must exist and must not form a cycle.
  std::map<std::string, std::vector<std::string>> graph;
  for (const auto& [name, m] : modules_) {
    graph[name] = effective_imports(*m, modules_);
    for (const auto& imp : graph[name]) {
      if (!modules_.count(imp)) {
        diags.push_back({{name, 0, 0}, "unresolved import '" + imp + "' in module '" + name + "'"});
      }
    }
  }
  std::map<std::string, int> state;  // 0 unvisited, 1 on stack, 2 done
  std::vector<std::string> stack;
  std::function<void(const std::string&)> visit = [&](const std::string& m) {
    state[m] = 1;
    stack.push_back(m);
    for (const auto& imp : graph[m]) {
      if (!modules_.count(imp)) continue;
      if (state[imp] == 1) {
        std::string cycle;
        auto from = std::find(stack.begin(), stack.end(), imp);
        for (auto it = from; it != stack.end(); ++it) cycle += *it + " -> ";
        diags.push_back({{m, 0, 0}, "import cycle: " + cycle + imp});
      } else if (state[imp] == 0) {
        visit(imp);
      }
    }
    stack.pop_back();
    state[m] = 2;
  };
  for (const auto& [name, m] : modules_) {
    if (state[name] == 0) visit(name);
  }
  if (!diags.empty()) throw LoadError(std::move(diags));

  // Per-module scopes: own definitions plus exports of direct imports.
  std::set<std::uint64_t> ambiguous;
  for (const auto& [name, m] : modules_) {
    const Symbol scope(name);
    for (const auto& [fname, fn] : m->functions) {
      scope_index_[scope_key(scope, fname)] = Resolution{&fn};
    }
    for (const auto& imp : graph[name]) {
      const CompiledModule& other = *modules_.at(imp);
      for (Symbol exported : other.exports) {
        const Function* fn = &other.functions.at(exported);
        const auto key = scope_key(scope, exported);
        if (m->functions.count(exported)) {
          const auto& rules = m->functions.at(exported).rules;
          SourceSpan where = rules.empty() ? SourceSpan{name, 0, 0} : rules.front().span;
          diags.push_back({where, "'" + exported.str() + "' clashes with the export of module '" +
                                      imp + "'"});
          continue;
        }
        auto [it, inserted] = scope_index_.try_emplace(key, Resolution{fn});
        if (!inserted && it->second.function != fn) ambiguous.insert(key);
      }
    }
  }

  // Every free name in a rule body must resolve.
  for (const auto& [name, m] : modules_) {
    const Symbol scope(name);
    for (const Rule& rule : m->parsed.rules) {
      std::map<std::string, std::size_t> locals;
      for (const auto& p : rule.params) collect_locals(p, locals);
      free_names(*rule.body, locals, [&](const std::string& ref, const SourceSpan& span) {
        if (builtin_named(ref)) return;
        const auto key = scope_key(scope, Symbol(ref));
        if (ambiguous.count(key)) {
          diags.push_back({span, "ambiguous reference to '" + ref + "'"});
        } else if (!scope_index_.count(key)) {
          diags.push_back({span, "undefined name '" + ref + "'"});
        }
      });
    }
  }
  if (!diags.empty()) throw LoadError(std::move(diags));

  // The empty scope sees every unambiguous export.
  std::map<Symbol, const Function*> global;
  std::set<Symbol> clashing;
  for (const auto& [name, m] : modules_) {
    for (Symbol e : m->exports) {
      auto [it, inserted] = global.try_emplace(e, &m->functions.at(e));
      if (!inserted) clashing.insert(e);
    }
  }
  for (const auto& [e, fn] : global) {
    if (!clashing.count(e)) scope_index_[scope_key(Symbol(), e)] = Resolution{fn};
  }
}

const Resolution* Program::resolve(Symbol scope, Symbol name) const {
  static const auto builtins = [] {
    std::unordered_map<std::uint32_t, Resolution> table;
    for (const char* op : {"+", "-", "*", "div", "mod", "negate", "==", "/=", "<", "<=", ">", ">="}) {
      table[Symbol(op).id()] = Resolution{nullptr, *builtin_named(op)};
    }
    return table;
  }();
  if (auto it = builtins.find(name.id()); it != builtins.end()) return &it->second;
  if (auto it = scope_index_.find(scope_key(scope, name)); it != scope_index_.end()) {
    return &it->second;
  }
  return nullptr;
}

const CompiledModule* Program::module(const std::string& name) const {
  auto it = modules_.find(name);
  return it == modules_.end() ? nullptr : it->second.get();
}

std::vector<std::string> Program::module_names() const {
  std::vector<std::string> names;
  for (const auto& [name, m] : modules_) names.push_back(name);
  return names;
}

std::uint64_t program_fingerprint(const Program& program) {
  std::vector<std::string> lines;
  for (const auto& name : program.module_names()) {
    const CompiledModule* m = program.module(name);
    std::string imports;
    for (const auto& i : m->parsed.imports) imports += i + ",";
    lines.push_back(name + " imports " + imports);
    for (const auto& [fname, fn] : m->functions) {
      for (std::size_t i = 0; i < fn.rules.size(); ++i) {
        const Rule& source_rule = [&]() -> const Rule& {
          std::size_t seen = 0;
          for (const Rule& r : m->parsed.rules) {
            if (r.function == fname.str() && seen++ == i) return r;
          }
          return m->parsed.rules.front();
        }();
        std::string line = name + "." + fname.str() + "#" + std::to_string(i);
        for (const auto& p : source_rule.params) line += " " + render_pattern(p);
        line += " = " + render_term(*fn.rules[i].body);
        lines.push_back(std::move(line));
      }
    }
  }
  std::sort(lines.begin(), lines.end());
  std::uint64_t h = 14695981039346656037ull;
  for (const auto& l : lines) h = fnv1a(fnv1a(h, l), "\n");
  return h;
}

}  // namespace lseq
