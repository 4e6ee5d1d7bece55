#include "lseq/desugar.hpp"

#include <algorithm>
#include <cctype>
#include <vector>

namespace lseq {
namespace {

TermPtr lower(const Expr& expr, Symbol scope, const std::map<std::string, std::size_t>* locals) {
  return std::visit(
      [&](const auto& node) -> TermPtr {
        using T = std::decay_t<decltype(node)>;
        if constexpr (std::is_same_v<T, Expr::Var>) {
          if (locals) {
            if (auto it = locals->find(node.name); it != locals->end()) {
              return make_local(it->second);
            }
          }
          return make_name(Symbol(node.name), scope);
        } else if constexpr (std::is_same_v<T, Expr::Con>) {
          return make_constructor(node.name);
        } else if constexpr (std::is_same_v<T, Expr::Int>) {
          return make_integer(node.value);
        } else if constexpr (std::is_same_v<T, Expr::Str>) {
          return make_text(node.value);
        } else if constexpr (std::is_same_v<T, Expr::App>) {
          TermPtr t = lower(*node.function, scope, locals);
          for (const auto& a : node.args) t = make_apply(std::move(t), lower(*a, scope, locals));
          return t;
        } else if constexpr (std::is_same_v<T, Expr::Infix>) {
          TermPtr op = node.op == ":" ? make_constructor(sym::cons())
                                      : make_name(Symbol(node.op), scope);
          return make_call(std::move(op), lower(*node.lhs, scope, locals),
                           lower(*node.rhs, scope, locals));
        } else if constexpr (std::is_same_v<T, Expr::List>) {
          TermPtr t = make_constructor(sym::nil());
          for (auto it = node.items.rbegin(); it != node.items.rend(); ++it) {
            t = make_call(make_constructor(sym::cons()), lower(**it, scope, locals), std::move(t));
          }
          return t;
        } else {
          static_assert(std::is_same_v<T, Expr::Paren>);
          return lower(*node.inner, scope, locals);
        }
      },
      expr.node);
}

// -- rendering ---------------------------------------------------------------

enum class Form { Atom, Application, Infix };

struct Rendered {
  std::string text;
  Form form = Form::Atom;
  std::string op;
};

bool is_symbolic(std::string_view name) {
  return !name.empty() && !(std::isalnum(static_cast<unsigned char>(name.front())) ||
                            name.front() == '_' || name == "[]");
}

std::string quote(const std::string& s) {
  std::string out = "\"";
  for (char c : s) {
    if (c == '"' || c == '\\') {
      out += '\\';
      out += c;
    } else if (c == '\n') {
      out += "\\n";
    } else {
      out += c;
    }
  }
  out += '"';
  return out;
}

std::string spaced(std::string_view op) {
  // List operators read better with spaces; arithmetic stays tight.
  if (op == ":" || op == "++" || op == "=:=") return " " + std::string(op) + " ";
  return std::string(op);
}

class Renderer {
 public:
  explicit Renderer(std::size_t max_depth) : max_depth_(max_depth) {}

  Rendered render(const Term& t, std::size_t depth) {
    if (depth > max_depth_ || (t.kind == Term::Kind::Apply && depth >= max_depth_)) {
      return {"...", Form::Atom, {}};
    }

    std::vector<const Term*> args;
    const Term* head = &t;
    while (head->kind == Term::Kind::Apply) {
      args.push_back(head->argument.get());
      head = head->function.get();
    }
    std::reverse(args.begin(), args.end());

    if (!args.empty() && (head->kind == Term::Kind::Name || head->kind == Term::Kind::Constructor)) {
      const std::string& name = head->symbol.str();
      auto info = operator_info(name);
      if (info && is_symbolic(name) && args.size() >= 2) {
        Rendered lhs = render(*args[0], depth + 1);
        Rendered rhs = render(*args[1], depth + 1);
        std::string text = operand(lhs, name, *info, /*left=*/true) + spaced(name) +
                           operand(rhs, name, *info, /*left=*/false);
        if (args.size() == 2) return {std::move(text), Form::Infix, name};
        text = "(" + text + ")";
        for (std::size_t i = 2; i < args.size(); ++i) {
          text += " " + as_atom(render(*args[i], depth + 1));
        }
        return {std::move(text), Form::Application, {}};
      }
    }

    std::string text = head_text(*head);
    if (args.empty()) return {std::move(text), Form::Atom, {}};
    for (const Term* a : args) text += " " + as_atom(render(*a, depth + 1));
    return {std::move(text), Form::Application, {}};
  }

 private:
  static std::string head_text(const Term& t) {
    switch (t.kind) {
      case Term::Kind::Name:
      case Term::Kind::Constructor: {
        const std::string& name = t.symbol.str();
        return is_symbolic(name) ? "(" + name + ")" : name;
      }
      case Term::Kind::Integer:
        return t.integer < 0 ? "(" + std::to_string(t.integer) + ")" : std::to_string(t.integer);
      case Term::Kind::Text:
        return quote(t.text);
      case Term::Kind::Local:
        return "#" + std::to_string(t.integer);
      case Term::Kind::Apply:
        break;
    }
    return "?";
  }

  static std::string as_atom(const Rendered& r) {
    return r.form == Form::Atom ? r.text : "(" + r.text + ")";
  }

  static std::string operand(const Rendered& r, const std::string& op, OperatorInfo info,
                             bool left) {
    if (r.form != Form::Infix) return r.text;
    const bool chains = r.op == op && ((left && info.assoc == Assoc::Left) ||
                                       (!left && info.assoc == Assoc::Right));
    return chains ? r.text : "(" + r.text + ")";
  }

  std::size_t max_depth_;
};

void render_pattern_into(const Pattern& p, std::string& out, bool nested) {
  std::visit(
      [&](const auto& node) {
        using T = std::decay_t<decltype(node)>;
        if constexpr (std::is_same_v<T, Pattern::Variable>) {
          out += node.name;
        } else if constexpr (std::is_same_v<T, Pattern::Wildcard>) {
          out += "_";
        } else if constexpr (std::is_same_v<T, Pattern::Int>) {
          out += node.value < 0 ? "(" + std::to_string(node.value) + ")" : std::to_string(node.value);
        } else if constexpr (std::is_same_v<T, Pattern::Str>) {
          out += quote(node.value);
        } else {
          if (node.args.empty()) {
            out += node.name;
            return;
          }
          if (nested) out += "(";
          if (node.name == ":" && node.args.size() == 2) {
            render_pattern_into(node.args[0], out, true);
            out += " : ";
            render_pattern_into(node.args[1], out, true);
          } else {
            out += node.name;
            for (const auto& a : node.args) {
              out += " ";
              render_pattern_into(a, out, true);
            }
          }
          if (nested) out += ")";
        }
      },
      p.node);
}

}  // namespace

TermPtr desugar(const Expr& expr, std::string_view scope) {
  return lower(expr, Symbol(scope), nullptr);
}

TermPtr desugar_template(const Expr& expr, Symbol scope,
                         const std::map<std::string, std::size_t>& locals) {
  return lower(expr, scope, &locals);
}

TermPtr parse_term(std::string_view source, std::string_view scope) {
  return desugar(*parse_expression(source, scope), scope);
}

std::string render_term(const Term& term, std::size_t max_depth) {
  return Renderer(max_depth).render(term, 0).text;
}

std::string render_pattern(const Pattern& pattern) {
  std::string out;
  render_pattern_into(pattern, out, true);
  return out;
}

}  // namespace lseq
