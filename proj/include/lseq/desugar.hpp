#pragma once

#include <cstddef>
#include <limits>
#include <map>
#include <string>
#include <string_view>

#include "lseq/syntax.hpp"
#include "lseq/term.hpp"

namespace lseq {

/// Lowers sugared syntax to the core operator tree: list literals become
/// `:` chains, infix applications become curried applications of the
/// operator name, and application spines are left-associated.
/// Free names are resolved against `scope` at reduction time.
TermPtr desugar(const Expr& expr, std::string_view scope = {});

/// As `desugar`, but names found in `locals` become pattern-variable slots.
TermPtr desugar_template(const Expr& expr, Symbol scope,
                         const std::map<std::string, std::size_t>& locals);

/// Parses and desugars an expression in one go.
TermPtr parse_term(std::string_view source, std::string_view scope = {});

inline constexpr std::size_t kUnlimitedDepth = std::numeric_limits<std::size_t>::max();

/// Renders a term as parseable source text. Infix operators are printed
/// infix; subterms nested deeper than `max_depth` print as `...`.
std::string render_term(const Term& term, std::size_t max_depth = kUnlimitedDepth);

std::string render_pattern(const Pattern& pattern);

}  // namespace lseq
