#pragma once

#include <map>
#include <string>
#include <vector>

#include "lseq/syntax.hpp"

namespace lseq {

/// Source text of the standard modules, keyed by module name.
const std::map<std::string, std::string>& prelude_sources();

/// Parses every standard module. A failure here is a defect in the shipped sources.
std::vector<ParsedModule> parse_prelude();

}  // namespace lseq
