#include "lseq/prelude.hpp"

#include "prelude_data.hpp"

namespace lseq {

const std::map<std::string, std::string>& prelude_sources() {
  static const std::map<std::string, std::string> sources(detail::kPreludeModules.begin(),
                                                          detail::kPreludeModules.end());
  return sources;
}

std::vector<ParsedModule> parse_prelude() {
  std::vector<ParsedModule> modules;
  for (const auto& [name, source] : prelude_sources()) {
    modules.push_back(parse_module(source, name));
  }
  return modules;
}

}  // namespace lseq
