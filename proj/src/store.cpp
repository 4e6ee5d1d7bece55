#include "lseq/store.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

#include "lseq/prelude.hpp"

namespace lseq {

namespace {

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + path.string());
  std::ostringstream out;
  out << in.rdbuf();
  return out.str();
}

Diagnostic file_diagnostic(const std::string& module, std::string message) {
  return Diagnostic{SourceSpan{module, 0, 0}, std::move(message)};
}

/// Parses a buffer, turning lexer and parser failures into diagnostics.
std::optional<ParsedModule> try_parse(const std::string& source, const std::string& name,
                                      std::vector<Diagnostic>& errors) {
  try {
    ParsedModule m = parse_module(source, name);
    if (m.name != name) {
      errors.push_back(file_diagnostic(name, "file declares module " + m.name + ", expected " + name));
      return std::nullopt;
    }
    return m;
  } catch (const LexError& e) {
    errors.push_back(e.diagnostic());
  } catch (const ParseError& e) {
    errors.push_back(e.diagnostic());
  }
  return std::nullopt;
}

}  // namespace

std::optional<std::size_t> find_marker(std::string_view source) {
  std::size_t pos = 0;
  while (pos < source.size()) {
    auto nl = source.find('\n', pos);
    const std::size_t line_end = nl == std::string_view::npos ? source.size() : nl;
    if (trim(source.substr(pos, line_end - pos)) == kEditableMarker) {
      return nl == std::string_view::npos ? source.size() : nl + 1;
    }
    if (nl == std::string_view::npos) break;
    pos = nl + 1;
  }
  return std::nullopt;
}

StaleGeneration::StaleGeneration(std::uint64_t expected, std::uint64_t actual)
    : std::runtime_error("expected generation " + std::to_string(expected) + " but the program is at " +
                         std::to_string(actual)),
      actual_(actual) {}

std::unique_ptr<ProgramStore> ProgramStore::load_directory(const std::filesystem::path& dir) {
  std::error_code ec;
  if (!std::filesystem::is_directory(dir, ec)) {
    throw LoadError({file_diagnostic(dir.string(), "not a readable directory")});
  }
  std::vector<ModuleBuffer> buffers;
  std::vector<Diagnostic> errors;
  for (const auto& entry : std::filesystem::directory_iterator(dir)) {
    if (!entry.is_regular_file() || entry.path().extension() != ".hs") continue;
    ModuleBuffer b;
    b.name = entry.path().stem().string();
    b.path = entry.path();
    try {
      b.source = read_file(entry.path());
    } catch (const std::exception& e) {
      errors.push_back(file_diagnostic(b.name, e.what()));
      continue;
    }
    buffers.push_back(std::move(b));
  }
  if (!errors.empty()) throw LoadError(std::move(errors));
  std::unique_ptr<ProgramStore> store(new ProgramStore());
  store->build_initial(std::move(buffers));
  return store;
}

std::unique_ptr<ProgramStore> ProgramStore::from_sources(
    const std::vector<std::pair<std::string, std::string>>& user_modules) {
  std::vector<ModuleBuffer> buffers;
  for (const auto& [name, source] : user_modules) {
    ModuleBuffer b;
    b.name = name;
    b.source = source;
    buffers.push_back(std::move(b));
  }
  std::unique_ptr<ProgramStore> store(new ProgramStore());
  store->build_initial(std::move(buffers));
  return store;
}

void ProgramStore::build_initial(std::vector<ModuleBuffer> user) {
  std::vector<Diagnostic> errors;
  for (const auto& [name, source] : prelude_sources()) {
    ModuleBuffer b;
    b.name = name;
    b.source = source;
    b.standard = true;
    buffers_.push_back(std::move(b));
  }
  for (auto& b : user) {
    const bool clash = std::any_of(buffers_.begin(), buffers_.end(),
                                   [&](const ModuleBuffer& o) { return o.name == b.name; });
    if (clash) {
      errors.push_back(file_diagnostic(b.name, "module " + b.name + " is defined twice"));
      continue;
    }
    b.marker_offset = find_marker(b.source);
    buffers_.push_back(std::move(b));
  }
  std::sort(buffers_.begin(), buffers_.end(),
            [](const ModuleBuffer& a, const ModuleBuffer& b) { return a.name < b.name; });

  std::vector<ParsedModule> parsed;
  for (const auto& b : buffers_) {
    if (auto m = try_parse(b.source, b.name, errors)) parsed.push_back(std::move(*m));
  }
  if (!errors.empty()) throw LoadError(std::move(errors));
  program_ = std::make_shared<const Program>(Program::build(std::move(parsed)));
}

std::size_t ProgramStore::index_of(const std::string& name) const {
  auto it = std::lower_bound(buffers_.begin(), buffers_.end(), name,
                             [](const ModuleBuffer& b, const std::string& n) { return b.name < n; });
  if (it == buffers_.end() || it->name != name) throw NoSuchModule("no module named " + name);
  return static_cast<std::size_t>(it - buffers_.begin());
}

std::shared_ptr<const Program> ProgramStore::program() const {
  std::lock_guard lock(mutex_);
  return program_;
}

std::uint64_t ProgramStore::generation() const {
  std::lock_guard lock(mutex_);
  return program_->generation();
}

std::vector<ModuleInfo> ProgramStore::modules() const {
  std::lock_guard lock(mutex_);
  std::vector<ModuleInfo> out;
  for (const auto& b : buffers_) out.push_back({b.name, b.marker_offset.has_value()});
  return out;
}

ModuleView ProgramStore::view(const std::string& name) const {
  std::lock_guard lock(mutex_);
  const ModuleBuffer& b = buffers_[index_of(name)];
  ModuleView v;
  v.generation = program_->generation();
  if (b.marker_offset) {
    v.header = b.source.substr(0, *b.marker_offset);
    v.editable = b.source.substr(*b.marker_offset);
    v.has_marker = true;
  } else {
    v.header = b.source;
  }
  return v;
}

ModuleBuffer ProgramStore::buffer(const std::string& name) const {
  std::lock_guard lock(mutex_);
  return buffers_[index_of(name)];
}

CheckResult ProgramStore::submit_edit(const std::string& name, const std::string& editable_text,
                                      std::optional<std::uint64_t> expected_generation) {
  std::lock_guard lock(mutex_);
  ModuleBuffer& b = buffers_[index_of(name)];
  if (!b.marker_offset) throw NoEditableRegion("module " + name + " has no editable region");
  const std::uint64_t current = program_->generation();
  if (expected_generation && *expected_generation != current) {
    throw StaleGeneration(*expected_generation, current);
  }

  CheckResult result;
  result.generation = current;
  std::string candidate = b.source.substr(0, *b.marker_offset) + editable_text;
  auto parsed = try_parse(candidate, name, result.errors);
  if (!parsed) return result;
  std::shared_ptr<const Program> next;
  try {
    next = std::make_shared<const Program>(swap_module(*program_, std::move(*parsed)));
  } catch (const LoadError& e) {
    result.errors = e.diagnostics();
    return result;
  }

  if (swap_hook_) swap_hook_(next);
  program_ = next;
  b.source = std::move(candidate);
  if (persist_ && b.path) {
    std::ofstream out(*b.path, std::ios::binary | std::ios::trunc);
    out << b.source;
  }
  result.accepted = true;
  result.generation = program_->generation();
  return result;
}

std::uint64_t ProgramStore::hash() const {
  std::lock_guard lock(mutex_);
  std::uint64_t h = 0xcbf29ce484222325ULL;
  auto mix = [&](std::string_view s) {
    for (unsigned char c : s) {
      h ^= c;
      h *= 0x100000001b3ULL;
    }
    h ^= 0xff;  // separator
    h *= 0x100000001b3ULL;
  };
  for (const auto& b : buffers_) {
    mix(b.name);
    mix(b.source);
  }
  return h;
}

Program ProgramStore::rebuild() const {
  std::lock_guard lock(mutex_);
  std::vector<ParsedModule> parsed;
  for (const auto& b : buffers_) parsed.push_back(parse_module(b.source, b.name));
  return Program::build(std::move(parsed));
}

void ProgramStore::set_swap_hook(SwapHook hook) {
  std::lock_guard lock(mutex_);
  swap_hook_ = std::move(hook);
}

void ProgramStore::set_persist(bool persist) {
  std::lock_guard lock(mutex_);
  persist_ = persist;
}

}  // namespace lseq
