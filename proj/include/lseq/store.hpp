#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <memory>
#include <mutex>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "lseq/program.hpp"
#include "lseq/syntax.hpp"

namespace lseq {

inline constexpr std::string_view kEditableMarker = "-- EDITABLE";

/// Byte offset just past the first line whose trimmed text is the marker.
std::optional<std::size_t> find_marker(std::string_view source);

struct ModuleBuffer {
  std::string name;
  std::string source;
  std::optional<std::size_t> marker_offset;
  std::optional<std::filesystem::path> path;  // absent for standard modules
  bool standard = false;
};

struct ModuleView {
  std::string header;
  std::string editable;
  bool has_marker = false;
  std::uint64_t generation = 0;
};

struct ModuleInfo {
  std::string name;
  bool has_marker = false;
};

struct CheckResult {
  bool accepted = false;
  std::uint64_t generation = 0;  // the new one when accepted, else the unchanged one
  std::vector<Diagnostic> errors;
};

class NoSuchModule : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class NoEditableRegion : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class StaleGeneration : public std::runtime_error {
 public:
  StaleGeneration(std::uint64_t expected, std::uint64_t actual);
  std::uint64_t actual() const { return actual_; }

 private:
  std::uint64_t actual_;
};

/// Module buffers plus the program built from them. All members are safe to
/// call from several threads; edits are serialized.
class ProgramStore {
 public:
  /// Called inside the edit critical section with the program to install.
  using SwapHook = std::function<void(std::shared_ptr<const Program>)>;

  /// Standard modules plus every `*.hs` file directly inside `dir`. Throws
  /// LoadError listing every problem found.
  static std::unique_ptr<ProgramStore> load_directory(const std::filesystem::path& dir);
  /// Same, from in-memory (name, source) pairs.
  static std::unique_ptr<ProgramStore> from_sources(
      const std::vector<std::pair<std::string, std::string>>& user_modules);

  std::shared_ptr<const Program> program() const;
  std::uint64_t generation() const;

  std::vector<ModuleInfo> modules() const;
  ModuleView view(const std::string& name) const;
  ModuleBuffer buffer(const std::string& name) const;

  /// Replaces the editable region of `name`. Syntax and load errors reject
  /// the edit without any change.
  CheckResult submit_edit(const std::string& name, const std::string& editable_text,
                          std::optional<std::uint64_t> expected_generation = std::nullopt);

  /// FNV-1a over every buffer's name and source, in name order.
  std::uint64_t hash() const;
  /// Parses every committed buffer from scratch.
  Program rebuild() const;

  void set_swap_hook(SwapHook hook);
  /// Write accepted edits back to their files.
  void set_persist(bool persist);

 private:
  ProgramStore() = default;
  void build_initial(std::vector<ModuleBuffer> buffers);
  std::size_t index_of(const std::string& name) const;

  mutable std::mutex mutex_;
  std::vector<ModuleBuffer> buffers_;  // sorted by name
  std::shared_ptr<const Program> program_;
  SwapHook swap_hook_;
  bool persist_ = false;
};

}  // namespace lseq
