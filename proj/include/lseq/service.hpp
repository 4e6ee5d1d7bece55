#pragma once

#include <chrono>
#include <filesystem>
#include <memory>
#include <optional>
#include <string>

#include "lseq/runner.hpp"
#include "lseq/store.hpp"

namespace lseq {

struct ServiceConfig {
  /// Served under /ui/ when set; otherwise /ui/ answers with a placeholder page.
  std::optional<std::filesystem::path> ui_dir;
  std::chrono::milliseconds default_poll_timeout{25'000};
  std::chrono::milliseconds max_poll_timeout{60'000};
  int worker_threads = 16;
};

/// HTTP front end over a store and a running Runner. Accepted edits reach
/// the runner through the store's swap hook, which this service installs.
class HttpService {
 public:
  HttpService(ProgramStore& store, Runner& runner, ServiceConfig config = {});
  ~HttpService();

  /// Binds to host:port (port 0 picks a free one) and returns the port, or -1.
  int bind(const std::string& host, int port);
  /// Serves until stop() on a background thread.
  void start();
  void stop();

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

/// Splits "host:port"; nullopt when malformed.
std::optional<std::pair<std::string, int>> parse_address(const std::string& text);

}  // namespace lseq
