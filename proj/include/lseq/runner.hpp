#pragma once

#include <atomic>
#include <chrono>
#include <condition_variable>
#include <cstdint>
#include <deque>
#include <functional>
#include <future>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "lseq/clock.hpp"
#include "lseq/midi.hpp"
#include "lseq/scheduler.hpp"

namespace lseq {

struct StateSnapshot {
  std::uint64_t seq = 0;
  std::uint64_t generation = 0;
  Phase phase = Phase::Stopped;
  Mode mode;
  std::string current_term;
  std::vector<SourceSpan> highlights;
  std::int64_t stream_time = 0;
  std::uint64_t items = 0;  // extracted since the last play
  std::optional<std::string> last_item;
  std::optional<std::string> error;
};

/// Latest published snapshot plus a long-poll wait on its sequence number.
class StateBoard {
 public:
  /// Applies `change` to a copy of the current snapshot and publishes it
  /// under the next sequence number.
  void publish(const std::function<void(StateSnapshot&)>& change);
  StateSnapshot current() const;
  /// Returns as soon as seq > since, or the current snapshot after `timeout`.
  StateSnapshot wait_newer(std::uint64_t since, std::chrono::milliseconds timeout) const;
  /// Makes every current and future wait return at once.
  void release_waiters();

 private:
  bool released_ = false;
  mutable std::mutex mutex_;
  mutable std::condition_variable changed_;
  StateSnapshot snapshot_;
};

enum class TransportAction { Play, Pause, Continue, Stop, Step };

std::optional<TransportAction> parse_transport_action(std::string_view text);

struct RunnerConfig {
  EntryPoint entry;
  SchedulerConfig scheduler;
  Budget budget;
  /// Use a virtual clock. With `jump`, idle time is skipped by moving the
  /// clock straight to the next wakeup; otherwise it only moves via advance().
  bool virtual_clock = false;
  bool jump = false;
  std::optional<std::size_t> max_events;
  std::size_t render_depth = 40;
};

/// Owns the session, sink and scheduler. Either drive it on the calling
/// thread with run_headless(), or start() a loop thread and talk to it
/// through the command methods, which are serialized onto that thread.
class Runner {
 public:
  Runner(std::shared_ptr<const Program> program, MessageWriter* writer, RunnerConfig config);
  ~Runner();

  Runner(const Runner&) = delete;
  Runner& operator=(const Runner&) = delete;

  /// Plays to the end on the calling thread. Returns false if extraction failed.
  bool run_headless(const std::function<bool()>& interrupted = {});

  void start();
  void shutdown();

  TransportState transport(std::optional<TransportAction> action, std::optional<Mode> mode = std::nullopt);
  /// Installs a new program; the current term keeps its expansions.
  void swap_program(std::shared_ptr<const Program> program);
  /// Virtual clock only. Whatever falls due is done before this returns.
  void advance_clock(std::int64_t ms);
  /// Blocks until the session has stopped after reaching its end or an error.
  bool wait_finished(std::chrono::milliseconds timeout);

  const StateBoard& board() const { return board_; }
  void release_waiters() { board_.release_waiters(); }
  std::int64_t now_ms() const { return clock().now_ms(); }
  /// Items extracted so far (loop thread or headless).
  std::uint64_t items_extracted() const { return items_.load(); }

 private:
  const Clock& clock() const;
  void publish_transport();
  void after_tick();
  void on_item(const ItemEvent& e);
  void loop();
  /// Runs `f` on the loop thread (or right here when there is none).
  void call(std::function<void()> f);

  RunnerConfig config_;
  SteadyClock steady_;
  VirtualClock virtual_;
  Session session_;
  Sink sink_;
  std::unique_ptr<Scheduler> scheduler_;
  MessageWriter* writer_;
  StateBoard board_;
  std::atomic<std::uint64_t> items_{0};

  std::mutex mutex_;
  std::condition_variable wake_;
  std::deque<std::function<void()>> commands_;
  bool quit_ = false;
  bool finished_ = false;
  std::condition_variable finished_cv_;
  std::thread thread_;
};

}  // namespace lseq
