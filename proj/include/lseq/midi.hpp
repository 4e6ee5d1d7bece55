#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "lseq/clock.hpp"
#include "lseq/stream.hpp"

namespace lseq {

/// A MIDI message addressed to a concrete port and channel, due at an
/// absolute queue time. `event.channel` is not used after the split.
struct ScheduledMessage {
  std::int64_t timestamp = 0;
  std::int64_t port = 0;
  int channel = 0;
  MidiEvent event;

  friend bool operator==(const ScheduledMessage&, const ScheduledMessage&) = default;
};

/// Splits the event's virtual channel into port and channel.
ScheduledMessage make_scheduled(std::int64_t timestamp, const MidiEvent& event);

/// `t=<ms> port=<p> ch=<c> <KIND> <fields>` without a trailing newline.
std::string format_log_line(const ScheduledMessage& msg);

struct Delivery {
  ScheduledMessage message;
  std::int64_t wall = 0;  // clock time at which the sink released it
};

/// Receives messages in delivery order.
class MessageWriter {
 public:
  virtual ~MessageWriter() = default;
  virtual void write(const ScheduledMessage& msg) = 0;
  virtual void finish() {}
};

/// One log line per message.
class LogWriter final : public MessageWriter {
 public:
  explicit LogWriter(std::ostream& out) : out_(out) {}
  void write(const ScheduledMessage& msg) override;
  void finish() override;

 private:
  std::ostream& out_;
};

/// Collects messages and writes a Standard MIDI File on finish().
class SmfWriter final : public MessageWriter {
 public:
  explicit SmfWriter(std::filesystem::path path) : path_(std::move(path)) {}
  void write(const ScheduledMessage& msg) override { messages_.push_back(msg); }
  void finish() override;

 private:
  std::filesystem::path path_;
  std::vector<ScheduledMessage> messages_;
};

class NullWriter final : public MessageWriter {
 public:
  void write(const ScheduledMessage&) override {}
};

class SmfError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Format 0, 1000 ticks per quarter at 60 bpm, so one tick is one
/// millisecond. Ports are flattened; `warn` is called once if any is > 0.
/// Throws SmfError if timestamps decrease.
std::vector<std::uint8_t> encode_smf(std::span<const ScheduledMessage> messages,
                                     const std::function<void(const std::string&)>& warn = {});
/// Writes encode_smf(messages) to `path` and returns the number of bytes.
std::size_t write_smf(std::span<const ScheduledMessage> messages, const std::filesystem::path& path);

/// Outgoing message queue with a haltable clock.
///
/// Queue time runs with the wall clock, except that halting freezes it and
/// advancing moves it forward. A message is released once its timestamp is
/// at or before the queue time; release order is timestamp order, ties in
/// scheduling order.
class Sink {
 public:
  Sink(const Clock& clock, MessageWriter* writer = nullptr);

  void schedule(const ScheduledMessage& msg);
  void halt_clock();
  void resume_clock();
  void advance_clock(std::int64_t by_ms);

  bool halted() const { return halted_; }
  std::int64_t queue_time() const;

  /// Releases every message that is due now.
  std::size_t poll();
  /// Everything released since the last call.
  std::vector<Delivery> drain();
  /// Wall time at which the earliest queued message falls due, if running.
  std::optional<std::int64_t> next_due_wall() const;

  std::size_t pending() const { return queue_.size(); }
  std::vector<ScheduledMessage> pending_messages() const;
  std::size_t delivered_count() const { return delivered_total_; }

 private:
  struct Queued {
    ScheduledMessage msg;
    std::uint64_t order;
  };

  const Clock& clock_;
  MessageWriter* writer_;
  std::vector<Queued> queue_;  // kept sorted by (timestamp, order)
  std::vector<Delivery> released_;
  std::uint64_t next_order_ = 0;
  std::size_t delivered_total_ = 0;
  std::int64_t offset_ = 0;  // wall minus queue time while running
  bool halted_ = false;
  std::int64_t halted_at_ = 0;
};

}  // namespace lseq
