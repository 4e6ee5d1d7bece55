#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include "lseq/clock.hpp"
#include "lseq/midi.hpp"
#include "lseq/program.hpp"
#include "lseq/reduce.hpp"
#include "lseq/stream.hpp"

namespace lseq {

enum class Phase { Playing, Paused, Stopped };

struct Mode {
  enum class Kind { RealTime, SlowMotion, SingleStep };
  Kind kind = Kind::RealTime;
  std::int64_t step_pause_ms = 500;  // SlowMotion cadence

  static Mode real_time() { return {}; }
  static Mode slow_motion(std::int64_t pause_ms = 500) { return {Kind::SlowMotion, pause_ms}; }
  static Mode single_step() { return {Kind::SingleStep, 500}; }

  friend bool operator==(const Mode&, const Mode&) = default;
};

std::string to_string(Phase phase);
std::string to_string(Mode::Kind kind);
std::optional<Phase> parse_phase(std::string_view text);
std::optional<Mode::Kind> parse_mode_kind(std::string_view text);

struct TransportState {
  Phase phase = Phase::Stopped;
  std::int64_t stream_time = 0;  // queue time of the next item to schedule
  std::optional<std::int64_t> queue_halted_at;
};

class IllegalTransport : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// `Module.function` naming the start term.
struct EntryPoint {
  std::string module = "Main";
  std::string function = "main";

  /// Parses `Module.function`; a bare name means `Main.<name>`.
  static std::optional<EntryPoint> parse(std::string_view text);
  std::string str() const { return module + "." + function; }
};

/// The engine state: a program snapshot plus the term being played.
class Session {
 public:
  Session(std::shared_ptr<const Program> program, EntryPoint entry, Budget budget = {});

  const Program& program() const { return *program_; }
  const std::shared_ptr<const Program>& program_ptr() const { return program_; }
  /// Later expansions use the new rules; the current term is left alone.
  void set_program(std::shared_ptr<const Program> program) { program_ = std::move(program); }

  const EntryPoint& entry() const { return entry_; }
  const Term& term() const { return *term_; }
  void reset_term();

  /// One next_item step on the current term. nullopt at the end of the list.
  std::optional<ExtractionResult> next();

 private:
  std::shared_ptr<const Program> program_;
  EntryPoint entry_;
  Budget budget_;
  TermPtr term_;
};

/// What the scheduler reports after every extraction.
struct ItemEvent {
  StreamItem item;
  std::set<SourceSpan> highlights;
  std::int64_t queue_time = 0;  // stream time the item was scheduled at
};

struct SchedulerConfig {
  std::int64_t latency_ms = 100;
  Mode mode;
};

/// Transport state machine and lookahead scheduling over a Sink.
///
/// Single-threaded: every call must come from the thread that owns the
/// session. `tick()` does whatever is due at the current clock time and
/// `next_wakeup()` says when the next tick is needed.
class Scheduler {
 public:
  Scheduler(Session& session, Sink& sink, const Clock& clock, SchedulerConfig config);

  void play();
  void pause();
  void resume();
  void stop();
  /// Takes effect from the next tick.
  void set_mode(Mode mode);

  /// RealTime: extracts items until the stream time passes now + d.
  std::vector<ScheduledMessage> pump();
  /// SlowMotion / SingleStep: extracts exactly one item and sends it now.
  std::optional<ExtractionResult> step_once();
  /// Trigger for SingleStep; fails unless playing in that mode.
  std::optional<ExtractionResult> step();

  void tick();
  std::optional<std::int64_t> next_wakeup() const;

  const TransportState& transport() const { return state_; }
  const Mode& mode() const { return config_.mode; }
  std::int64_t latency() const { return config_.latency_ms; }
  /// True once the stream has ended (or failed) and nothing is left to send.
  bool finished() const;
  bool stream_ended() const { return ended_; }
  const std::optional<std::string>& last_error() const { return last_error_; }
  std::size_t events_emitted() const { return events_emitted_; }

  /// Stop extracting after this many MIDI events; the stream then counts as ended.
  void set_event_limit(std::optional<std::size_t> limit) { event_limit_ = limit; }
  void set_item_listener(std::function<void(const ItemEvent&)> f) { on_item_ = std::move(f); }

 private:
  std::optional<ExtractionResult> extract();
  void emit(const MidiEvent& e, std::int64_t timestamp);

  Session& session_;
  Sink& sink_;
  const Clock& clock_;
  SchedulerConfig config_;
  TransportState state_;
  bool reset_on_play_ = false;
  bool ended_ = false;
  std::optional<std::string> last_error_;
  std::optional<std::int64_t> next_step_wall_;
  std::int64_t pause_wall_ = 0;
  std::size_t events_emitted_ = 0;
  std::optional<std::size_t> event_limit_;
  std::function<void(const ItemEvent&)> on_item_;
};

}  // namespace lseq
