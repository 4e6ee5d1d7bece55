#include "lseq/scheduler.hpp"

#include "lseq/syntax.hpp"

namespace lseq {

std::string to_string(Phase phase) {
  switch (phase) {
    case Phase::Playing: return "playing";
    case Phase::Paused: return "paused";
    case Phase::Stopped: return "stopped";
  }
  return "stopped";
}

std::string to_string(Mode::Kind kind) {
  switch (kind) {
    case Mode::Kind::RealTime: return "realtime";
    case Mode::Kind::SlowMotion: return "slow";
    case Mode::Kind::SingleStep: return "step";
  }
  return "realtime";
}

std::optional<Phase> parse_phase(std::string_view text) {
  if (text == "playing") return Phase::Playing;
  if (text == "paused") return Phase::Paused;
  if (text == "stopped") return Phase::Stopped;
  return std::nullopt;
}

std::optional<Mode::Kind> parse_mode_kind(std::string_view text) {
  if (text == "realtime") return Mode::Kind::RealTime;
  if (text == "slow") return Mode::Kind::SlowMotion;
  if (text == "step") return Mode::Kind::SingleStep;
  return std::nullopt;
}

std::optional<EntryPoint> EntryPoint::parse(std::string_view text) {
  EntryPoint e;
  const auto dot = text.rfind('.');
  if (dot == std::string_view::npos) {
    e.function = std::string(text);
  } else {
    e.module = std::string(text.substr(0, dot));
    e.function = std::string(text.substr(dot + 1));
  }
  if (e.module.empty() || e.function.empty() || !is_constructor_name(e.module) ||
      is_constructor_name(e.function)) {
    return std::nullopt;
  }
  return e;
}

// ---------------------------------------------------------------------------

Session::Session(std::shared_ptr<const Program> program, EntryPoint entry, Budget budget)
    : program_(std::move(program)), entry_(std::move(entry)), budget_(budget) {
  reset_term();
}

void Session::reset_term() { term_ = make_name(entry_.function, entry_.module); }

std::optional<ExtractionResult> Session::next() { return next_item(*program_, term_, budget_); }

// ---------------------------------------------------------------------------

Scheduler::Scheduler(Session& session, Sink& sink, const Clock& clock, SchedulerConfig config)
    : session_(session), sink_(sink), clock_(clock), config_(config) {
  if (config_.latency_ms <= 0) throw std::invalid_argument("latency must be positive");
  if (config_.mode.step_pause_ms <= 0) throw std::invalid_argument("step pause must be positive");
}

void Scheduler::play() {
  if (state_.phase != Phase::Stopped) {
    throw IllegalTransport("play needs a stopped session (currently " + to_string(state_.phase) + ")");
  }
  if (reset_on_play_) {
    session_.reset_term();
    reset_on_play_ = false;
  }
  ended_ = false;
  last_error_.reset();
  events_emitted_ = 0;
  state_.phase = Phase::Playing;
  state_.stream_time = sink_.queue_time();
  state_.queue_halted_at.reset();
  next_step_wall_ = clock_.now_ms();
}

void Scheduler::pause() {
  if (state_.phase != Phase::Playing) {
    throw IllegalTransport("pause needs a playing session (currently " + to_string(state_.phase) + ")");
  }
  sink_.poll();
  sink_.halt_clock();
  state_.phase = Phase::Paused;
  state_.queue_halted_at = sink_.queue_time();
  pause_wall_ = clock_.now_ms();
}

void Scheduler::resume() {
  if (state_.phase != Phase::Paused) {
    throw IllegalTransport("continue needs a paused session (currently " + to_string(state_.phase) + ")");
  }
  sink_.resume_clock();
  if (next_step_wall_) *next_step_wall_ += clock_.now_ms() - pause_wall_;
  state_.phase = Phase::Playing;
  state_.queue_halted_at.reset();
}

void Scheduler::stop() {
  if (state_.phase == Phase::Stopped) {
    throw IllegalTransport("stop needs a playing or paused session");
  }
  if (state_.phase == Phase::Paused) sink_.resume_clock();
  // Everything queued lies within d of the queue time, so this releases it all.
  sink_.advance_clock(config_.latency_ms);
  sink_.poll();
  state_.phase = Phase::Stopped;
  state_.queue_halted_at.reset();
  reset_on_play_ = true;
}

void Scheduler::set_mode(Mode mode) {
  if (mode.step_pause_ms <= 0) throw std::invalid_argument("step pause must be positive");
  const bool was_real_time = config_.mode.kind == Mode::Kind::RealTime;
  config_.mode = mode;
  if (mode.kind == Mode::Kind::RealTime && !was_real_time) {
    state_.stream_time = std::max(state_.stream_time, sink_.queue_time());
  }
  if (mode.kind == Mode::Kind::SlowMotion) next_step_wall_ = clock_.now_ms();
}

std::optional<ExtractionResult> Scheduler::extract() {
  if (ended_) return std::nullopt;
  if (event_limit_ && events_emitted_ >= *event_limit_) {
    ended_ = true;
    return std::nullopt;
  }
  std::optional<ExtractionResult> r;
  try {
    r = session_.next();
  } catch (const std::exception& e) {
    last_error_ = e.what();
    ended_ = true;
    stop();
    throw;
  }
  if (!r) {
    ended_ = true;
    return r;
  }
  if (on_item_) on_item_(ItemEvent{r->item, r->highlights, state_.stream_time});
  return r;
}

void Scheduler::emit(const MidiEvent& e, std::int64_t timestamp) {
  sink_.schedule(make_scheduled(timestamp, e));
  ++events_emitted_;
}

std::vector<ScheduledMessage> Scheduler::pump() {
  if (state_.phase != Phase::Playing || config_.mode.kind != Mode::Kind::RealTime) {
    throw IllegalTransport("pump runs only while playing in real time");
  }
  std::vector<ScheduledMessage> out;
  while (!ended_ && state_.stream_time <= sink_.queue_time() + config_.latency_ms) {
    auto r = extract();
    if (!r) break;
    if (const auto* w = std::get_if<WaitMs>(&r->item)) {
      state_.stream_time += w->duration;
    } else {
      const auto& e = std::get<MidiEvent>(r->item);
      emit(e, state_.stream_time);
      out.push_back(make_scheduled(state_.stream_time, e));
    }
  }
  return out;
}

std::optional<ExtractionResult> Scheduler::step_once() {
  if (state_.phase != Phase::Playing || config_.mode.kind == Mode::Kind::RealTime) {
    throw IllegalTransport("single items are extracted only in slow motion or single step");
  }
  state_.stream_time = sink_.queue_time();
  auto r = extract();
  if (r) {
    if (const auto* e = std::get_if<MidiEvent>(&r->item)) {
      emit(*e, sink_.queue_time());
      sink_.poll();
    }
  }
  return r;
}

std::optional<ExtractionResult> Scheduler::step() {
  if (state_.phase != Phase::Playing || config_.mode.kind != Mode::Kind::SingleStep) {
    throw IllegalTransport("step needs a playing session in single-step mode");
  }
  return step_once();
}

void Scheduler::tick() {
  if (state_.phase != Phase::Playing) return;
  sink_.poll();
  try {
    switch (config_.mode.kind) {
      case Mode::Kind::RealTime:
        pump();
        sink_.poll();
        break;
      case Mode::Kind::SlowMotion:
        while (!ended_ && next_step_wall_ && clock_.now_ms() >= *next_step_wall_) {
          step_once();
          *next_step_wall_ += config_.mode.step_pause_ms;
        }
        break;
      case Mode::Kind::SingleStep: break;
    }
  } catch (const ReductionError&) {
    return;  // recorded in last_error(); the session is stopped
  } catch (const StreamError&) {
    return;
  }
  if (ended_ && sink_.pending() == 0 && state_.phase == Phase::Playing) {
    state_.phase = Phase::Stopped;
    reset_on_play_ = true;
  }
}

std::optional<std::int64_t> Scheduler::next_wakeup() const {
  if (state_.phase != Phase::Playing) return std::nullopt;
  std::optional<std::int64_t> best = sink_.next_due_wall();
  auto consider = [&](std::int64_t wall) {
    if (!best || wall < *best) best = wall;
  };
  const std::int64_t now = clock_.now_ms();
  if (!ended_) {
    if (config_.mode.kind == Mode::Kind::RealTime) {
      consider(std::max(now, now + (state_.stream_time - config_.latency_ms - sink_.queue_time())));
    } else if (config_.mode.kind == Mode::Kind::SlowMotion && next_step_wall_) {
      consider(std::max(now, *next_step_wall_));
    }
  } else if (sink_.pending() == 0) {
    consider(now);  // the next tick moves the finished session to Stopped
  }
  return best;
}

bool Scheduler::finished() const { return ended_ && sink_.pending() == 0; }

}  // namespace lseq
