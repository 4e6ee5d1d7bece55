#include "lseq/runner.hpp"

#include "lseq/desugar.hpp"

namespace lseq {

void StateBoard::publish(const std::function<void(StateSnapshot&)>& change) {
  {
    std::lock_guard lock(mutex_);
    StateSnapshot next = snapshot_;
    change(next);
    next.seq = snapshot_.seq + 1;
    snapshot_ = std::move(next);
  }
  changed_.notify_all();
}

StateSnapshot StateBoard::current() const {
  std::lock_guard lock(mutex_);
  return snapshot_;
}

StateSnapshot StateBoard::wait_newer(std::uint64_t since, std::chrono::milliseconds timeout) const {
  std::unique_lock lock(mutex_);
  changed_.wait_for(lock, timeout, [&] { return released_ || snapshot_.seq > since; });
  return snapshot_;
}

void StateBoard::release_waiters() {
  {
    std::lock_guard lock(mutex_);
    released_ = true;
  }
  changed_.notify_all();
}

std::optional<TransportAction> parse_transport_action(std::string_view text) {
  if (text == "play") return TransportAction::Play;
  if (text == "pause") return TransportAction::Pause;
  if (text == "continue") return TransportAction::Continue;
  if (text == "stop") return TransportAction::Stop;
  if (text == "step") return TransportAction::Step;
  return std::nullopt;
}

// ---------------------------------------------------------------------------

Runner::Runner(std::shared_ptr<const Program> program, MessageWriter* writer, RunnerConfig config)
    : config_(std::move(config)),
      session_(std::move(program), config_.entry, config_.budget),
      sink_(clock(), writer),
      writer_(writer) {
  scheduler_ = std::make_unique<Scheduler>(session_, sink_, clock(), config_.scheduler);
  scheduler_->set_event_limit(config_.max_events);
  scheduler_->set_item_listener([this](const ItemEvent& e) { on_item(e); });
  publish_transport();
}

Runner::~Runner() { shutdown(); }

const Clock& Runner::clock() const {
  if (config_.virtual_clock) return virtual_;
  return steady_;
}

void Runner::on_item(const ItemEvent& e) {
  ++items_;
  std::string term = render_term(session_.term(), config_.render_depth);
  board_.publish([&](StateSnapshot& s) {
    s.current_term = std::move(term);
    s.highlights.assign(e.highlights.begin(), e.highlights.end());
    s.last_item = to_string(e.item);
    s.stream_time = e.queue_time;
    s.items += 1;
  });
}

void Runner::publish_transport() {
  const TransportState& t = scheduler_->transport();
  const StateSnapshot cur = board_.current();
  const std::uint64_t generation = session_.program().generation();
  const auto& error = scheduler_->last_error();
  const bool reset = t.phase == Phase::Playing && cur.phase == Phase::Stopped;
  if (cur.seq > 0 && cur.phase == t.phase && cur.mode == scheduler_->mode() &&
      cur.generation == generation && cur.error == error) {
    return;
  }
  std::string term = render_term(session_.term(), config_.render_depth);
  board_.publish([&](StateSnapshot& s) {
    s.phase = t.phase;
    s.mode = scheduler_->mode();
    s.generation = generation;
    s.error = error;
    if (reset) {
      s.items = 0;
      s.highlights.clear();
      s.last_item.reset();
    }
    if (s.items == 0) s.current_term = std::move(term);
  });
}

void Runner::after_tick() {
  publish_transport();
  if (scheduler_->transport().phase == Phase::Stopped && scheduler_->stream_ended()) {
    {
      std::lock_guard lock(mutex_);
      finished_ = true;
    }
    finished_cv_.notify_all();
  }
}

bool Runner::run_headless(const std::function<bool()>& interrupted) {
  scheduler_->play();
  publish_transport();
  while (scheduler_->transport().phase == Phase::Playing) {
    if (interrupted && interrupted()) {
      scheduler_->stop();
      break;
    }
    if (scheduler_->mode().kind == Mode::Kind::SingleStep) {
      // Nobody presses the step button in a headless run; step as fast as possible.
      try {
        if (!scheduler_->step()) scheduler_->tick();
      } catch (const ReductionError&) {
      } catch (const StreamError&) {
      }
      after_tick();
      continue;
    }
    scheduler_->tick();
    after_tick();
    if (scheduler_->transport().phase != Phase::Playing) break;
    const auto w = scheduler_->next_wakeup();
    if (!w) break;
    if (config_.virtual_clock) {
      virtual_.advance_to(*w);
    } else if (*w > steady_.now_ms()) {
      // Short sleeps keep the interrupt check responsive.
      std::this_thread::sleep_until(std::min(steady_.to_time_point(*w),
                                             std::chrono::steady_clock::now() + std::chrono::milliseconds(50)));
    }
  }
  if (writer_) writer_->finish();
  return !scheduler_->last_error().has_value();
}

void Runner::call(std::function<void()> f) {
  if (!thread_.joinable()) {
    f();
    after_tick();
    return;
  }
  auto task = std::make_shared<std::packaged_task<void()>>(std::move(f));
  auto result = task->get_future();
  {
    std::lock_guard lock(mutex_);
    commands_.push_back([task] { (*task)(); });
  }
  wake_.notify_all();
  result.get();
}

TransportState Runner::transport(std::optional<TransportAction> action, std::optional<Mode> mode) {
  TransportState out;
  call([&] {
    if (mode) scheduler_->set_mode(*mode);
    if (action) {
      switch (*action) {
        case TransportAction::Play:
          scheduler_->play();
          {
            std::lock_guard lock(mutex_);
            finished_ = false;
          }
          break;
        case TransportAction::Pause: scheduler_->pause(); break;
        case TransportAction::Continue: scheduler_->resume(); break;
        case TransportAction::Stop: scheduler_->stop(); break;
        case TransportAction::Step:
          try {
            scheduler_->step();
          } catch (const ReductionError&) {
          } catch (const StreamError&) {
          }
          break;
      }
    }
    publish_transport();
    out = scheduler_->transport();
  });
  return out;
}

void Runner::swap_program(std::shared_ptr<const Program> program) {
  call([&] {
    session_.set_program(std::move(program));
    publish_transport();
  });
}

void Runner::advance_clock(std::int64_t ms) {
  if (!config_.virtual_clock) throw std::logic_error("advance_clock needs the virtual clock");
  call([&] {
    virtual_.advance(ms);
    scheduler_->tick();
  });
}

bool Runner::wait_finished(std::chrono::milliseconds timeout) {
  std::unique_lock lock(mutex_);
  return finished_cv_.wait_for(lock, timeout, [&] { return finished_; });
}

void Runner::start() {
  if (thread_.joinable()) return;
  quit_ = false;
  thread_ = std::thread([this] { loop(); });
}

void Runner::shutdown() {
  if (!thread_.joinable()) return;
  {
    std::lock_guard lock(mutex_);
    quit_ = true;
  }
  wake_.notify_all();
  thread_.join();
  if (writer_) writer_->finish();
}

void Runner::loop() {
  std::unique_lock lock(mutex_);
  auto woken = [&] { return quit_ || !commands_.empty(); };
  while (!quit_) {
    while (!commands_.empty()) {
      auto command = std::move(commands_.front());
      commands_.pop_front();
      lock.unlock();
      command();
      lock.lock();
    }
    lock.unlock();
    scheduler_->tick();
    after_tick();
    lock.lock();
    if (woken()) continue;
    const auto w = scheduler_->next_wakeup();
    if (config_.virtual_clock) {
      if (w && config_.jump) {
        virtual_.advance_to(*w);
        continue;
      }
      wake_.wait(lock, woken);
    } else if (w) {
      wake_.wait_until(lock, steady_.to_time_point(*w), woken);
    } else {
      wake_.wait(lock, woken);
    }
  }
}

}  // namespace lseq
