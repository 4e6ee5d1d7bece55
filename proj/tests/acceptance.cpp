// Acceptance run: one PASS/FAIL line per criterion. Exits non-zero when a
// criterion fails that is not listed as a known limitation.

#include <sys/wait.h>

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <set>
#include <sstream>

#include "httplib.h"
#include "json.hpp"
#include "lseq/service.hpp"
#include "midi_reader.hpp"
#include "oracles.hpp"
#include "support.hpp"

using namespace lseq;
using namespace lseq::testing;
using nlohmann::json;
using Wall = std::chrono::steady_clock;

namespace {

// Pinned tolerances.
constexpr double kMelodySeconds = 1.0;
constexpr std::size_t kLoopItems = 10'000;
constexpr double kLoopSeconds = 10.0;
constexpr int kMergePairs = 1000;
constexpr double kMergeSeconds = 30.0;
constexpr std::int64_t kLatency = 100;
constexpr std::int64_t kPauseDelta = 350;
constexpr std::size_t kModeItems = 100;
constexpr std::size_t kFibElements = 50;
// Reaching the default 10M-node limit takes minutes (element 28); this cap
// ends the attempt a few elements earlier with the same conclusion.
constexpr std::size_t kFibNodeCap = 1'000'000;

// Criteria expected to fail; see the README.
const std::set<int> kKnownLimitations = {7};

struct Outcome {
  bool pass = false;
  std::string detail;
};

double seconds_since(Wall::time_point t0) {
  return std::chrono::duration<double>(Wall::now() - t0).count();
}

std::string fmt(double s) {
  std::ostringstream out;
  out.precision(3);
  out << std::fixed << s << " s";
  return out.str();
}

struct TempDir {
  TempDir() {
    path = std::filesystem::temp_directory_path() / ("lseq_acceptance_" + std::to_string(::getpid()));
    std::filesystem::create_directories(path);
  }
  ~TempDir() { std::filesystem::remove_all(path); }
  std::filesystem::path path;
};

std::pair<int, std::string> run_command(const std::string& cmd) {
  FILE* pipe = ::popen(cmd.c_str(), "r");
  if (!pipe) return {-1, ""};
  std::string out;
  char buf[4096];
  std::size_t n;
  while ((n = std::fread(buf, 1, sizeof buf, pipe)) > 0) out.append(buf, n);
  const int status = ::pclose(pipe);
  return {WIFEXITED(status) ? WEXITSTATUS(status) : -1, out};
}

// 1 -------------------------------------------------------------------------

Outcome melody_reproduction() {
  // Hand simulation of the melody: three items per note, waits 200 or 400.
  const std::vector<StreamItem> expected_items{
      note_on(60, 64), WaitMs{200}, note_off(60, 64), note_on(62, 64), WaitMs{200}, note_off(62, 64),
      note_on(64, 64), WaitMs{200}, note_off(64, 64), note_on(65, 64), WaitMs{200}, note_off(65, 64),
      note_on(67, 64), WaitMs{400}, note_off(67, 64), note_on(67, 64), WaitMs{400}, note_off(67, 64)};
  const std::string expected_log =
      "t=0 port=0 ch=0 ON pitch=60 vel=64\n"
      "t=200 port=0 ch=0 OFF pitch=60 vel=64\n"
      "t=200 port=0 ch=0 ON pitch=62 vel=64\n"
      "t=400 port=0 ch=0 OFF pitch=62 vel=64\n"
      "t=400 port=0 ch=0 ON pitch=64 vel=64\n"
      "t=600 port=0 ch=0 OFF pitch=64 vel=64\n"
      "t=600 port=0 ch=0 ON pitch=65 vel=64\n"
      "t=800 port=0 ch=0 OFF pitch=65 vel=64\n"
      "t=800 port=0 ch=0 ON pitch=67 vel=64\n"
      "t=1200 port=0 ch=0 OFF pitch=67 vel=64\n"
      "t=1200 port=0 ch=0 ON pitch=67 vel=64\n"
      "t=1600 port=0 ch=0 OFF pitch=67 vel=64\n";

  const auto t0 = Wall::now();
  Program p = load_main(kMelody);
  TermPtr t = parse_term("main", "Main");
  std::vector<StreamItem> items;
  while (auto r = next_item(p, t)) items.push_back(r->item);

  TempDir dir;
  std::ofstream(dir.path / "Main.hs") << kMelody;
  const auto [code, log] = run_command(std::string(LSEQ_CLI_PATH) + " --dir " + dir.path.string() +
                                       " --sink log --virtual-clock");
  const double elapsed = seconds_since(t0);
  const bool pass = items == expected_items && code == 0 && log == expected_log && elapsed < kMelodySeconds;
  return {pass, std::to_string(items.size()) + " items, " + std::to_string(split_lines(log).size()) +
                    " log lines, exit " + std::to_string(code) + ", " + fmt(elapsed)};
}

// 2 -------------------------------------------------------------------------

Outcome infinite_corecursion() {
  Program p = load_main(looped_melody());
  TermPtr t = parse_term("main", "Main");
  const std::size_t pass_len = basic_melody_items().size();
  const auto expected = basic_melody_items();
  std::vector<std::size_t> boundary_nodes;  // after each complete pass
  std::size_t peak = 0;
  bool content_ok = true;
  const auto t0 = Wall::now();
  for (std::size_t i = 0; i < kLoopItems; ++i) {
    auto r = next_item(p, t);
    if (!r) return {false, "stream ended after " + std::to_string(i) + " items"};
    content_ok = content_ok && r->item == expected[i % pass_len];
    const std::size_t nodes = term_node_count(*t);
    peak = std::max(peak, nodes);
    if ((i + 1) % pass_len == 0) boundary_nodes.push_back(nodes);
  }
  const double elapsed = seconds_since(t0);
  if (boundary_nodes.size() < 100) return {false, "fewer than 100 passes"};
  const std::size_t at10 = boundary_nodes[9];
  const std::size_t at100 = boundary_nodes[99];
  const bool pass = content_ok && elapsed < kLoopSeconds && at10 == at100;
  return {pass, std::to_string(kLoopItems) + " items in " + fmt(elapsed) + ", nodes at pass 10 = " +
                    std::to_string(at10) + ", pass 100 = " + std::to_string(at100) +
                    ", peak = " + std::to_string(peak)};
}

// Service fixture for 3 and 8 ------------------------------------------------

class Recorder final : public MessageWriter {
 public:
  void write(const ScheduledMessage& msg) override {
    std::lock_guard lock(mutex_);
    events_.push_back(msg.event);
  }
  std::vector<MidiEvent> events() {
    std::lock_guard lock(mutex_);
    return events_;
  }

 private:
  std::mutex mutex_;
  std::vector<MidiEvent> events_;
};

struct Live {
  explicit Live(const std::string& source)
      : store(ProgramStore::from_sources({{"Main", source}})),
        runner(store->program(), &recorder, config()),
        service(*store, runner),
        port(service.bind("127.0.0.1", 0)),
        client("127.0.0.1", port) {
    runner.start();
    service.start();
  }
  ~Live() {
    service.stop();
    runner.shutdown();
  }
  static RunnerConfig config() {
    RunnerConfig c;
    c.virtual_clock = true;
    c.scheduler.mode = Mode::single_step();
    return c;
  }
  int transport(const std::string& action) {
    auto res = client.Post("/transport", json{{"action", action}}.dump(), "application/json");
    return res ? res->status : -1;
  }
  int edit(const std::string& text) {
    auto res = client.Post("/module/Main", json{{"editable_text", text}}.dump(), "application/json");
    return res ? res->status : -1;
  }
  /// Steps until `n` MIDI events have been delivered.
  std::vector<MidiEvent> events_until(std::size_t n) {
    for (int guard = 0; guard < 100'000 && recorder.events().size() < n; ++guard) {
      if (transport("step") != 200) break;
    }
    return recorder.events();
  }

  Recorder recorder;
  std::unique_ptr<ProgramStore> store;
  Runner runner;
  HttpService service;
  int port;
  httplib::Client client;
};

std::string editable_song(const std::string& main) {
  return "module Main where\n" + std::string(kMelodyDefinitions) + "-- EDITABLE\n" + main;
}

std::vector<MidiEvent> events_of(const std::vector<StreamItem>& items) {
  std::vector<MidiEvent> out;
  for (const auto& i : items) {
    if (const auto* e = std::get_if<MidiEvent>(&i)) out.push_back(*e);
  }
  return out;
}

// 3 -------------------------------------------------------------------------

Outcome hot_swap() {
  Live live(editable_song(kLoopMain));
  if (live.transport("play") != 200) return {false, "play failed"};
  std::size_t items = 0;
  for (; items < 6; ++items) live.transport("step");
  const int status = live.edit(kLoopAMain);
  // Items 1-18 are the old pass; the rest must be the new main from scratch.
  const std::size_t total = 18 + 54;
  for (; items < total; ++items) live.transport("step");
  const auto got = live.recorder.events();

  Program swapped = load_main(std::string(kLoopAMain) + kMelodyDefinitions);
  TermPtr fresh = parse_term("main", "Main");
  auto expected_items = basic_melody_items();
  const auto continuation = take_items(swapped, fresh, total - 18);
  expected_items.insert(expected_items.end(), continuation.begin(), continuation.end());
  const auto expected = events_of(expected_items);
  // The new main plays the melody once more, then loopA: g e c.
  const auto loop_a = events_of(melody_items({67, 64, 60}, {200, 200, 400}));
  const bool loop_a_follows =
      expected.size() >= 30 && std::equal(loop_a.begin(), loop_a.end(), expected.begin() + 24);
  const bool pass = status == 200 && got == expected && loop_a_follows;
  return {pass, "edit status " + std::to_string(status) + ", " + std::to_string(got.size()) +
                    " events compared over " + std::to_string(total) + " items"};
}

// 4 -------------------------------------------------------------------------

Outcome no_sharing() {
  Program p = load_main("main = [] ;\nf x = x:x:[] ;\n");
  TermPtr t = parse_term("f (2+3)", "Main");
  Reducer r(p, Budget{}, *t);
  r.whnf(t);
  r.force(t->function->argument, TermPath{0, 1});
  const std::string rendered = render_term(*t);
  const bool pass = strip_spaces(rendered) == strip_spaces("5 : (2+3) : []");
  return {pass, "state renders as \"" + rendered + "\""};
}

// 5 -------------------------------------------------------------------------

std::optional<std::vector<StreamItem>> normal_form_list(const Program& p, TermPtr t) {
  Reducer r(p, Budget{}, *t);
  r.force(t);
  std::vector<StreamItem> out;
  const Term* cell = t.get();
  while (cell->is_apply()) {
    out.push_back(decode_event(*cell->function->argument));
    cell = cell->argument.get();
  }
  if (!cell->is_constructor(sym::nil())) return std::nullopt;
  return out;
}

Outcome merge_correctness() {
  Program p = load({});
  std::mt19937 rng(20240601);
  int mismatches = 0;
  int duration_failures = 0;
  const auto t0 = Wall::now();
  for (int i = 0; i < kMergePairs; ++i) {
    const auto a = random_stream(rng, 20, 10);
    const auto b = random_stream(rng, 20, 10);
    TermPtr t = make_call(make_name("=:=", "Midi"), items_to_list(a), items_to_list(b));
    const auto got = normal_form_list(p, std::move(t));
    if (!got || *got != merge_oracle(a, b)) ++mismatches;
    if (!got || total_duration(*got) != std::max(total_duration(a), total_duration(b))) ++duration_failures;
  }
  const double elapsed = seconds_since(t0);
  const bool pass = mismatches == 0 && duration_failures == 0 && elapsed < kMergeSeconds;
  return {pass, std::to_string(kMergePairs) + " pairs, " + std::to_string(mismatches) + " mismatches, " +
                    std::to_string(duration_failures) + " duration failures, " + fmt(elapsed)};
}

// 6 -------------------------------------------------------------------------

class SinkLog final : public MessageWriter {
 public:
  void write(const ScheduledMessage& msg) override { got.push_back(msg); }
  std::vector<ScheduledMessage> got;
};

struct Rig {
  explicit Rig(SchedulerConfig config)
      : program(std::make_shared<const Program>(load_main(looped_melody()))),
        session(program, EntryPoint{}),
        sink(clock, &log),
        scheduler(session, sink, clock, config) {}
  void run_until(std::int64_t until) {
    for (int guard = 0; guard < 1'000'000; ++guard) {
      scheduler.tick();
      const auto w = scheduler.next_wakeup();
      if (!w || *w > until) break;
      clock.advance_to(*w);
    }
    clock.advance_to(until);
    scheduler.tick();
  }
  std::shared_ptr<const Program> program;
  VirtualClock clock;
  SinkLog log;
  Session session;
  Sink sink;
  Scheduler scheduler;
};

Outcome timing_model() {
  // (a) lookahead bound after every pump, at uneven clock steps.
  bool bound_ok = true;
  {
    Rig rig({kLatency, {}});
    rig.scheduler.play();
    std::mt19937 rng(6);
    for (int i = 0; i < 2000; ++i) {
      rig.clock.advance(static_cast<std::int64_t>(rng() % 250));
      rig.scheduler.tick();
      for (const auto& m : rig.sink.pending_messages()) bound_ok = bound_ok && m.timestamp <= rig.clock.now_ms() + kLatency;
      for (const auto& d : rig.sink.drain()) bound_ok = bound_ok && d.wall >= d.message.timestamp;
    }
  }
  // (b) a pause of 350 ms shifts every later delivery by exactly 350.
  bool shift_ok = true;
  std::size_t shifted = 0;
  {
    Rig rig({kLatency, {}});
    rig.scheduler.play();
    rig.run_until(150);
    rig.scheduler.pause();
    rig.sink.drain();
    rig.clock.advance(kPauseDelta);
    rig.scheduler.tick();
    shift_ok = rig.sink.drain().empty();
    rig.scheduler.resume();
    rig.run_until(5000);
    for (const auto& d : rig.sink.drain()) {
      shift_ok = shift_ok && d.wall == d.message.timestamp + kPauseDelta;
      ++shifted;
    }
    shift_ok = shift_ok && shifted > 0;
  }
  // (c) stop flushes everything queued, timestamps untouched.
  bool flush_ok = true;
  std::size_t flushed_count = 0;
  {
    Rig rig({kLatency, {}});
    rig.scheduler.play();
    rig.run_until(150);
    rig.sink.drain();
    const auto queued = rig.sink.pending_messages();
    rig.scheduler.stop();
    const auto flushed = rig.sink.drain();
    flushed_count = flushed.size();
    flush_ok = !queued.empty() && rig.sink.pending() == 0 && flushed.size() == queued.size();
    for (std::size_t i = 0; flush_ok && i < flushed.size(); ++i) flush_ok = flushed[i].message == queued[i];
  }
  return {bound_ok && shift_ok && flush_ok,
          std::string("(a) ") + (bound_ok ? "ok" : "violated") + ", (b) " + std::to_string(shifted) +
              " deliveries " + (shift_ok ? "shifted by 350" : "wrong") + ", (c) " + std::to_string(flushed_count) +
              " flushed " + (flush_ok ? "intact" : "wrong")};
}

// 7 -------------------------------------------------------------------------

Outcome fibonacci_growth() {
  Program p = load_main(kFibonacci);
  TermPtr t = parse_term("main", "Main");
  std::vector<std::size_t> nodes;
  std::string stopped;
  const auto t0 = Wall::now();
  try {
    while (nodes.size() < kFibElements) {
      auto e = next_element(p, t, Budget{Budget{}.max_steps, kFibNodeCap});
      if (!e) {
        stopped = "list ended";
        break;
      }
      nodes.push_back(term_node_count(*t));
    }
  } catch (const ReductionError& e) {
    stopped = e.what();
  }
  const double elapsed = seconds_since(t0);
  std::string detail = "extracted " + std::to_string(nodes.size()) + " of " + std::to_string(kFibElements);
  if (nodes.size() >= 10) detail += ", nodes at 10 = " + std::to_string(nodes[9]);
  if (!nodes.empty()) detail += ", at " + std::to_string(nodes.size()) + " = " + std::to_string(nodes.back());
  if (!stopped.empty()) detail += ", stopped: " + stopped;
  detail += ", " + fmt(elapsed);
  const bool pass = nodes.size() >= kFibElements && nodes[kFibElements - 1] > nodes[9];
  return {pass, detail};
}

// 8 -------------------------------------------------------------------------

Outcome edit_gating() {
  Live live(editable_song(kLoopMain));
  live.transport("play");
  live.events_until(2);  // On c, Off c

  const auto hash_before = live.store->hash();
  const auto print_before = program_fingerprint(live.store->rebuild());
  const int bad = live.edit("main = note qn c ++ (note qn d ;\n");
  const bool unchanged =
      live.store->hash() == hash_before && program_fingerprint(live.store->rebuild()) == print_before;

  const int good = live.edit("main = note qn e ++ main ;\n");
  const auto pass_events = events_of(basic_melody_items());
  const auto got = live.events_until(pass_events.size() + 4);
  auto expected = pass_events;
  const auto tail = events_of(melody_items({64, 64}, {200, 200}));
  expected.insert(expected.end(), tail.begin(), tail.end());
  const bool pass = bad == 422 && unchanged && good == 200 && got == expected;
  return {pass, "invalid edit " + std::to_string(bad) + (unchanged ? " (store unchanged)" : " (store changed)") +
                    ", valid edit " + std::to_string(good) + ", stream " +
                    (got == expected ? "switched at the next main" : "did not switch as expected")};
}

// 9 -------------------------------------------------------------------------

std::vector<StreamItem> items_in_mode(Mode mode) {
  Rig rig({kLatency, mode});
  std::vector<StreamItem> items;
  rig.scheduler.set_item_listener([&](const ItemEvent& e) { items.push_back(e.item); });
  rig.scheduler.play();
  for (int guard = 0; guard < 100'000 && items.size() < kModeItems; ++guard) {
    if (mode.kind == Mode::Kind::SingleStep) {
      rig.scheduler.step();
    } else {
      rig.scheduler.tick();
      const auto w = rig.scheduler.next_wakeup();
      if (!w) break;
      rig.clock.advance_to(*w);
    }
  }
  items.resize(std::min(items.size(), kModeItems));
  return items;
}

Outcome mode_equivalence() {
  const auto rt = items_in_mode(Mode::real_time());
  const auto slow = items_in_mode(Mode::slow_motion(500));
  const auto step = items_in_mode(Mode::single_step());
  const bool pass = rt.size() == kModeItems && rt == slow && rt == step;
  return {pass, std::to_string(rt.size()) + "/" + std::to_string(slow.size()) + "/" + std::to_string(step.size()) +
                    " items, " + (rt == slow && rt == step ? "identical" : "different")};
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
      {"melody reproduction", melody_reproduction},
      {"infinite co-recursion", infinite_corecursion},
      {"hot swap", hot_swap},
      {"no sharing", no_sharing},
      {"merge correctness", merge_correctness},
      {"timing model", timing_model},
      {"fibonacci growth", fibonacci_growth},
      {"edit gating", edit_gating},
      {"mode equivalence", mode_equivalence},
  };
  int unexpected = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const int number = static_cast<int>(i + 1);
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const bool known = kKnownLimitations.count(number) > 0;
    std::cout << (o.pass ? "PASS" : "FAIL") << " " << number << " " << criteria[i].first << ": " << o.detail
              << (!o.pass && known ? " [known limitation]" : "") << std::endl;
    if (!o.pass && !known) ++unexpected;
  }
  return unexpected == 0 ? 0 : 1;
}
