#include <atomic>
#include <csignal>
#include <fstream>
#include <iostream>
#include <memory>

#include "CLI11.hpp"
#include "lseq/midi.hpp"
#include "lseq/runner.hpp"
#include "lseq/service.hpp"
#include "lseq/store.hpp"

namespace {

std::atomic<bool> g_interrupted{false};

void on_signal(int) { g_interrupted = true; }

}  // namespace

int main(int argc, char** argv) {
  using namespace lseq;

  CLI::App app{"Live sequencer: plays a module directory as MIDI"};
  std::string dir;
  std::string entry_text = "Main.main";
  std::string mode_text = "realtime";
  std::int64_t latency = 100;
  std::int64_t step_pause = 500;
  std::string sink_kind = "log";
  std::string out_path;
  std::string serve;
  std::optional<std::size_t> max_items;
  std::optional<std::uint64_t> seed;  // reserved
  bool virtual_clock = false;
  bool persist = false;
  std::string ui_dir;

  app.add_option("--dir", dir, "Module directory")->required();
  app.add_option("--entry", entry_text, "Start term as Module.function");
  app.add_option("--mode", mode_text, "realtime, slow or step")
      ->check(CLI::IsMember({"realtime", "slow", "step"}));
  app.add_option("--latency", latency, "Lookahead in milliseconds")->check(CLI::PositiveNumber);
  app.add_option("--step-pause", step_pause, "Slow-motion pause in milliseconds")->check(CLI::PositiveNumber);
  app.add_option("--sink", sink_kind, "log, smf or null")->check(CLI::IsMember({"log", "smf", "null"}));
  app.add_option("--out", out_path, "Sink output file (log defaults to standard output)");
  app.add_option("--serve", serve, "Serve HTTP on host:port");
  app.add_option("--max-items", max_items, "Stop after this many MIDI events");
  app.add_option("--seed", seed, "Reserved; has no effect");
  app.add_flag("--virtual-clock", virtual_clock, "Run on a virtual clock that skips idle time");
  app.add_flag("--persist", persist, "Write accepted edits back to the module files");
  app.add_option("--ui-dir", ui_dir, "Directory served under /ui/");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  const auto entry = EntryPoint::parse(entry_text);
  if (!entry) {
    std::cerr << "--entry: expected Module.function, got " << entry_text << "\n";
    return 2;
  }
  std::optional<std::pair<std::string, int>> address;
  if (!serve.empty()) {
    address = parse_address(serve);
    if (!address) {
      std::cerr << "--serve: expected host:port, got " << serve << "\n";
      return 2;
    }
  }
  if (sink_kind == "smf" && out_path.empty()) {
    std::cerr << "--sink smf needs --out\n";
    return 2;
  }

  std::unique_ptr<ProgramStore> store;
  try {
    store = ProgramStore::load_directory(dir);
  } catch (const LoadError& e) {
    for (const auto& d : e.diagnostics()) std::cerr << to_string(d) << "\n";
    return 1;
  }
  store->set_persist(persist);
  {
    const auto program = store->program();
    const CompiledModule* m = program->module(entry->module);
    if (!m || !m->functions.count(Symbol(entry->function))) {
      std::cerr << "entry point " << entry->str() << " is not defined\n";
      return 1;
    }
  }

  std::ofstream out_file;
  std::unique_ptr<MessageWriter> writer;
  if (sink_kind == "log") {
    if (!out_path.empty()) {
      out_file.open(out_path, std::ios::binary | std::ios::trunc);
      if (!out_file) {
        std::cerr << "cannot write " << out_path << "\n";
        return 1;
      }
    }
    writer = std::make_unique<LogWriter>(out_path.empty() ? std::cout : out_file);
  } else if (sink_kind == "smf") {
    writer = std::make_unique<SmfWriter>(out_path);
  } else {
    writer = std::make_unique<NullWriter>();
  }

  RunnerConfig config;
  config.entry = *entry;
  config.scheduler.latency_ms = latency;
  config.scheduler.mode.step_pause_ms = step_pause;
  config.scheduler.mode.kind = *parse_mode_kind(mode_text);
  config.virtual_clock = virtual_clock;
  config.jump = virtual_clock;
  config.max_events = max_items;

  std::signal(SIGINT, on_signal);
  std::signal(SIGTERM, on_signal);

  try {
    Runner runner(store->program(), writer.get(), config);
    if (!address) {
      const bool ok = runner.run_headless([] { return g_interrupted.load(); });
      if (!ok) {
        std::cerr << "stopped: " << runner.board().current().error.value_or("error") << "\n";
        return 1;
      }
      return 0;
    }

    HttpService service(*store, runner);
    const int port = service.bind(address->first, address->second);
    if (port < 0) {
      std::cerr << "cannot listen on " << serve << "\n";
      return 1;
    }
    runner.start();
    service.start();
    std::cerr << "serving on http://" << address->first << ":" << port << "/\n";
    runner.transport(TransportAction::Play);
    while (!g_interrupted && !runner.wait_finished(std::chrono::milliseconds(100))) {
    }
    service.stop();
    runner.shutdown();
    const auto error = runner.board().current().error;
    if (error) {
      std::cerr << "stopped: " << *error << "\n";
      return 1;
    }
  } catch (const std::exception& e) {
    std::cerr << e.what() << "\n";
    return 1;
  }
  return 0;
}
