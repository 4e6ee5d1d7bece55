#include <sys/wait.h>

#include <cstdio>
#include <filesystem>
#include <fstream>

#include "doctest.h"
#include "midi_reader.hpp"
#include "support.hpp"

using namespace lseq;
using namespace lseq::testing;

namespace {

struct Run {
  int exit_code = -1;
  std::string out;
  std::string err;
};

struct Songs {
  Songs() {
    static int counter = 0;
    dir = std::filesystem::temp_directory_path() /
          ("lseq_cli_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
    std::filesystem::create_directories(dir);
  }
  ~Songs() { std::filesystem::remove_all(dir); }
  void write(const std::string& name, const std::string& text) const {
    std::ofstream(dir / name, std::ios::binary) << text;
  }
  std::filesystem::path dir;
};

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  return std::string(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

Run run_cli(const std::string& args) {
  const auto err_path = std::filesystem::temp_directory_path() / ("lseq_cli_err_" + std::to_string(::getpid()));
  const std::string cmd = std::string(LSEQ_CLI_PATH) + " " + args + " 2>" + err_path.string();
  Run r;
  FILE* pipe = ::popen(cmd.c_str(), "r");
  REQUIRE(pipe);
  char buf[4096];
  std::size_t n;
  while ((n = std::fread(buf, 1, sizeof buf, pipe)) > 0) r.out.append(buf, n);
  const int status = ::pclose(pipe);
  r.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  r.err = slurp(err_path);
  std::filesystem::remove(err_path);
  return r;
}

/// Log lines expected for a stream, by summing waits and formatting each event.
std::string expected_log(const std::vector<StreamItem>& items) {
  std::string out;
  std::int64_t t = 0;
  for (const auto& item : items) {
    if (const auto* w = std::get_if<WaitMs>(&item)) {
      t += w->duration;
      continue;
    }
    const auto& e = std::get<MidiEvent>(item);
    REQUIRE((e.kind == MidiKind::NoteOn || e.kind == MidiKind::NoteOff));
    const std::string kind = e.kind == MidiKind::NoteOn ? "ON" : "OFF";
    const std::string fields = "pitch=" + std::to_string(e.data1) + " vel=" + std::to_string(e.data2);
    out += "t=" + std::to_string(t) + " port=0 ch=0 " + kind + " " + fields + "\n";
  }
  return out;
}

}  // namespace

TEST_CASE("headless melody run") {
  Songs songs;
  songs.write("Main.hs", kMelody);
  const Run r = run_cli("--dir " + songs.dir.string() + " --virtual-clock");
  CHECK(r.exit_code == 0);
  CHECK(r.out == expected_log(basic_melody_items()));
  CHECK(split_lines(r.out).size() == 12);
}

TEST_CASE("--max-items on the endless loop") {
  Songs songs;
  songs.write("Main.hs", looped_melody());
  const Run r = run_cli("--dir " + songs.dir.string() + " --sink log --max-items 12 --virtual-clock");
  CHECK(r.exit_code == 0);
  const auto lines = split_lines(r.out);
  REQUIRE(lines.size() == 12);
  CHECK(r.out == expected_log(basic_melody_items()));
}

TEST_CASE("headless runs are deterministic") {
  Songs songs;
  songs.write("Main.hs", looped_melody());
  const std::string args = "--dir " + songs.dir.string() + " --max-items 500 --virtual-clock";
  const Run a = run_cli(args);
  const Run b = run_cli(args);
  CHECK(a.exit_code == 0);
  CHECK(split_lines(a.out).size() == 500);
  CHECK(a.out == b.out);
}

TEST_CASE("modes change timing, not content") {
  Songs songs;
  songs.write("Main.hs", looped_melody());
  auto strip_time = [](const std::string& log) {
    std::vector<std::string> out;
    for (const auto& line : split_lines(log)) out.push_back(line.substr(line.find(' ')));
    return out;
  };
  const std::string base = "--dir " + songs.dir.string() + " --max-items 60 --virtual-clock";
  const Run rt = run_cli(base);
  const Run slow = run_cli(base + " --mode slow --step-pause 50");
  const Run step = run_cli(base + " --mode step");
  CHECK(rt.exit_code == 0);
  CHECK(slow.exit_code == 0);
  CHECK(step.exit_code == 0);
  CHECK(strip_time(rt.out) == strip_time(slow.out));
  CHECK(strip_time(rt.out) == strip_time(step.out));
  // One item per 50 ms pause: On c, Wait, Off c.
  const auto lines = split_lines(slow.out);
  REQUIRE(lines.size() >= 2);
  CHECK(lines[1].rfind("t=100 ", 0) == 0);
}

TEST_CASE("midi file sink") {
  Songs songs;
  songs.write("Main.hs", kMelody);
  const auto out = songs.dir / "out.mid";
  const Run r = run_cli("--dir " + songs.dir.string() + " --sink smf --out " + out.string() + " --virtual-clock");
  CHECK(r.exit_code == 0);
  const std::string bytes = slurp(out);
  const SmfFile f = read_smf(std::vector<std::uint8_t>(bytes.begin(), bytes.end()));
  std::string log;
  for (const auto& m : smf_messages(f)) log += format_log_line(m) + "\n";
  CHECK(log == expected_log(basic_melody_items()));
}

TEST_CASE("exit codes") {
  Songs songs;
  songs.write("Main.hs", kMelody);
  const std::string dir = "--dir " + songs.dir.string();
  CHECK(run_cli("--dir /nonexistent/songs").exit_code == 1);
  CHECK(run_cli("").exit_code == 2);
  CHECK(run_cli(dir + " --bogus").exit_code == 2);
  CHECK(run_cli(dir + " --mode fast").exit_code == 2);
  CHECK(run_cli(dir + " --latency 0").exit_code == 2);
  CHECK(run_cli(dir + " --entry main.Main").exit_code == 2);
  CHECK(run_cli(dir + " --serve nowhere").exit_code == 2);
  CHECK(run_cli(dir + " --sink smf").exit_code == 2);
  CHECK(run_cli(dir + " --entry Main.tune --virtual-clock").exit_code == 1);
  CHECK(run_cli(dir + " --seed 7 --virtual-clock").exit_code == 0);

  SUBCASE("load errors name the module and position") {
    Songs broken;
    broken.write("Main.hs", "main = [] \n");
    const Run r = run_cli("--dir " + broken.dir.string());
    CHECK(r.exit_code == 1);
    CHECK(r.err.find("Main:11") != std::string::npos);
  }
  SUBCASE("a failing stream stops with an error") {
    Songs bad;
    bad.write("Main.hs", "main = [Event 5] ;\n");
    const Run r = run_cli("--dir " + bad.dir.string() + " --virtual-clock");
    CHECK(r.exit_code == 1);
    CHECK(!r.err.empty());
  }
}

TEST_CASE("serving with a bounded run exits by itself") {
  Songs songs;
  songs.write("Main.hs", looped_melody());
  const Run r =
      run_cli("--dir " + songs.dir.string() + " --serve 127.0.0.1:0 --max-items 30 --virtual-clock");
  CHECK(r.exit_code == 0);
  CHECK(split_lines(r.out).size() == 30);
  CHECK(r.err.find("serving on http://127.0.0.1:") != std::string::npos);
}
