#include "lseq/midi.hpp"

#include <algorithm>
#include <fstream>
#include <iostream>
#include <ostream>

namespace lseq {

ScheduledMessage make_scheduled(std::int64_t timestamp, const MidiEvent& event) {
  const PortChannel pc = split_channel(event.channel);
  ScheduledMessage msg{timestamp, pc.port, pc.channel, event};
  msg.event.channel = 0;
  return msg;
}

std::string format_log_line(const ScheduledMessage& msg) {
  std::string line = "t=" + std::to_string(msg.timestamp) + " port=" + std::to_string(msg.port) +
                     " ch=" + std::to_string(msg.channel) + " ";
  const MidiEvent& e = msg.event;
  switch (e.kind) {
    case MidiKind::NoteOn:
    case MidiKind::NoteOff:
      line += e.kind == MidiKind::NoteOn ? "ON" : "OFF";
      line += " pitch=" + std::to_string(e.data1) + " vel=" + std::to_string(e.data2);
      break;
    case MidiKind::ProgramChange: line += "PGM prog=" + std::to_string(e.data1); break;
    case MidiKind::Controller:
      line += "CC cc=" + std::to_string(e.data1) + " val=" + std::to_string(e.data2);
      break;
  }
  return line;
}

void LogWriter::write(const ScheduledMessage& msg) { out_ << format_log_line(msg) << '\n'; }

void LogWriter::finish() { out_.flush(); }

void SmfWriter::finish() { write_smf(messages_, path_); }

namespace {

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  for (int shift = 24; shift >= 0; shift -= 8) out.push_back(static_cast<std::uint8_t>(v >> shift));
}

void put_vlq(std::vector<std::uint8_t>& out, std::uint32_t v) {
  std::uint8_t buf[5];
  int n = 0;
  buf[n++] = v & 0x7F;
  while ((v >>= 7) != 0) buf[n++] = static_cast<std::uint8_t>(0x80 | (v & 0x7F));
  while (n > 0) out.push_back(buf[--n]);
}

}  // namespace

std::vector<std::uint8_t> encode_smf(std::span<const ScheduledMessage> messages,
                                     const std::function<void(const std::string&)>& warn) {
  std::vector<std::uint8_t> track;
  // Tempo: 1,000,000 microseconds per quarter note.
  track.insert(track.end(), {0x00, 0xFF, 0x51, 0x03, 0x0F, 0x42, 0x40});
  std::int64_t last = 0;
  bool warned = false;
  for (const ScheduledMessage& m : messages) {
    if (m.timestamp < last) {
      throw SmfError("timestamps must not decrease: " + std::to_string(m.timestamp) + " after " +
                     std::to_string(last));
    }
    if (m.timestamp - last > 0x0FFFFFFF) throw SmfError("delta time too large for a MIDI file");
    if (m.port > 0 && !warned) {
      warned = true;
      if (warn) warn("MIDI file has no ports; messages for ports above 0 are merged into one track");
    }
    put_vlq(track, static_cast<std::uint32_t>(m.timestamp - last));
    last = m.timestamp;
    const auto ch = static_cast<std::uint8_t>(m.channel & 0x0F);
    const auto d1 = static_cast<std::uint8_t>(m.event.data1 & 0x7F);
    const auto d2 = static_cast<std::uint8_t>(m.event.data2 & 0x7F);
    switch (m.event.kind) {
      case MidiKind::NoteOn: track.insert(track.end(), {static_cast<std::uint8_t>(0x90 | ch), d1, d2}); break;
      case MidiKind::NoteOff: track.insert(track.end(), {static_cast<std::uint8_t>(0x80 | ch), d1, d2}); break;
      case MidiKind::ProgramChange: track.insert(track.end(), {static_cast<std::uint8_t>(0xC0 | ch), d1}); break;
      case MidiKind::Controller: track.insert(track.end(), {static_cast<std::uint8_t>(0xB0 | ch), d1, d2}); break;
    }
  }
  track.insert(track.end(), {0x00, 0xFF, 0x2F, 0x00});

  std::vector<std::uint8_t> out{'M', 'T', 'h', 'd'};
  put_u32(out, 6);
  out.insert(out.end(), {0x00, 0x00, 0x00, 0x01, 0x03, 0xE8});
  out.insert(out.end(), {'M', 'T', 'r', 'k'});
  put_u32(out, static_cast<std::uint32_t>(track.size()));
  out.insert(out.end(), track.begin(), track.end());
  return out;
}

std::size_t write_smf(std::span<const ScheduledMessage> messages, const std::filesystem::path& path) {
  auto bytes = encode_smf(messages, [](const std::string& w) { std::cerr << "warning: " << w << '\n'; });
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw SmfError("cannot open " + path.string() + " for writing");
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw SmfError("failed writing " + path.string());
  return bytes.size();
}

// ---------------------------------------------------------------------------

Sink::Sink(const Clock& clock, MessageWriter* writer) : clock_(clock), writer_(writer) {}

std::int64_t Sink::queue_time() const { return (halted_ ? halted_at_ : clock_.now_ms()) - offset_; }

void Sink::schedule(const ScheduledMessage& msg) {
  Queued q{msg, next_order_++};
  auto pos = std::upper_bound(queue_.begin(), queue_.end(), q, [](const Queued& a, const Queued& b) {
    return a.msg.timestamp < b.msg.timestamp;
  });
  queue_.insert(pos, std::move(q));
}

void Sink::halt_clock() {
  if (halted_) return;
  halted_ = true;
  halted_at_ = clock_.now_ms();
}

void Sink::resume_clock() {
  if (!halted_) return;
  offset_ += clock_.now_ms() - halted_at_;
  halted_ = false;
}

void Sink::advance_clock(std::int64_t by_ms) { offset_ -= by_ms; }

std::size_t Sink::poll() {
  const std::int64_t now = queue_time();
  std::size_t n = 0;
  while (n < queue_.size() && queue_[n].msg.timestamp <= now) ++n;
  if (n == 0) return 0;
  const std::int64_t wall = clock_.now_ms();
  for (std::size_t i = 0; i < n; ++i) {
    if (writer_) writer_->write(queue_[i].msg);
    released_.push_back(Delivery{queue_[i].msg, wall});
  }
  queue_.erase(queue_.begin(), queue_.begin() + static_cast<std::ptrdiff_t>(n));
  delivered_total_ += n;
  return n;
}

std::vector<Delivery> Sink::drain() { return std::exchange(released_, {}); }

std::optional<std::int64_t> Sink::next_due_wall() const {
  if (halted_ || queue_.empty()) return std::nullopt;
  return queue_.front().msg.timestamp + offset_;
}

std::vector<ScheduledMessage> Sink::pending_messages() const {
  std::vector<ScheduledMessage> out;
  for (const auto& q : queue_) out.push_back(q.msg);
  return out;
}

}  // namespace lseq
