#pragma once

#include <cstdint>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include "lseq/program.hpp"
#include "lseq/reduce.hpp"
#include "lseq/term.hpp"

namespace lseq {

enum class MidiKind { NoteOn, NoteOff, ProgramChange, Controller };

/// A MIDI channel message on a virtual channel. `data1`/`data2` are
/// pitch/velocity for notes, program for program changes (data2 unused),
/// and controller/value for controllers.
struct MidiEvent {
  MidiKind kind = MidiKind::NoteOn;
  std::int64_t channel = 0;
  int data1 = 0;
  int data2 = 0;

  friend bool operator==(const MidiEvent&, const MidiEvent&) = default;
};

MidiEvent note_on(int pitch, int velocity, std::int64_t channel = 0);
MidiEvent note_off(int pitch, int velocity, std::int64_t channel = 0);
MidiEvent program_change(int program, std::int64_t channel = 0);
MidiEvent controller(int number, int value, std::int64_t channel = 0);

struct WaitMs {
  std::int64_t duration = 0;
  friend bool operator==(const WaitMs&, const WaitMs&) = default;
};

using StreamItem = std::variant<WaitMs, MidiEvent>;

std::string to_string(const StreamItem& item);

enum class StreamErrorKind { IllFormedStream, IllFormedEvent };

class StreamError : public std::runtime_error {
 public:
  StreamError(StreamErrorKind kind, const std::string& message);
  StreamErrorKind kind() const { return kind_; }

 private:
  StreamErrorKind kind_;
};

/// Decodes a fully evaluated list element into a stream item. Accepted
/// shapes: `Wait n`, `Event (On p v)`, `Event (Off p v)`,
/// `Event (PgmChange prog)`, `Event (Controller cc val)`, each event
/// optionally wrapped as `Event (Channel ch e)`.
StreamItem decode_event(const Term& value);

/// Inverse of decode_event.
TermPtr item_to_term(const StreamItem& item);

/// Builds a finite list term from stream items.
TermPtr items_to_list(const std::vector<StreamItem>& items);

struct PortChannel {
  std::int64_t port = 0;
  int channel = 0;
  friend bool operator==(const PortChannel&, const PortChannel&) = default;
};

/// Virtual channel n lives on port n div 16, channel n mod 16.
PortChannel split_channel(std::int64_t virtual_channel);

/// One evaluated list element.
struct Element {
  TermPtr value;  // the forced head
  std::vector<ReductionStep> steps;
  std::size_t steps_used = 0;
};

/// Reduces `stream` to a list cell and forces its head. On success the
/// head is returned and `stream` becomes the unevaluated tail; at the end of
/// the list nullopt is returned. On error `stream` keeps whatever partial
/// reduction happened.
std::optional<Element> next_element(const Program& program, TermPtr& stream, Budget budget = {});

struct ExtractionResult {
  StreamItem item;
  std::set<SourceSpan> highlights;  // spans of every rule applied for this item
  std::size_t steps_used = 0;
};

/// next_element followed by decode_event.
std::optional<ExtractionResult> next_item(const Program& program, TermPtr& stream,
                                          Budget budget = {});

}  // namespace lseq
