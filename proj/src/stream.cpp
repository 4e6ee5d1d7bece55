#include "lseq/stream.hpp"

#include <algorithm>

#include "lseq/desugar.hpp"

namespace lseq {
namespace {

const char* const kAcceptedShapes =
    "expected Wait n, Event (On p v), Event (Off p v), Event (PgmChange prog), "
    "Event (Controller cc val) or Event (Channel ch e)";

struct Shape {
  Symbol head;
  std::vector<const Term*> args;
};

std::optional<Shape> constructor_shape(const Term& t) {
  Shape s;
  const Term* cur = &t;
  while (cur->kind == Term::Kind::Apply) {
    s.args.push_back(cur->argument.get());
    cur = cur->function.get();
  }
  if (cur->kind != Term::Kind::Constructor) return std::nullopt;
  s.head = cur->symbol;
  std::reverse(s.args.begin(), s.args.end());
  return s;
}

[[noreturn]] void ill_formed(const Term& whole, const std::string& why) {
  throw StreamError(StreamErrorKind::IllFormedEvent,
                    render_term(whole, 6) + ": " + why + " (" + kAcceptedShapes + ")");
}

std::int64_t integer_field(const Term& whole, const Term* t, const char* what, std::int64_t lo,
                           std::int64_t hi) {
  if (t->kind != Term::Kind::Integer) ill_formed(whole, std::string(what) + " is not an integer");
  if (t->integer < lo || t->integer > hi) {
    ill_formed(whole, std::string(what) + " " + std::to_string(t->integer) + " out of range " +
                          std::to_string(lo) + ".." + std::to_string(hi));
  }
  return t->integer;
}

MidiEvent decode_midi(const Term& whole, const Term& t, bool allow_channel) {
  static const Symbol on("On"), off("Off"), pgm("PgmChange"), cc("Controller"), channel("Channel");
  auto shape = constructor_shape(t);
  if (!shape) ill_formed(whole, "event is not a constructor");
  const auto& a = shape->args;
  auto seven_bit = [&](std::size_t i, const char* what) {
    return static_cast<int>(integer_field(whole, a[i], what, 0, 127));
  };
  if ((shape->head == on || shape->head == off) && a.size() == 2) {
    return shape->head == on ? note_on(seven_bit(0, "pitch"), seven_bit(1, "velocity"))
                             : note_off(seven_bit(0, "pitch"), seven_bit(1, "velocity"));
  }
  if (shape->head == pgm && a.size() == 1) return program_change(seven_bit(0, "program"));
  if (shape->head == cc && a.size() == 2) {
    return controller(seven_bit(0, "controller"), seven_bit(1, "value"));
  }
  if (shape->head == channel && a.size() == 2 && allow_channel) {
    const std::int64_t ch = integer_field(whole, a[0], "channel", 0, INT64_MAX);
    MidiEvent inner = decode_midi(whole, *a[1], false);
    inner.channel = ch;
    return inner;
  }
  ill_formed(whole, "unrecognized event");
}

}  // namespace

MidiEvent note_on(int pitch, int velocity, std::int64_t channel) {
  return {MidiKind::NoteOn, channel, pitch, velocity};
}
MidiEvent note_off(int pitch, int velocity, std::int64_t channel) {
  return {MidiKind::NoteOff, channel, pitch, velocity};
}
MidiEvent program_change(int program, std::int64_t channel) {
  return {MidiKind::ProgramChange, channel, program, 0};
}
MidiEvent controller(int number, int value, std::int64_t channel) {
  return {MidiKind::Controller, channel, number, value};
}

std::string to_string(const StreamItem& item) {
  if (const auto* w = std::get_if<WaitMs>(&item)) return "Wait " + std::to_string(w->duration);
  const auto& e = std::get<MidiEvent>(item);
  std::string out;
  switch (e.kind) {
    case MidiKind::NoteOn: out = "On " + std::to_string(e.data1) + " " + std::to_string(e.data2); break;
    case MidiKind::NoteOff: out = "Off " + std::to_string(e.data1) + " " + std::to_string(e.data2); break;
    case MidiKind::ProgramChange: out = "PgmChange " + std::to_string(e.data1); break;
    case MidiKind::Controller:
      out = "Controller " + std::to_string(e.data1) + " " + std::to_string(e.data2);
      break;
  }
  if (e.channel != 0) out = "Channel " + std::to_string(e.channel) + " (" + out + ")";
  return "Event (" + out + ")";
}

StreamError::StreamError(StreamErrorKind kind, const std::string& message)
    : std::runtime_error(message), kind_(kind) {}

StreamItem decode_event(const Term& value) {
  static const Symbol wait("Wait"), event("Event");
  auto shape = constructor_shape(value);
  if (shape && shape->head == wait && shape->args.size() == 1) {
    return WaitMs{integer_field(value, shape->args[0], "wait duration", 0, INT64_MAX)};
  }
  if (shape && shape->head == event && shape->args.size() == 1) {
    return decode_midi(value, *shape->args[0], true);
  }
  ill_formed(value, "not a stream item");
}

TermPtr item_to_term(const StreamItem& item) {
  if (const auto* w = std::get_if<WaitMs>(&item)) {
    return make_call(make_constructor("Wait"), make_integer(w->duration));
  }
  const auto& e = std::get<MidiEvent>(item);
  TermPtr body;
  switch (e.kind) {
    case MidiKind::NoteOn:
      body = make_call(make_constructor("On"), make_integer(e.data1), make_integer(e.data2));
      break;
    case MidiKind::NoteOff:
      body = make_call(make_constructor("Off"), make_integer(e.data1), make_integer(e.data2));
      break;
    case MidiKind::ProgramChange:
      body = make_call(make_constructor("PgmChange"), make_integer(e.data1));
      break;
    case MidiKind::Controller:
      body = make_call(make_constructor("Controller"), make_integer(e.data1), make_integer(e.data2));
      break;
  }
  if (e.channel != 0) {
    body = make_call(make_constructor("Channel"), make_integer(e.channel), std::move(body));
  }
  return make_call(make_constructor("Event"), std::move(body));
}

TermPtr items_to_list(const std::vector<StreamItem>& items) {
  TermPtr list = make_constructor(sym::nil());
  for (auto it = items.rbegin(); it != items.rend(); ++it) {
    list = make_call(make_constructor(sym::cons()), item_to_term(*it), std::move(list));
  }
  return list;
}

PortChannel split_channel(std::int64_t virtual_channel) {
  return {virtual_channel / 16, static_cast<int>(virtual_channel % 16)};
}

namespace {

struct ForcedHead {
  std::vector<ReductionStep> steps;
  std::size_t steps_used = 0;
};

// Leaves `stream` as a list cell whose head is fully evaluated.
std::optional<ForcedHead> force_head(const Program& program, TermPtr& stream, Budget budget) {
  Reducer reducer(program, budget, *stream);
  reducer.whnf(stream);
  if (stream->is_constructor(sym::nil())) return std::nullopt;
  const bool is_cons = stream->kind == Term::Kind::Apply &&
                       stream->function->kind == Term::Kind::Apply &&
                       stream->function->function->is_constructor(sym::cons());
  if (!is_cons) {
    throw StreamError(StreamErrorKind::IllFormedStream,
                      "stream is not a list: " + render_term(*stream, 6));
  }
  // (:) x xs is Apply(Apply(:, x), xs), so the head element sits at path [0, 1].
  reducer.force(stream->function->argument, TermPath{0, 1});
  return ForcedHead{reducer.take_steps(), reducer.steps_used()};
}

TermPtr detach_head(TermPtr& stream) {
  TermPtr value = std::move(stream->function->argument);
  TermPtr rest = std::move(stream->argument);
  stream = std::move(rest);
  return value;
}

}  // namespace

std::optional<Element> next_element(const Program& program, TermPtr& stream, Budget budget) {
  auto forced = force_head(program, stream, budget);
  if (!forced) return std::nullopt;
  Element out;
  out.steps = std::move(forced->steps);
  out.steps_used = forced->steps_used;
  out.value = detach_head(stream);
  return out;
}

std::optional<ExtractionResult> next_item(const Program& program, TermPtr& stream, Budget budget) {
  auto forced = force_head(program, stream, budget);
  if (!forced) return std::nullopt;
  ExtractionResult out{decode_event(*stream->function->argument), {}, forced->steps_used};
  for (const auto& step : forced->steps) out.highlights.insert(step.rule_span);
  detach_head(stream);
  return out;
}

}  // namespace lseq
