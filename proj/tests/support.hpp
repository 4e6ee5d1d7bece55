#pragma once

#include <algorithm>
#include <cctype>
#include <random>
#include <string>
#include <vector>

#include "lseq/desugar.hpp"
#include "lseq/prelude.hpp"
#include "lseq/program.hpp"
#include "lseq/stream.hpp"

namespace lseq::testing {

// The finite six-note melody, verbatim.
inline const char* const kMelody = R"(main =
   note qn c ++ note qn d ++
   note qn e ++ note qn f ++
   note hn g ++ note hn g ;

note duration pitch =
   [ Event (On pitch normalVelocity)
   , Wait duration
   , Event (Off pitch normalVelocity)
   ] ;

qn = 200 ;  -- quarter note
hn = 2*qn ; -- half note

c = 60 ;
d = 62 ;
e = 64 ;
f = 65 ;
g = 67 ;
normalVelocity = 64 ;
)";

inline const char* const kMelodyDefinitions = R"(
note duration pitch =
   [ Event (On pitch normalVelocity)
   , Wait duration
   , Event (Off pitch normalVelocity)
   ] ;

qn = 200 ;  -- quarter note
hn = 2*qn ; -- half note

c = 60 ;
d = 62 ;
e = 64 ;
f = 65 ;
g = 67 ;
normalVelocity = 64 ;
)";

// The same melody repeated forever by co-recursion.
inline const std::string kLoopMain = R"(main =
   note qn c ++ note qn d ++
   note qn e ++ note qn f ++
   note hn g ++ note hn g ++ main ;
)";

// Variant with a seventh note inserted.
inline const std::string kSevenNoteMain = R"(main =
   note qn c ++ note qn d ++
   note qn e ++ note qn f ++
   note qn g ++ note qn e ++
   note hn g ++ main ;
)";

// Variant continuing into another loop after one more pass.
inline const std::string kLoopAMain = R"(main =
   note qn c ++ note qn d ++
   note qn e ++ note qn f ++
   note hn g ++ note hn g ++ loopA ;

loopA = note qn g ++ note qn e ++ note hn c ++ loopA ;
)";

inline std::string looped_melody() { return kLoopMain + kMelodyDefinitions; }

// Fibonacci numbers by a fixpoint combinator, with semicolons added.
inline const char* const kFibonacci = R"(main = fix fibs ;
fibs x = 0 : 1 : zipWith (+) x (tail x) ;
fix f = f (fix f) ;
)";

/// Prelude plus the given user modules (name, source).
inline Program load(const std::vector<std::pair<std::string, std::string>>& user) {
  std::vector<ParsedModule> modules = parse_prelude();
  for (const auto& [name, source] : user) modules.push_back(parse_module(source, name));
  return Program::build(std::move(modules));
}

inline Program load_main(const std::string& source) { return load({{"Main", source}}); }

inline std::string strip_spaces(std::string s) {
  s.erase(std::remove_if(s.begin(), s.end(), [](unsigned char c) { return std::isspace(c); }),
          s.end());
  return s;
}

inline std::vector<StreamItem> take_items(const Program& program, TermPtr& stream,
                                          std::size_t limit) {
  std::vector<StreamItem> out;
  while (out.size() < limit) {
    auto r = next_item(program, stream);
    if (!r) break;
    out.push_back(r->item);
  }
  return out;
}

inline std::vector<StreamItem> melody_items(const std::vector<int>& pitches,
                                            const std::vector<int>& durations) {
  std::vector<StreamItem> out;
  for (std::size_t i = 0; i < pitches.size(); ++i) {
    out.push_back(note_on(pitches[i], 64));
    out.push_back(WaitMs{durations[i]});
    out.push_back(note_off(pitches[i], 64));
  }
  return out;
}

inline std::vector<StreamItem> basic_melody_items() {
  return melody_items({60, 62, 64, 65, 67, 67}, {200, 200, 200, 200, 400, 400});
}

}  // namespace lseq::testing
