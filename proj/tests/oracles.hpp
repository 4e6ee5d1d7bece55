#pragma once

#include <algorithm>
#include <cstdint>
#include <random>
#include <set>
#include <tuple>
#include <vector>

#include "lseq/stream.hpp"

namespace lseq::testing {

inline std::int64_t total_duration(const std::vector<StreamItem>& items) {
  std::int64_t sum = 0;
  for (const auto& item : items) {
    if (const auto* w = std::get_if<WaitMs>(&item)) sum += w->duration;
  }
  return sum;
}

/// Reference merge by absolute time. Events due at the same instant come
/// from `a` first, each list keeping its own order. Waits are cut at every
/// point where either input's wait ends, which is how the interpreted
/// merge splits them; waits are never coalesced. Assumes positive waits.
inline std::vector<StreamItem> merge_oracle(const std::vector<StreamItem>& a,
                                            const std::vector<StreamItem>& b) {
  // (time, rank, source, index): rank 0 is a wait boundary, 1 an event.
  using Point = std::tuple<std::int64_t, int, int, std::size_t>;
  std::vector<Point> points;
  std::set<std::int64_t> boundaries;
  const std::vector<StreamItem>* lists[2] = {&a, &b};
  for (int src = 0; src < 2; ++src) {
    std::int64_t now = 0;
    for (std::size_t i = 0; i < lists[src]->size(); ++i) {
      const StreamItem& item = (*lists[src])[i];
      if (const auto* w = std::get_if<WaitMs>(&item)) {
        now += w->duration;
        boundaries.insert(now);
      } else {
        points.emplace_back(now, 1, src, i);
      }
    }
  }
  for (std::int64_t t : boundaries) points.emplace_back(t, 0, 0, 0);
  std::sort(points.begin(), points.end());

  std::vector<StreamItem> out;
  std::int64_t clock = 0;
  for (const auto& [t, rank, src, index] : points) {
    if (rank == 0) {
      out.push_back(WaitMs{t - clock});
      clock = t;
    } else {
      out.push_back((*lists[src])[index]);
    }
  }
  return out;
}

/// Random finite stream: up to `max_len` items, waits in [1, max_wait].
inline std::vector<StreamItem> random_stream(std::mt19937& rng, std::size_t max_len,
                                             std::int64_t max_wait) {
  std::uniform_int_distribution<std::size_t> len(0, max_len);
  std::uniform_int_distribution<int> kind(0, 5);
  std::uniform_int_distribution<std::int64_t> wait(1, max_wait);
  std::uniform_int_distribution<int> seven(0, 127);
  std::uniform_int_distribution<int> chan(0, 40);
  std::vector<StreamItem> out;
  const std::size_t n = len(rng);
  for (std::size_t i = 0; i < n; ++i) {
    switch (kind(rng)) {
      case 0:
      case 1:
      case 2: out.push_back(WaitMs{wait(rng)}); break;
      case 3: out.push_back(note_on(seven(rng), seven(rng), chan(rng) < 30 ? 0 : chan(rng))); break;
      case 4: out.push_back(note_off(seven(rng), seven(rng))); break;
      default:
        out.push_back(kind(rng) % 2 ? program_change(seven(rng)) : controller(seven(rng), seven(rng)));
        break;
    }
  }
  return out;
}

}  // namespace lseq::testing
