#pragma once

#include <algorithm>
#include <array>
#include <cstdint>
#include <vector>

namespace dirpoly::detail {

// k-way merge over the 2d shifted key streams of a sorted slice.  The
// policy sees gathered source indices per output key in the fixed
// (-e1,+e1,-e2,+e2,...) stream order; [begin_key, end_key) restricts the
// output range so parallel chunks can run the same code independently.
template <class Policy>
void merge_range(const std::vector<std::uint64_t>& keys,
                 const std::vector<std::int64_t>& deltas, bool has_begin,
                 std::uint64_t begin_key, bool has_end, std::uint64_t end_key,
                 Policy& pol) {
  const int m = static_cast<int>(deltas.size());
  const std::size_t n = keys.size();
  std::array<std::size_t, 12> cur{};
  std::array<std::uint64_t, 12> curkey{};
  for (int j = 0; j < m; ++j) {
    std::size_t s = 0;
    if (has_begin) {
      if (deltas[j] >= 0) {
        const std::uint64_t dd = static_cast<std::uint64_t>(deltas[j]);
        s = begin_key >= dd
                ? static_cast<std::size_t>(
                      std::lower_bound(keys.begin(), keys.end(),
                                       begin_key - dd) -
                      keys.begin())
                : 0;
      } else {
        const std::uint64_t dd = static_cast<std::uint64_t>(-deltas[j]);
        s = static_cast<std::size_t>(
            std::lower_bound(keys.begin(), keys.end(), begin_key + dd) -
            keys.begin());
      }
    }
    cur[j] = s;
    curkey[j] =
        s < n ? keys[s] + static_cast<std::uint64_t>(deltas[j]) : UINT64_MAX;
  }
  while (true) {
    std::uint64_t y = UINT64_MAX;
    for (int j = 0; j < m; ++j) y = std::min(y, curkey[j]);
    if (y == UINT64_MAX || (has_end && y >= end_key)) break;
    pol.begin_site();
    for (int j = 0; j < m; ++j) {
      if (curkey[j] == y) {
        pol.absorb(cur[j]);
        ++cur[j];
        curkey[j] = cur[j] < n
                        ? keys[cur[j]] + static_cast<std::uint64_t>(deltas[j])
                        : UINT64_MAX;
      }
    }
    pol.emit(y);
  }
}

}  // namespace dirpoly::detail
