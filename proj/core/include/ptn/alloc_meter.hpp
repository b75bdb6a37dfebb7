#pragma once

#include <algorithm>
#include <cstddef>

namespace ptn {

// Explicit accounting of transient buffer bytes inside a training path.
// Deterministic and portable, unlike RSS sampling, which is the point:
// the memory comparisons in the diagnostics module must not depend on
// the allocator or the OS.
struct AllocationMeter {
  std::size_t live = 0;
  std::size_t peak = 0;

  void add(std::size_t bytes) noexcept {
    live += bytes;
    peak = std::max(peak, live);
  }
  void release(std::size_t bytes) noexcept { live -= std::min(bytes, live); }
};

}  // namespace ptn
