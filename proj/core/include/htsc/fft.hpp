#pragma once

#include "htsc/common.hpp"

namespace htsc {

/**
 * Batched complex FFTs over one axis of a flat array. Results are the plain
 * DFT sums (no normalization); plans are cached and creation is serialized,
 * execution is thread-safe on distinct buffers.
 *
 * Layout contract: the transformed axis has length n, consecutive elements
 * of one transform are `stride` apart, and the `count` transforms start at
 * offsets given by iterating the remaining axes (handled by the caller
 * through `dist` blocks).
 */
class Fft {
 public:
  // In-place forward/backward DFT over a contiguous batch description.
  static void many(cd* data, int n, int count, int stride, int dist, int sign);

  // All-axes helper for a row-major array with extents dims: transforms
  // axis `axis` for every combination of the remaining indices.
  static void axis(cd* data, const std::vector<int>& dims, int axis, int sign);
};

}  // namespace htsc
