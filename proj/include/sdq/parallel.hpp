// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <functional>

namespace sdq {

/// Process-wide worker count for row-parallel kernels. 0 or 1 runs inline.
void set_num_threads(unsigned n);
unsigned num_threads();

/// Splits [0, n) into contiguous chunks and runs `body(begin, end)` on each.
/// Every index is visited exactly once, so kernels that own their output rows
/// produce identical results for any thread count.
void parallel_for(std::size_t n, const std::function<void(std::size_t, std::size_t)>& body);

}  // namespace sdq
