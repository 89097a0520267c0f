// SPDX-License-Identifier: MIT
#pragma once

#include <cstddef>
#include <functional>

namespace sntf {

/// Hardware concurrency, at least 1.
std::size_t default_thread_count() noexcept;

/// Runs fn(i) for i in [0, count) on up to `threads` workers with a fixed
/// block partition. Serial when threads <= 1 or count <= 1. The first
/// exception (by worker order) is rethrown after all workers join.
void parallel_for(std::size_t count, std::size_t threads,
                  const std::function<void(std::size_t)>& fn);

}  // namespace sntf
