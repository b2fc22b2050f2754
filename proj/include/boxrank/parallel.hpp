// Copyright (c) 2026 the boxrank authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <functional>

namespace boxrank {

// Process-wide worker count. 1 (the default) is the bitwise-reproducible
// reference mode; higher counts only parallelize loops whose iterations
// write disjoint outputs, so results do not depend on the thread count.
int thread_count();
void set_thread_count(int n);

// Runs fn(i) for i in [0, n). Static partition across thread_count()
// workers; exceptions from workers are rethrown on the caller.
void parallel_for(int64_t n, const std::function<void(int64_t)>& fn);

}  // namespace boxrank
