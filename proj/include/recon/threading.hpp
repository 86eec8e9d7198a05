#pragma once

#include <cstddef>
#include <functional>

namespace recon::threads {

// 0 restores the hardware default.
void set_num_threads(unsigned n);
unsigned num_threads();

// Runs f(i) for every i in [0, n), possibly concurrently. Each item must
// touch only state it owns; callers that reduce over items do so serially
// afterwards, in item order. Under that discipline results do not depend on
// the worker count, which is what the reproducibility tests exercise.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& f);

}  // namespace recon::threads
