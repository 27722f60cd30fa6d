#pragma once

#include <cstddef>
#include <functional>

namespace feame {

/// Worker count used by parallel loops. Defaults to FEAME_THREADS when set,
/// otherwise std::thread::hardware_concurrency().
int num_threads();
void set_num_threads(int n);

/// Runs body(i) for i in [0, n) on up to num_threads() workers. Exceptions
/// thrown by body are rethrown (the one with the lowest index wins).
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body);

}  // namespace feame
