#pragma once

#include <cstddef>
#include <functional>

namespace sscc {

/// Worker threads used by parallel_for: the SSCC_THREADS environment
/// variable when set (clamped to >= 1), otherwise the hardware default.
std::size_t worker_count();

/// Run fn(i) for i in [0, count). May execute on multiple threads; nested
/// calls degrade to sequential execution. Exceptions are collected and the
/// one thrown by the lowest index is rethrown, so failure behaviour does
/// not depend on scheduling.
void parallel_for(std::size_t count, const std::function<void(std::size_t)>& fn);

}  // namespace sscc
