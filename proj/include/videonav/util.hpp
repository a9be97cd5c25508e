#pragma once

#include <cstdint>
#include <functional>

namespace videonav {

/// Deterministic seed for the (base, a, b, c) stream.
std::uint64_t mix_seed(std::uint64_t base, std::uint64_t a, std::uint64_t b = 0,
                       std::uint64_t c = 0) noexcept;

/// Runs fn(i) for every i in [0, n) on up to `jobs` threads. The first
/// exception thrown by fn is rethrown after all workers stop.
void parallel_for(int n, int jobs, const std::function<void(int)>& fn);

/// Logical core count, at least 1.
int default_jobs() noexcept;

}  // namespace videonav
