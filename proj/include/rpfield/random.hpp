#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <string_view>

namespace rpf {

/// SplitMix64 finalizer.
std::uint64_t splitmix64(std::uint64_t x);

/// Counter-based stream seed: splitmix64(root ^ splitmix64(stream + 0x9E3779B97F4A7C15)).
/// Sample s of a run with root seed r always uses derive_seed(r, s), whatever
/// the thread count.
std::uint64_t derive_seed(std::uint64_t root, std::uint64_t stream);

/// Human-readable statement of the derivation, embedded in reports.
std::string_view seed_derivation_scheme();

/// Runs body(begin, end) over contiguous chunks of [0, count) on up to
/// `threads` threads (0 = hardware concurrency). Exceptions are rethrown.
void parallel_for(std::size_t count, int threads, const std::function<void(std::size_t, std::size_t)>& body);

}  // namespace rpf
