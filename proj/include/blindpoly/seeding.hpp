#pragma once

#include <cstdint>
#include <random>

namespace blindpoly {

/// Engine for sub-stream `stream` of `master`. Streams with different ids
/// are independent, so adding draws to one never shifts another.
inline std::mt19937_64 make_stream(std::uint64_t master, std::uint64_t stream) {
    std::seed_seq seq{static_cast<std::uint32_t>(master), static_cast<std::uint32_t>(master >> 32),
                      static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(stream >> 32)};
    return std::mt19937_64(seq);
}

/// Child seed for item `index` of a run keyed by `master`.
inline std::uint64_t derive_seed(std::uint64_t master, std::uint64_t index) {
    return make_stream(master, index)();
}

}  // namespace blindpoly
