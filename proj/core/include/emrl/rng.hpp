#pragma once

#include <array>
#include <cstdint>
#include <limits>

namespace emrl {

using philox_ctr = std::array<std::uint32_t, 4>;
using philox_key = std::array<std::uint32_t, 2>;

// Philox4x32 with 10 rounds.
philox_ctr philox4x32(philox_ctr ctr, philox_key key);

// Stream tags keep training, action and evaluation draws apart.
enum class StreamTag : std::uint32_t {
    market = 0x6d6b7431,
    action = 0x61637431,
    evaluation = 0x65766c31,
    test = 0x74737431,
};

// Counter-based engine: one independent stream per (seed, tag, index).
class CounterRng {
public:
    using result_type = std::uint64_t;

    CounterRng(std::uint64_t seed, StreamTag tag, std::uint64_t index);

    static constexpr result_type min() { return 0; }
    static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }
    result_type operator()();

    // Uniform on the open interval (0,1).
    double uniform();

private:
    philox_key key_;
    std::uint64_t index_;
    std::uint64_t block_ = 0;
    philox_ctr out_{};
    int used_ = 4;
};

} // namespace emrl
