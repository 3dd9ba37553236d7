#include "emrl/rng.hpp"

namespace emrl {

namespace {

constexpr std::uint32_t M0 = 0xD2511F53u, M1 = 0xCD9E8D57u;
constexpr std::uint32_t W0 = 0x9E3779B9u, W1 = 0xBB67AE85u;

inline void mulhilo(std::uint32_t a, std::uint32_t b, std::uint32_t& hi, std::uint32_t& lo)
{
    std::uint64_t prod = static_cast<std::uint64_t>(a) * b;
    hi = static_cast<std::uint32_t>(prod >> 32);
    lo = static_cast<std::uint32_t>(prod);
}

} // namespace

philox_ctr philox4x32(philox_ctr ctr, philox_key key)
{
    for (int round = 0; round < 10; ++round) {
        std::uint32_t hi0, lo0, hi1, lo1;
        mulhilo(M0, ctr[0], hi0, lo0);
        mulhilo(M1, ctr[2], hi1, lo1);
        ctr = {hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0};
        key[0] += W0;
        key[1] += W1;
    }
    return ctr;
}

CounterRng::CounterRng(std::uint64_t seed, StreamTag tag, std::uint64_t index)
    : key_{static_cast<std::uint32_t>(seed) ^ static_cast<std::uint32_t>(tag),
           static_cast<std::uint32_t>(seed >> 32) ^ (static_cast<std::uint32_t>(tag) * 0x9E3779B9u)},
      index_(index)
{
}

CounterRng::result_type CounterRng::operator()()
{
    if (used_ >= 4) {
        philox_ctr ctr{static_cast<std::uint32_t>(block_), static_cast<std::uint32_t>(block_ >> 32),
                       static_cast<std::uint32_t>(index_), static_cast<std::uint32_t>(index_ >> 32)};
        out_ = philox4x32(ctr, key_);
        ++block_;
        used_ = 0;
    }
    std::uint64_t v = (static_cast<std::uint64_t>(out_[used_]) << 32) | out_[used_ + 1];
    used_ += 2;
    return v;
}

double CounterRng::uniform()
{
    return (static_cast<double>((*this)() >> 11) + 0.5) * 0x1.0p-53;
}

} // namespace emrl
