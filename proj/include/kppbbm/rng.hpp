#pragma once

#include <array>
#include <cmath>
#include <cstdint>

namespace kppbbm {

// Philox4x32-10 block function.
using Philox4x32Ctr = std::array<std::uint32_t, 4>;
using Philox4x32Key = std::array<std::uint32_t, 2>;

Philox4x32Ctr philox4x32_10(Philox4x32Ctr ctr, Philox4x32Key key);

// splitmix64 finalizer, used to derive genealogical stream keys.
std::uint64_t mix64(std::uint64_t x);

// Counter-based stream: (seed, stream key) -> sequence of blocks.
class PhiloxStream {
public:
    PhiloxStream(std::uint64_t seed, std::uint64_t stream);
    std::uint32_t next_u32();
    // uniform on (0, 1), 53 bits
    double uniform();
    double exponential() { return -std::log(uniform()); }
    double normal();

private:
    void refill();
    Philox4x32Key key_;
    std::uint64_t stream_;
    std::uint64_t block_ = 0;
    Philox4x32Ctr buf_{};
    int used_ = 4;
    double spare_ = 0.0;
    bool has_spare_ = false;
};

} // namespace kppbbm
