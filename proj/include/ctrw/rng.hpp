#pragma once

#include <array>
#include <cstdint>
#include <limits>

namespace ctrw {

// Philox4x32-10 counter-based generator (Salmon et al., SC'11).
//
// A stream is identified by (seed, stream index). The seed is the 64-bit
// key; the stream index occupies the upper half of the 128-bit counter and
// the block counter the lower half, so streams never overlap and any path
// can be regenerated without touching the others.
class Philox4x32 {
public:
    using Counter = std::array<std::uint32_t, 4>;
    using Key = std::array<std::uint32_t, 2>;

    static Counter block(Counter ctr, Key key) noexcept;
};

class RngStream {
public:
    using result_type = std::uint64_t;

    RngStream(std::uint64_t seed, std::uint64_t stream) noexcept;

    static constexpr result_type min() noexcept { return 0; }
    static constexpr result_type max() noexcept { return std::numeric_limits<result_type>::max(); }

    result_type operator()() noexcept;

    /// Uniform draw on the open interval (0,1) with 53 random bits.
    double uniform() noexcept;

    /// Standard exponential draw.
    double exponential() noexcept;

    std::uint64_t seed() const noexcept { return seed_; }
    std::uint64_t stream() const noexcept { return stream_; }

    /// Independent substream `index` of this stream, e.g. one per worker.
    RngStream substream(std::uint64_t index) const noexcept;

private:
    void refill() noexcept;

    std::uint64_t seed_;
    std::uint64_t stream_;
    std::uint64_t block_ = 0;
    std::array<std::uint64_t, 2> buffer_{};
    int available_ = 0;
};

/// SplitMix64 finalizer; used to derive well-mixed substream indices.
std::uint64_t mix64(std::uint64_t x) noexcept;

} // namespace ctrw
