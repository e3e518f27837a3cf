#pragma once

#include <array>
#include <cstdint>
#include <limits>
#include <string_view>

namespace infomarket {

/// Philox4x64-10 block function (Salmon et al., Random123). Maps a 256-bit
/// counter and a 128-bit key to 256 pseudo-random bits.
using PhiloxCounter = std::array<std::uint64_t, 4>;
using PhiloxKey = std::array<std::uint64_t, 2>;

namespace detail {

inline void mulhilo64(std::uint64_t a, std::uint64_t b, std::uint64_t& hi, std::uint64_t& lo) {
    const unsigned __int128 product = static_cast<unsigned __int128>(a) * b;
    hi = static_cast<std::uint64_t>(product >> 64);
    lo = static_cast<std::uint64_t>(product);
}

}  // namespace detail

[[nodiscard]] inline PhiloxCounter philox4x64_10(PhiloxCounter ctr, PhiloxKey key) {
    constexpr std::uint64_t kMul0 = 0xD2E7470EE14C6C93ULL;
    constexpr std::uint64_t kMul1 = 0xCA5A826395121157ULL;
    constexpr std::uint64_t kWeyl0 = 0x9E3779B97F4A7C15ULL;
    constexpr std::uint64_t kWeyl1 = 0xBB67AE8584CAA73BULL;
    for (int round = 0; round < 10; ++round) {
        std::uint64_t hi0, lo0, hi1, lo1;
        detail::mulhilo64(kMul0, ctr[0], hi0, lo0);
        detail::mulhilo64(kMul1, ctr[2], hi1, lo1);
        ctr = {hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0};
        key[0] += kWeyl0;
        key[1] += kWeyl1;
    }
    return ctr;
}

/// SplitMix64 finalizer; used to derive seeds, never as a stream generator.
[[nodiscard]] constexpr std::uint64_t mix64(std::uint64_t x) noexcept {
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

/// Combines a base seed with an ordered list of indices into a derived seed.
template <typename... Indices>
[[nodiscard]] constexpr std::uint64_t derive_seed(std::uint64_t base, Indices... indices) noexcept {
    std::uint64_t h = mix64(base);
    ((h = mix64(h ^ mix64(static_cast<std::uint64_t>(indices) + 0x632BE59BD9B4E019ULL))), ...);
    return h;
}

/// Counter-based generator keyed by (seed, stream). Any (seed, stream) pair
/// is an independent sequence; position is an explicit counter, so streams
/// can be split and skipped in O(1).
///
/// Satisfies std::uniform_random_bit_generator.
class CounterRng {
public:
    using result_type = std::uint64_t;

    static constexpr std::string_view kName = "philox4x64-10";
    static constexpr int kVersion = 1;

    CounterRng() : CounterRng(0, 0) {}
    CounterRng(std::uint64_t seed, std::uint64_t stream) : key_{seed, stream} {}

    static constexpr result_type min() { return 0; }
    static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

    result_type operator()() {
        if (lane_ == 4) {
            refill();
        }
        return block_[lane_++];
    }

    /// Uniform double in [0, 1) with 53 random bits.
    double uniform() { return static_cast<double>((*this)() >> 11) * 0x1.0p-53; }

    /// Fair bit. Bits are consumed from a buffered 64-bit word.
    bool coin() {
        if (bits_left_ == 0) {
            bit_word_ = (*this)();
            bits_left_ = 64;
        }
        const bool bit = (bit_word_ & 1U) != 0;
        bit_word_ >>= 1;
        --bits_left_;
        return bit;
    }

    /// Unbiased integer in [0, n), n > 0 (Lemire's multiply-shift with rejection).
    std::uint64_t below(std::uint64_t n) {
        std::uint64_t x = (*this)();
        unsigned __int128 m = static_cast<unsigned __int128>(x) * n;
        auto low = static_cast<std::uint64_t>(m);
        if (low < n) {
            const std::uint64_t threshold = (0 - n) % n;
            while (low < threshold) {
                x = (*this)();
                m = static_cast<unsigned __int128>(x) * n;
                low = static_cast<std::uint64_t>(m);
            }
        }
        return static_cast<std::uint64_t>(m >> 64);
    }

    /// Number of 256-bit blocks consumed so far.
    [[nodiscard]] std::uint64_t blocks_used() const noexcept { return counter_; }

    /// Jumps forward by whole blocks; drops any buffered output.
    void skip_blocks(std::uint64_t n) noexcept {
        counter_ += n;
        lane_ = 4;
        bits_left_ = 0;
    }

    [[nodiscard]] const PhiloxKey& key() const noexcept { return key_; }

    friend bool operator==(const CounterRng&, const CounterRng&) = default;

private:
    void refill() {
        ++counter_;
        block_ = philox4x64_10({counter_, 0, 0, 0}, key_);
        lane_ = 0;
    }

    PhiloxKey key_;
    std::uint64_t counter_ = 0;
    PhiloxCounter block_{};
    int lane_ = 4;
    std::uint64_t bit_word_ = 0;
    int bits_left_ = 0;
};

}  // namespace infomarket
