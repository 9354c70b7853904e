#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace jcc::rng {

/// Philox4x32-10 counter-based generator.
///
/// The 64-bit key is the seed; the upper half of the 128-bit counter is the substream id, the
/// lower half counts blocks. Two generators with different (seed, stream) pairs never share a block,
/// so substreams are independent and can be drawn in any order or concurrently.
///
/// Derived distributions are pinned so results do not depend on the standard library:
///  - uniform(): top 53 bits of a 64-bit draw scaled by 2^-53, in [0, 1)
///  - normal(): Box-Muller on (1 - uniform(), uniform()), both outputs used in order
///  - below(n): rejection sampling on 64-bit draws
class Philox {
public:
    Philox(std::uint64_t seed, std::uint64_t stream) noexcept;

    /// Raw block function, exposed for known-answer tests.
    static std::array<std::uint32_t, 4> block(std::array<std::uint32_t, 4> counter,
                                              std::array<std::uint32_t, 2> key) noexcept;

    std::uint32_t next_u32() noexcept;
    std::uint64_t next_u64() noexcept;
    double uniform() noexcept;
    double uniform(double lo, double hi) noexcept { return lo + (hi - lo) * uniform(); }
    double normal() noexcept;
    std::size_t below(std::size_t n) noexcept;

    template <typename T>
    void shuffle(std::span<T> items) noexcept {
        for (std::size_t i = items.size(); i > 1; --i) {
            std::size_t j = below(i);
            std::swap(items[i - 1], items[j]);
        }
    }

private:
    std::array<std::uint32_t, 2> key_;
    std::uint64_t stream_;
    std::uint64_t block_index_ = 0;
    std::array<std::uint32_t, 4> buffer_{};
    unsigned used_ = 4;
    bool have_spare_normal_ = false;
    double spare_normal_ = 0.0;
};

/// Purposes for pipeline substreams. Stream ids are (purpose << 40) | index.
enum class Purpose : std::uint64_t {
    Scenarios = 1,
    WindPerturbation = 2,
    Validation = 3,
    Rebalance = 4,
    Split = 5,
    Bootstrap = 6,
    Svm = 7,
    Test = 8,
};

constexpr std::uint64_t stream_id(Purpose purpose, std::uint64_t index) noexcept {
    return (static_cast<std::uint64_t>(purpose) << 40) | (index & ((std::uint64_t{1} << 40) - 1));
}

}  // namespace jcc::rng
