#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <string_view>

namespace ald {

/// Philox4x32-10 counter-based block function (Salmon et al., SC'11).
/// Stateless: the same (counter, key) always produces the same block.
std::array<std::uint32_t, 4> philox4x32(std::array<std::uint32_t, 4> counter,
                                        std::array<std::uint32_t, 2> key);

/// Purpose tag of a random substream. Distinct purposes never share counters.
enum class Stream : std::uint32_t {
    Target = 1,    // exact draws from the target mixture
    Initial = 2,   // draws from the smoothed initial law
    Dynamics = 3,  // per-step driving noise of EM / ELP
    Selftest = 4,
};

std::string_view to_string(Stream s);

/// Deterministic generator for one (seed, purpose, path, step) substream.
///
/// The counter is laid out as {block, step, path, purpose} and the key is the
/// 64-bit seed, so a draw depends only on its substream coordinates and its
/// position inside the substream. Runs are therefore reproducible regardless
/// of how paths are scheduled across workers, and EM and ELP consume identical
/// noise for the same (path, step).
class CounterRng {
public:
    CounterRng(std::uint64_t seed, Stream purpose, std::uint64_t path, std::uint64_t step = 0);

    /// Uniform on the open interval (0, 1), 53-bit resolution.
    double uniform();

    /// Standard normal via Box-Muller; pairs are cached.
    double normal();

    void fill_normal(std::span<double> out);

private:
    std::uint64_t next_u64();

    std::array<std::uint32_t, 4> counter_;
    std::array<std::uint32_t, 2> key_;
    std::array<std::uint32_t, 4> block_{};
    unsigned used_ = 4;
    double cached_ = 0.0;
    bool has_cached_ = false;
};

}  // namespace ald
