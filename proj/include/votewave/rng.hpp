#pragma once
#include <cstdint>

// Counter-based, splittable randomness keyed by (seed, replica, node path).
// Each tree node owns a key; draws are pure functions of (key, draw index)
// and child keys are pure functions of (key, child index). Results are
// therefore independent of traversal order and of how replicas are scheduled
// across workers.

namespace votewave {

namespace detail {

inline std::uint64_t mix64(std::uint64_t z) {
    z ^= z >> 33;
    z *= 0xff51afd7ed558ccdULL;
    z ^= z >> 33;
    z *= 0xc4ceb9fe1a85ec53ULL;
    z ^= z >> 33;
    return z;
}

constexpr std::uint64_t kGolden = 0x9e3779b97f4a7c15ULL;
constexpr std::uint64_t kChildSalt = 0x6a09e667f3bcc909ULL;
constexpr std::uint64_t kRootSalt = 0xbb67ae8584caa73bULL;

}  // namespace detail

struct NodeRng {
    std::uint64_t key = 0;

    static NodeRng root(std::uint64_t seed, std::uint64_t replica) {
        std::uint64_t k = detail::mix64(seed + detail::kRootSalt);
        k = detail::mix64(k ^ detail::mix64(replica + detail::kGolden));
        return NodeRng{k};
    }

    NodeRng child(std::uint32_t index) const {
        return NodeRng{detail::mix64(key ^ detail::kChildSalt ^ ((index + 1) * detail::kGolden))};
    }

    std::uint64_t bits(std::uint32_t draw_index) const {
        return detail::mix64(key + (draw_index + 1) * detail::kGolden);
    }

    // uniform in [0,1)
    double unit(std::uint32_t draw_index) const {
        return static_cast<double>(bits(draw_index) >> 11) * 0x1.0p-53;
    }
};

// Draw slots per node; keeping them fixed makes coupled runs reuse the same
// decisions on the shared part of the tree.
enum NodeDraw : std::uint32_t {
    kDrawIncrement = 0,  // edge increment from the parent (unused at the root)
    kDrawOffspring = 1,  // number of children
    kDrawThreshold = 2,  // which order statistic to adopt
    kDrawVote = 3,       // outcome-model coin
};

}  // namespace votewave
