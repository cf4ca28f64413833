#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <numeric>
#include <random>
#include <utility>
#include <vector>

namespace gftransfer {

using Rng = std::mt19937_64;

/// SplitMix64 finalizer; used to turn structured keys into decorrelated seeds.
constexpr std::uint64_t mix64(std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

/// Derives a child seed from a parent seed and a path of stream labels.
/// Streams are addressed by counter, never by draw order, so results do not
/// depend on how work is scheduled.
inline std::uint64_t derive_seed(std::uint64_t parent, std::initializer_list<std::uint64_t> path) {
    std::uint64_t s = mix64(parent);
    for (std::uint64_t label : path) s = mix64(s ^ mix64(label + 0x632be59bd9b4e019ULL));
    return s;
}

inline Rng make_rng(std::uint64_t parent, std::initializer_list<std::uint64_t> path) {
    return Rng(derive_seed(parent, path));
}

/// First `k` entries of a partial Fisher-Yates shuffle of 0..n-1: a uniform
/// draw of k distinct indices.
inline std::vector<std::size_t> sample_without_replacement(std::size_t n, std::size_t k, Rng& rng) {
    std::vector<std::size_t> pool(n);
    std::iota(pool.begin(), pool.end(), std::size_t{0});
    for (std::size_t i = 0; i < k && i < n; ++i) {
        std::uniform_int_distribution<std::size_t> pick(i, n - 1);
        std::swap(pool[i], pool[pick(rng)]);
    }
    pool.resize(std::min(k, n));
    return pool;
}

}  // namespace gftransfer
