#pragma once

#include "capacc/normal.hpp"

#include <algorithm>
#include <cstdint>
#include <numeric>
#include <random>
#include <stdexcept>
#include <vector>

namespace capacc {

/*
 * Deterministic random source: a seeded mt19937_64 with hand-rolled
 * derived draws, so identical seeds give identical streams on every
 * platform.  Normals come from the inverse-CDF transform.  Independent
 * replicate streams are derived with a splitmix64 step over (seed, id).
 */
class Rng {
public:
    explicit Rng(std::uint64_t seed) : gen_(seed) {}

    static std::uint64_t mix(std::uint64_t seed, std::uint64_t stream_id) {
        std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (stream_id + 1);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

    static Rng stream(std::uint64_t seed, std::uint64_t stream_id) {
        return Rng(mix(seed, stream_id));
    }

    std::uint64_t next_u64() { return gen_(); }

    /* Uniform on the open interval (0, 1). */
    double uniform() {
        return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53;
    }

    double normal() { return norm_quantile(uniform()); }

    /* Uniform integer in [lo, hi]. */
    int uniform_int(int lo, int hi) {
        if (hi < lo) throw std::invalid_argument("Rng: empty integer range");
        const std::uint64_t span = static_cast<std::uint64_t>(hi) - lo + 1;
        return lo + static_cast<int>(next_u64() % span);
    }

    /* k distinct values from {0, ..., n-1}, sorted. */
    std::vector<int> sample_indices(int k, int n) {
        if (k < 0 || k > n) {
            throw std::invalid_argument("Rng: sample size out of range");
        }
        std::vector<int> pool(n);
        std::iota(pool.begin(), pool.end(), 0);
        for (int i = 0; i < k; ++i) {
            std::swap(pool[i], pool[uniform_int(i, n - 1)]);
        }
        pool.resize(k);
        std::sort(pool.begin(), pool.end());
        return pool;
    }

private:
    std::mt19937_64 gen_;
};

}  // namespace capacc
