#pragma once

#include <cmath>
#include <cstdint>
#include <span>
#include <string_view>

namespace demcorrect {

/// Neumaier-compensated running sum. Accumulation order is the caller's.
class CompensatedSum {
public:
    void add(double x) noexcept {
        const double t = sum_ + x;
        if (std::abs(sum_) >= std::abs(x))
            comp_ += (sum_ - t) + x;
        else
            comp_ += (x - t) + sum_;
        sum_ = t;
    }
    double value() const noexcept { return sum_ + comp_; }

private:
    double sum_ = 0.0;
    double comp_ = 0.0;
};

inline double compensated_mean(std::span<const double> xs) noexcept {
    CompensatedSum s;
    for (double x : xs) s.add(x);
    return xs.empty() ? 0.0 : s.value() / static_cast<double>(xs.size());
}

/// SplitMix64-seeded xoshiro256** generator. Self-contained so seeded output is
/// identical across standard libraries.
class Rng {
public:
    explicit Rng(std::uint64_t seed) noexcept;
    std::uint64_t next() noexcept;
    /// Uniform in [0, 1) with 53 random bits.
    double uniform() noexcept { return static_cast<double>(next() >> 11) * 0x1.0p-53; }
    /// Uniform in [lo, hi).
    double uniform(double lo, double hi) noexcept { return lo + (hi - lo) * uniform(); }
    /// Unbiased integer in [0, bound). bound must be > 0.
    std::uint64_t below(std::uint64_t bound) noexcept;
    /// Standard normal deviate (Box-Muller, one value per call).
    double normal() noexcept;

private:
    std::uint64_t s_[4];
};

/// 64-bit FNV-1a, used for content digests in manifests and provenance blocks.
std::uint64_t fnv1a64(std::string_view bytes) noexcept;
std::string hex_digest(std::string_view bytes);

}  // namespace demcorrect
