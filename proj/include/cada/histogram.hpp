#pragma once

#include <array>
#include <cstdint>

namespace cada {

// Constant-time-mergeable summary of probability samples in [0,1]: count,
// first and second moments, and a fixed 25-bin histogram.
//
// Sums are kept in fixed point (units of 2^-48) so that merging is exact:
// merge(merge(a, b), c) == merge(a, merge(b, c)) bit for bit, and a merged
// summary is identical to one accumulated from the concatenated samples.
// Quantization error per sample is below 2^-49.
class MomentHistogram {
public:
    static constexpr int kBins = 25;
    static constexpr double kBinWidth = 1.0 / kBins;

    // Throws ValueError when v is outside [0,1] or not finite.
    void accumulate(double v);

    // O(kBins), independent of the number of samples.
    void merge(const MomentHistogram& other);

    std::uint64_t count() const { return count_; }
    bool empty() const { return count_ == 0; }
    double sum() const;
    double sum_sq() const;
    double mean() const;
    // Population standard deviation; 0 for a single sample.
    double stddev() const;

    // q in {25, 50, 75, 100}. Linear interpolation of the binned CDF inside
    // the bin holding the target rank; q = 100 returns the upper edge of the
    // highest occupied bin. Throws ValueError on an empty histogram.
    double quartile(int q) const;

    const std::array<std::uint64_t, kBins>& bins() const { return bins_; }

    // Raw fixed-point accumulators, for exact comparisons.
    unsigned __int128 raw_sum() const { return sum_; }
    unsigned __int128 raw_sum_sq() const { return sum_sq_; }

    static int bin_of(double v);

    bool operator==(const MomentHistogram&) const = default;

private:
    std::uint64_t count_ = 0;
    unsigned __int128 sum_ = 0;
    unsigned __int128 sum_sq_ = 0;
    std::array<std::uint64_t, kBins> bins_{};
};

MomentHistogram merge_hist(const MomentHistogram& a, const MomentHistogram& b);

} // namespace cada
