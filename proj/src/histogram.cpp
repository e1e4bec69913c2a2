#include "cada/histogram.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include <boost/multiprecision/cpp_int.hpp>

#include "cada/errors.hpp"

namespace cada {

namespace {

constexpr double kScale = 0x1.0p48;
constexpr long double kScaleL = 0x1.0p48L;

long double to_long_double(unsigned __int128 v)
{
    const auto hi = static_cast<std::uint64_t>(v >> 64);
    const auto lo = static_cast<std::uint64_t>(v);
    return static_cast<long double>(hi) * 0x1.0p64L + static_cast<long double>(lo);
}

boost::multiprecision::uint256_t to_u256(unsigned __int128 v)
{
    boost::multiprecision::uint256_t r = static_cast<std::uint64_t>(v >> 64);
    r <<= 64;
    r += static_cast<std::uint64_t>(v);
    return r;
}

} // namespace

int MomentHistogram::bin_of(double v)
{
    return std::min(kBins - 1, static_cast<int>(v * kBins));
}

void MomentHistogram::accumulate(double v)
{
    if (!(v >= 0.0 && v <= 1.0)) {
        throw ValueError("histogram sample " + std::to_string(v) + " outside [0,1]");
    }
    const auto q = static_cast<std::uint64_t>(std::llround(v * kScale));
    ++count_;
    sum_ += q;
    sum_sq_ += static_cast<unsigned __int128>(q) * q;
    ++bins_[static_cast<std::size_t>(bin_of(v))];
}

void MomentHistogram::merge(const MomentHistogram& other)
{
    count_ += other.count_;
    sum_ += other.sum_;
    sum_sq_ += other.sum_sq_;
    for (int b = 0; b < kBins; ++b) {
        bins_[b] += other.bins_[b];
    }
}

MomentHistogram merge_hist(const MomentHistogram& a, const MomentHistogram& b)
{
    MomentHistogram out = a;
    out.merge(b);
    return out;
}

double MomentHistogram::sum() const
{
    return static_cast<double>(to_long_double(sum_) / kScaleL);
}

double MomentHistogram::sum_sq() const
{
    return static_cast<double>(to_long_double(sum_sq_) / (kScaleL * kScaleL));
}

double MomentHistogram::mean() const
{
    if (count_ == 0) {
        throw ValueError("mean of an empty histogram");
    }
    return static_cast<double>(to_long_double(sum_) / static_cast<long double>(count_) / kScaleL);
}

double MomentHistogram::stddev() const
{
    if (count_ == 0) {
        throw ValueError("standard deviation of an empty histogram");
    }
    // n * sum_sq - sum^2 is exact and non-negative (Cauchy-Schwarz).
    using boost::multiprecision::uint256_t;
    const uint256_t numer = uint256_t(count_) * to_u256(sum_sq_) - to_u256(sum_) * to_u256(sum_);
    const long double n = static_cast<long double>(count_);
    const long double var = numer.convert_to<long double>() / (n * n) / (kScaleL * kScaleL);
    return static_cast<double>(std::sqrt(var));
}

double MomentHistogram::quartile(int q) const
{
    if (q != 25 && q != 50 && q != 75 && q != 100) {
        throw ValueError("quartile must be one of 25, 50, 75, 100; got " + std::to_string(q));
    }
    if (count_ == 0) {
        throw ValueError("quartile of an empty histogram");
    }
    const double target = static_cast<double>(count_) * q / 100.0;
    std::uint64_t below = 0;
    for (int b = 0; b < kBins; ++b) {
        if (bins_[b] == 0) {
            continue;
        }
        const std::uint64_t through = below + bins_[b];
        if (static_cast<double>(through) >= target) {
            const double frac = (target - static_cast<double>(below)) / static_cast<double>(bins_[b]);
            return (b + std::clamp(frac, 0.0, 1.0)) * kBinWidth;
        }
        below = through;
    }
    // Unreachable: the last occupied bin always satisfies through == count.
    return 1.0;
}

} // namespace cada
