#include "cada/eval.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <ostream>
#include <string>
#include <vector>

namespace cada {

void ContingencyTable::add(Label gt, Label seg, std::uint64_t n)
{
    counts[{gt, seg}] += n;
    gt_sizes[gt] += n;
    seg_sizes[seg] += n;
    total += n;
}

void ContingencyTable::merge(const ContingencyTable& other)
{
    for (const auto& [key, n] : other.counts) {
        add(key.first, key.second, n);
    }
}

ContingencyTable ContingencyTable::transposed() const
{
    ContingencyTable t;
    for (const auto& [key, n] : counts) {
        t.counts[{key.second, key.first}] = n;
    }
    t.gt_sizes = seg_sizes;
    t.seg_sizes = gt_sizes;
    t.total = total;
    return t;
}

ContingencyTable contingency(const LabelVolume& seg, const LabelVolume& gt, bool exclude_zero)
{
    if (!(seg.dims() == gt.dims())) {
        throw ShapeError("segmentation extents " + seg.dims().to_string() + " differ from ground truth " +
                         gt.dims().to_string());
    }
    // Run-length the (gt, seg) stream to keep map traffic low on smooth volumes.
    ContingencyTable t;
    std::size_t i = 0;
    while (i < seg.size()) {
        const Label g = gt[i];
        const Label r = seg[i];
        std::size_t j = i + 1;
        while (j < seg.size() && gt[j] == g && seg[j] == r) {
            ++j;
        }
        if (!(exclude_zero && (g == 0 || r == 0))) {
            t.add(g, r, j - i);
        }
        i = j;
    }
    return t;
}

SplitVI split_vi(const ContingencyTable& t)
{
    if (t.total == 0) {
        throw ValueError("split VI of an empty contingency table");
    }
    // Terms are summed in sorted order so the result does not depend on the
    // table's iteration order; swapping the arguments swaps the outputs exactly.
    const double z = static_cast<double>(t.total);
    std::vector<double> over;
    std::vector<double> under;
    over.reserve(t.counts.size());
    under.reserve(t.counts.size());
    for (const auto& [key, n] : t.counts) {
        if (n == 0) {
            continue;
        }
        const double p = static_cast<double>(n) / z;
        over.push_back(-p * std::log2(static_cast<double>(n) / static_cast<double>(t.gt_sizes.at(key.first))));
        under.push_back(-p * std::log2(static_cast<double>(n) / static_cast<double>(t.seg_sizes.at(key.second))));
    }
    auto total = [](std::vector<double>& terms) {
        std::sort(terms.begin(), terms.end());
        double s = 0.0;
        for (double v : terms) {
            s += v;
        }
        return s == 0.0 ? 0.0 : s;
    };
    return {total(under), total(over)};
}

namespace {

unsigned __int128 pairs(std::uint64_t n)
{
    return static_cast<unsigned __int128>(n) * (n - (n > 0 ? 1 : 0)) / 2;
}

double ratio(unsigned __int128 num, unsigned __int128 den)
{
    // Exact operands (below 2^53 for any realistic volume) give a correctly
    // rounded quotient.
    return static_cast<double>(num) / static_cast<double>(den);
}

} // namespace

SplitRE split_re(const ContingencyTable& t)
{
    if (t.total < 2) {
        throw ValueError("split Rand error needs at least two voxels, got " + std::to_string(t.total));
    }
    unsigned __int128 joint = 0;
    for (const auto& [key, n] : t.counts) {
        joint += pairs(n);
    }
    unsigned __int128 same_gt = 0;
    for (const auto& [id, n] : t.gt_sizes) {
        same_gt += pairs(n);
    }
    unsigned __int128 same_seg = 0;
    for (const auto& [id, n] : t.seg_sizes) {
        same_seg += pairs(n);
    }
    const unsigned __int128 all = pairs(t.total);
    return {ratio(same_seg - joint, all), ratio(same_gt - joint, all)};
}

MetricsRow evaluate(const LabelVolume& seg, const LabelVolume& gt, std::optional<double> delta)
{
    const ContingencyTable t = contingency(seg, gt, true);
    return {delta, split_vi(t), split_re(t)};
}

void write_metrics_header(std::ostream& out)
{
    out << "delta,VI_UE,VI_OE,RE_UE,RE_OE,RE_UE_pct_x1e5,RE_OE_pct_x1e5\n";
}

void write_metrics_row(std::ostream& out, const MetricsRow& row)
{
    char buf[256];
    std::string delta;
    if (row.delta) {
        std::snprintf(buf, sizeof buf, "%.17g", *row.delta);
        delta = buf;
    }
    std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.17g,%.17g,%.17g,%.17g", row.vi.under, row.vi.over, row.re.under,
                  row.re.over, row.re.under_scaled(), row.re.over_scaled());
    out << delta << ',' << buf << '\n';
}

} // namespace cada
