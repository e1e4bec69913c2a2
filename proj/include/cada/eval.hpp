#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <utility>

#include "cada/volume.hpp"

namespace cada {

// Joint overlap counts |g_i ∩ r_j| between a ground truth and a segmentation.
struct ContingencyTable {
    std::map<std::pair<Label, Label>, std::uint64_t> counts; // (gt, seg) -> voxels
    std::map<Label, std::uint64_t> gt_sizes;
    std::map<Label, std::uint64_t> seg_sizes;
    std::uint64_t total = 0;

    void add(Label gt, Label seg, std::uint64_t n = 1);
    // Combines partial tables accumulated over disjoint voxel sets.
    void merge(const ContingencyTable& other);
    // The same table with the roles of ground truth and segmentation swapped.
    ContingencyTable transposed() const;
};

// Voxels labelled 0 in either volume are skipped when exclude_zero is set.
// Throws ShapeError on mismatched extents.
ContingencyTable contingency(const LabelVolume& seg, const LabelVolume& gt, bool exclude_zero = true);

struct SplitVI {
    double under = 0.0; // VI_UE, bits
    double over = 0.0;  // VI_OE, bits
};

// VI_OE = -sum (n_ij / Z) log2(n_ij / |g_i|)   (fragmented ground-truth regions)
// VI_UE = -sum (n_ij / Z) log2(n_ij / |r_j|)   (segments spanning several regions)
// Throws ValueError on an empty table.
SplitVI split_vi(const ContingencyTable& t);

struct SplitRE {
    double under = 0.0; // RE_UE: fraction of pairs sharing a segment but not a ground-truth region
    double over = 0.0;  // RE_OE: fraction of pairs sharing a ground-truth region but not a segment

    double under_percent() const { return under * 100.0; }
    double over_percent() const { return over * 100.0; }
    // Percent expressed in units of 1e-5 percent.
    double under_scaled() const { return under * 100.0 * 1e5; }
    double over_scaled() const { return over * 100.0 * 1e5; }
};

// Closed-form pair counting over all C(Z,2) voxel pairs. Throws ValueError if Z < 2.
SplitRE split_re(const ContingencyTable& t);

struct MetricsRow {
    std::optional<double> delta;
    SplitVI vi;
    SplitRE re;
};

MetricsRow evaluate(const LabelVolume& seg, const LabelVolume& gt, std::optional<double> delta = std::nullopt);

void write_metrics_header(std::ostream& out);
void write_metrics_row(std::ostream& out, const MetricsRow& row);

} // namespace cada
