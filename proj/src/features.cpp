#include "cada/features.hpp"

#include <cmath>

namespace cada {

StatBlock summarize(const MomentHistogram& h)
{
    if (h.empty()) {
        throw ValueError("cannot summarize an empty histogram");
    }
    return {h.mean(), h.stddev(), h.quartile(25), h.quartile(50), h.quartile(75), h.quartile(100)};
}

std::vector<double> edge_features(const RegionGraph& g, const BoundaryEdge& e)
{
    const RegionNode& a = g.node(e.lo);
    const RegionNode& b = g.node(e.hi);
    const bool a_larger = a.voxel_count > b.voxel_count || (a.voxel_count == b.voxel_count && a.id < b.id);
    const RegionNode& larger = a_larger ? a : b;
    const RegionNode& smaller = a_larger ? b : a;

    const std::size_t nchan = e.channel_hists.size();
    std::vector<double> out;
    out.reserve(feature_length(nchan));
    for (std::size_t c = 0; c < nchan; ++c) {
        const StatBlock edge = summarize(e.channel_hists[c]);
        const StatBlock big = summarize(larger.channel_hists[c]);
        const StatBlock small = summarize(smaller.channel_hists[c]);
        out.insert(out.end(), edge.begin(), edge.end());
        out.insert(out.end(), big.begin(), big.end());
        out.insert(out.end(), small.begin(), small.end());
        for (std::size_t s = 0; s < kStatsPerBlock; ++s) {
            out.push_back(std::fabs(big[s] - small[s]));
        }
    }
    return out;
}

} // namespace cada
