#pragma once

#include <array>
#include <cstddef>
#include <vector>

#include "cada/histogram.hpp"
#include "cada/rag.hpp"

namespace cada {

// mean, std, q25, q50, q75, q100
using StatBlock = std::array<double, 6>;

inline constexpr std::size_t kStatsPerBlock = 6;
inline constexpr std::size_t kBlocksPerChannel = 4;

StatBlock summarize(const MomentHistogram& h);

constexpr std::size_t feature_length(std::size_t channels)
{
    return channels * kBlocksPerChannel * kStatsPerBlock;
}

// Per channel: [edge stats, larger region stats, smaller region stats,
// |larger - smaller|]. "Larger" is the endpoint with more voxels, the lower id
// on ties, so the vector does not depend on endpoint order.
// Throws ValueError if the edge histograms are empty.
std::vector<double> edge_features(const RegionGraph& g, const BoundaryEdge& e);

} // namespace cada
