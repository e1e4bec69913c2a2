#pragma once

#include "cada/volume.hpp"

namespace cada {

// Marker-based watershed over a boundary probability map.
//
// Markers are the face-connected components of {p < theta_seed}, labelled
// 1, 2, ... in order of their first voxel. The remaining voxels are flooded in
// ascending probability (ties: ascending voxel index, then lowest marker
// label), so every voxel is labelled and there are no ridge lines.
// Throws ValueError if no voxel lies below theta_seed.
LabelVolume watershed(const ChannelGrid& boundary, double theta_seed = 0.1);

} // namespace cada
