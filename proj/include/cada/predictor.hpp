#pragma once

#include <cstddef>
#include <map>
#include <unordered_map>
#include <utility>
#include <vector>

#include "cada/agglomerate.hpp"
#include "cada/forest.hpp"
#include "cada/rag.hpp"

namespace cada {

struct GtAssignment {
    // L(S): ground-truth region with the largest overlap (ties: lower gt id).
    std::map<Label, Label> region_gt;
    // (lo, hi) adjacent superpixel pair -> 1 if L differs across it, else 0.
    std::map<std::pair<Label, Label>, int> edge_label;
};

// Throws ShapeError on mismatched extents. Zero gt voxels count like any
// other gt id.
GtAssignment assign_gt_labels(const LabelVolume& overseg, const LabelVolume& gt);

// Per-region ground-truth overlap counts that follow merges, so L(S) stays
// available for regions formed during agglomeration.
class OverlapTracker {
public:
    OverlapTracker(const LabelVolume& overseg, const LabelVolume& gt);

    void merge(Label keep, Label absorb);
    Label gt_of(Label region) const;
    // 1 if the two regions map to different ground-truth regions.
    int boundary_label(Label a, Label b) const { return gt_of(a) != gt_of(b) ? 1 : 0; }

private:
    std::unordered_map<Label, std::map<Label, std::uint64_t>> overlap_;
};

// Mean of the edge's boundary-channel samples. Throws ValueError when the
// graph has no boundary channel or the edge has no samples.
double mean_boundary_confidence(const RegionGraph& g, const BoundaryEdge& e);

// h_c(e) = forest prediction on edge_features(e).
ConfidenceFn forest_confidence(const Forest& forest);

struct TrainParams {
    std::size_t iterations = 1;
    // Union of all iterations' rows (GALA, CADA-F) instead of the latest only (LASH).
    bool accumulate = false;
    // Context mode: partition by mito probability, skip Mito-Mito faces, label
    // Mito-Cyto faces as true boundaries, agglomerate Cyto-Cyto edges only.
    bool context = false;
    double theta_mito = 0.5;
    // Threshold of the labelling agglomeration in iterations after the first.
    double train_delta = 1.0;
    // Skip merges across ground-truth boundaries in the labelling runs, so
    // later iterations see bodies that are correct so far.
    bool strict = true;
    Policy policy = Policy::Delayed;
    ForestParams forest;
};

struct TrainResult {
    Forest forest;
    // Rows of the set each iteration's forest was fit on.
    std::vector<std::size_t> rows_per_iteration;
    // Rows produced by each iteration before accumulation.
    std::vector<std::size_t> new_rows;
    TrainingSet final_set;
};

// Iteration 1 labels every initial edge of g0. Each later iteration
// agglomerates a fresh copy of g0 with the current forest, labels every edge
// examined at pop time against the merged regions' ground truth, and refits.
TrainResult iterative_train(const RegionGraph& g0, const LabelVolume& overseg, const LabelVolume& gt,
                            const TrainParams& params);

} // namespace cada
