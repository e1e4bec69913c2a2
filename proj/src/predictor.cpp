#include "cada/predictor.hpp"

#include "cada/context.hpp"
#include "cada/features.hpp"

namespace cada {

namespace {

Label argmax_overlap(const std::map<Label, std::uint64_t>& counts)
{
    Label best = 0;
    std::uint64_t best_n = 0;
    // Ascending gt id, strict comparison: ties keep the lower id.
    for (const auto& [gt, n] : counts) {
        if (n > best_n) {
            best = gt;
            best_n = n;
        }
    }
    return best;
}

} // namespace

GtAssignment assign_gt_labels(const LabelVolume& overseg, const LabelVolume& gt)
{
    if (!(overseg.dims() == gt.dims())) {
        throw ShapeError("over-segmentation extents " + overseg.dims().to_string() +
                         " differ from ground-truth extents " + gt.dims().to_string());
    }
    std::map<Label, std::map<Label, std::uint64_t>> overlap;
    for (std::size_t i = 0; i < overseg.size(); ++i) {
        ++overlap[overseg[i]][gt[i]];
    }
    GtAssignment out;
    for (const auto& [region, counts] : overlap) {
        out.region_gt[region] = argmax_overlap(counts);
    }
    for_each_face_pair(overseg.dims(), [&](std::size_t i, std::size_t j) {
        Label a = overseg[i];
        Label b = overseg[j];
        if (a == b) {
            return;
        }
        if (a > b) {
            std::swap(a, b);
        }
        out.edge_label[{a, b}] = out.region_gt[a] != out.region_gt[b] ? 1 : 0;
    });
    return out;
}

OverlapTracker::OverlapTracker(const LabelVolume& overseg, const LabelVolume& gt)
{
    if (!(overseg.dims() == gt.dims())) {
        throw ShapeError("over-segmentation extents " + overseg.dims().to_string() +
                         " differ from ground-truth extents " + gt.dims().to_string());
    }
    for (std::size_t i = 0; i < overseg.size(); ++i) {
        ++overlap_[overseg[i]][gt[i]];
    }
}

void OverlapTracker::merge(Label keep, Label absorb)
{
    auto it = overlap_.find(absorb);
    if (it == overlap_.end()) {
        return;
    }
    auto& dst = overlap_[keep];
    for (const auto& [gt, n] : it->second) {
        dst[gt] += n;
    }
    overlap_.erase(absorb);
}

Label OverlapTracker::gt_of(Label region) const
{
    const auto it = overlap_.find(region);
    if (it == overlap_.end()) {
        throw ValueError("no overlap record for region " + std::to_string(region));
    }
    return argmax_overlap(it->second);
}

double mean_boundary_confidence(const RegionGraph& g, const BoundaryEdge& e)
{
    const auto c = g.channel_index(channel::kBoundary);
    if (!c) {
        throw ValueError("graph has no '" + std::string(channel::kBoundary) + "' channel");
    }
    const MomentHistogram& h = e.channel_hists[*c];
    if (h.empty()) {
        throw ValueError("edge " + std::to_string(e.id) + " has no boundary samples");
    }
    return h.mean();
}

ConfidenceFn forest_confidence(const Forest& forest)
{
    return [&forest](const RegionGraph& g, const BoundaryEdge& e) {
        const std::vector<double> x = edge_features(g, e);
        return forest.predict(x);
    };
}

TrainResult iterative_train(const RegionGraph& g0, const LabelVolume& overseg, const LabelVolume& gt,
                            const TrainParams& params)
{
    if (params.iterations < 1) {
        throw ValueError("iterations must be at least 1");
    }

    RegionGraph base = g0;
    if (params.context) {
        partition_superpixels(base, params.theta_mito);
    }
    // In context mode Mito-Mito faces carry no label and Mito-Cyto faces are
    // membranes by definition.
    auto label_of = [&](const RegionGraph& g, const BoundaryEdge& e, const OverlapTracker& t) -> int {
        if (params.context) {
            const bool ml = g.node(e.lo).type == RegionType::Mito;
            const bool mh = g.node(e.hi).type == RegionType::Mito;
            if (ml && mh) {
                return -1;
            }
            if (ml || mh) {
                return 1;
            }
        }
        return t.boundary_label(e.lo, e.hi);
    };

    TrainResult out;
    TrainingSet current;
    {
        const OverlapTracker tracker(overseg, gt);
        for (EdgeId id : base.edge_ids()) {
            const BoundaryEdge& e = base.edge(id);
            const int y = label_of(base, e, tracker);
            if (y >= 0) {
                current.add(edge_features(base, e), y, 1);
            }
        }
    }
    out.new_rows.push_back(current.size());
    out.rows_per_iteration.push_back(current.size());
    out.forest = train_forest(current, params.forest);

    for (std::size_t it = 2; it <= params.iterations; ++it) {
        RegionGraph g = base;
        OverlapTracker tracker(overseg, gt);
        TrainingSet fresh;

        AgglomHooks hooks;
        if (params.context) {
            hooks.candidate = [](const RegionGraph& gg, const BoundaryEdge& e) {
                return gg.node(e.lo).type == RegionType::Cyto && gg.node(e.hi).type == RegionType::Cyto;
            };
        }
        hooks.on_examine = [&](const RegionGraph& gg, const BoundaryEdge& e, double) {
            const int y = label_of(gg, e, tracker);
            if (y >= 0) {
                fresh.add(edge_features(gg, e), y, it);
            }
        };
        hooks.on_merge = [&](Label keep, Label absorb) { tracker.merge(keep, absorb); };
        if (params.strict) {
            hooks.veto = [&](const RegionGraph&, const BoundaryEdge& e) {
                return tracker.boundary_label(e.lo, e.hi) == 1;
            };
        }

        AgglomConfig cfg;
        cfg.delta = params.train_delta;
        cfg.policy = params.policy;
        agglomerate(g, forest_confidence(out.forest), cfg, hooks);

        out.new_rows.push_back(fresh.size());
        if (params.accumulate) {
            current.append(fresh);
        } else {
            current = std::move(fresh);
        }
        out.rows_per_iteration.push_back(current.size());
        out.forest = train_forest(current, params.forest);
    }
    out.final_set = std::move(current);
    return out;
}

} // namespace cada
