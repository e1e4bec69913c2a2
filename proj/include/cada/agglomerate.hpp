#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

#include "cada/rag.hpp"

namespace cada {

enum class Policy { Standard, Delayed };

Policy parse_policy(const std::string& s);
std::string to_string(Policy p);

struct AgglomConfig {
    // Merging stops once every candidate confidence exceeds delta.
    double delta = 0.2;
    Policy policy = Policy::Delayed;
    // Delayed policy only: defer confidence recomputation of queued edges
    // until they surface at the top of the queue.
    bool lazy_updates = false;
};

// Boundary confidence h(e) in [0,1]; large means "true boundary, keep".
using ConfidenceFn = std::function<double(const RegionGraph&, const BoundaryEdge&)>;
using EdgePredicate = std::function<bool(const RegionGraph&, const BoundaryEdge&)>;

struct AgglomHooks {
    // Restricts which edges may be merged; unset means every edge.
    EdgePredicate candidate;
    // Called for every edge selected from the queue and tested against delta,
    // with its current confidence, before the merge happens.
    std::function<void(const RegionGraph&, const BoundaryEdge&, double)> on_examine;
    // Called after each merge.
    std::function<void(Label kept, Label absorbed)> on_merge;
    // Consulted after on_examine for an edge at or below delta. Returning true
    // skips the merge and drops the edge from the queue until a later merge
    // touches it again.
    EdgePredicate veto;
};

struct MergeStep {
    std::size_t step = 0;
    Label kept = 0;
    Label absorbed = 0;
    double confidence = 0.0;
    // 1 for merges before the first reactivation of delayed edges, then 2, ...
    std::size_t sweep = 1;

    bool operator==(const MergeStep&) const = default;
};

struct MergeCounters {
    std::uint64_t pushes = 0;
    std::uint64_t pops = 0;
    std::uint64_t stale_pops = 0;
    std::uint64_t recomputations = 0;
    std::uint64_t reactivations = 0;
};

struct MergeTrace {
    std::vector<MergeStep> steps;
    MergeCounters counters;
};

// Repeatedly merges the lowest-confidence candidate edge (ties: lowest edge id)
// until the minimum exceeds delta. After each merge every edge incident to the
// merged region is re-evaluated. The lower region id survives each merge.
MergeTrace agglomerate_standard(RegionGraph& g, const ConfidenceFn& h, const AgglomConfig& cfg,
                                const AgglomHooks& hooks = {});

// Delayed agglomeration. Edges start ACTIVE. After a merge each incident edge
// is re-evaluated and flagged ACTIVE only if its confidence strictly exceeds
// the prior confidence of the face(s) it replaces (minimum of the two when
// parallel faces unify; edges with no comparable prior are DELAYed). Once no
// ACTIVE edge is at or below delta, DELAYed edges with h <= delta are
// reactivated together and a new sweep starts; the run ends when none remain.
MergeTrace agglomerate_delayed(RegionGraph& g, const ConfidenceFn& h, const AgglomConfig& cfg,
                               const AgglomHooks& hooks = {});

// Dispatches on cfg.policy.
MergeTrace agglomerate(RegionGraph& g, const ConfidenceFn& h, const AgglomConfig& cfg,
                       const AgglomHooks& hooks = {});

// Applies the merges of one or more traces to a label volume.
LabelVolume relabel(const LabelVolume& labels, const std::vector<const MergeTrace*>& traces);

void write_trace_csv(std::ostream& out, const MergeTrace& trace);
std::string counters_json(const MergeTrace& trace, int indent = 2);

} // namespace cada
