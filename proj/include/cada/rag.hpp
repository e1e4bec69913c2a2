#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "cada/histogram.hpp"
#include "cada/volume.hpp"

namespace cada {

enum class RegionType : std::uint8_t { Cyto, Mito };
enum class EdgeFlag : std::uint8_t { Active, Delay };

// Stable edge identifier. Ids are assigned at construction in lexicographic
// order of the (low, high) endpoint pair. A re-keyed edge keeps its id; when
// two parallel faces are unified by a merge the survivor takes the lower id.
using EdgeId = std::uint32_t;

struct RegionNode {
    Label id = 0;
    std::uint64_t voxel_count = 0;
    RegionType type = RegionType::Cyto;
    std::vector<MomentHistogram> channel_hists;
    // neighbor id -> id of the shared edge
    std::map<Label, EdgeId> adjacency;
};

struct BoundaryEdge {
    EdgeId id = 0;
    Label lo = 0;
    Label hi = 0;
    std::uint64_t face_length = 0;
    std::vector<MomentHistogram> channel_hists;
    EdgeFlag flag = EdgeFlag::Active;
    std::optional<double> cached_confidence;
    std::uint64_t version = 0;

    Label other(Label end) const { return end == lo ? hi : lo; }
    bool touches(Label n) const { return n == lo || n == hi; }
};

// Region adjacency graph over a face-connected label volume.
class RegionGraph {
public:
    RegionGraph() = default;

    // One node per distinct label, one edge per adjacent label pair. Each
    // face-adjacent voxel pair with differing labels adds 1 to face_length and
    // contributes both voxels' channel values to the edge histograms.
    // Throws ShapeError on mismatched extents, ValueError if label 0 occurs.
    static RegionGraph build(const LabelVolume& labels, const ProbabilityStack& probs);

    const std::vector<std::string>& channel_names() const { return channel_names_; }
    std::optional<std::size_t> channel_index(std::string_view name) const;

    std::size_t node_count() const { return nodes_.size(); }
    std::size_t edge_count() const { return edges_.size(); }

    bool has_node(Label id) const { return nodes_.count(id) != 0; }
    const RegionNode& node(Label id) const;
    const std::map<Label, RegionNode>& nodes() const { return nodes_; }

    // Sorted neighbor ids. Throws ValueError for an unknown id.
    std::vector<Label> neighbors(Label id) const;

    bool has_edge(EdgeId id) const { return edges_.count(id) != 0; }
    const BoundaryEdge& edge(EdgeId id) const;
    const BoundaryEdge* find_edge(Label a, Label b) const;
    // All live edge ids in ascending order.
    std::vector<EdgeId> edge_ids() const;
    const std::unordered_map<EdgeId, BoundaryEdge>& edges() const { return edges_; }

    // Absorbs `absorb` into `keep`. The shared edge is dissolved, edges of
    // `absorb` are re-keyed onto `keep`, and parallel faces are unified
    // (face lengths add, histograms merge). Every touched edge gets a new
    // version. The merged node is Cyto if either input was Cyto.
    // Throws ValueError when keep == absorb or no edge joins them.
    void merge(Label keep, Label absorb);

    void set_type(Label id, RegionType type);
    void set_flag(EdgeId id, EdgeFlag flag);
    // Caching a confidence counts as a mutation and bumps the version.
    void set_confidence(EdgeId id, double confidence);

    std::uint64_t total_voxels() const;
    std::uint64_t total_face_length() const;

private:
    BoundaryEdge& edge_mut(EdgeId id);
    RegionNode& node_mut(Label id);
    void touch(BoundaryEdge& e) { e.version = ++clock_; }

    std::vector<std::string> channel_names_;
    std::map<Label, RegionNode> nodes_;
    std::unordered_map<EdgeId, BoundaryEdge> edges_;
    std::uint64_t clock_ = 0;
};

inline RegionGraph build_rag(const LabelVolume& labels, const ProbabilityStack& probs)
{
    return RegionGraph::build(labels, probs);
}

// Structural comparison used by the rebuild-equivalence checks: node ids,
// voxel counts, node histograms, adjacency, and per-pair face lengths and
// histograms. Edge ids, versions, flags and cached confidences are ignored.
// On mismatch returns false and, if `why` is set, describes the first difference.
bool same_structure(const RegionGraph& a, const RegionGraph& b, std::string* why = nullptr);

// Maps every label through a merge forest given as (kept, absorbed) pairs in
// merge order; the kept id survives each merge.
class MergeForest {
public:
    void record(Label kept, Label absorbed) { parent_[absorbed] = kept; }
    Label find(Label id) const;
    LabelVolume relabel(const LabelVolume& labels) const;

private:
    std::unordered_map<Label, Label> parent_;
};

} // namespace cada
