#include "cada/rag.hpp"

#include <algorithm>

namespace cada {

namespace {

std::uint64_t pair_key(Label a, Label b)
{
    if (a > b) {
        std::swap(a, b);
    }
    return (static_cast<std::uint64_t>(a) << 32) | b;
}

struct EdgeAccum {
    std::uint64_t faces = 0;
    std::vector<MomentHistogram> hists;
};

} // namespace

RegionGraph RegionGraph::build(const LabelVolume& labels, const ProbabilityStack& probs)
{
    const std::size_t nchan = probs.channel_count();
    if (nchan > 0 && !(probs.dims() == labels.dims())) {
        throw ShapeError("label extents " + labels.dims().to_string() + " differ from channel extents " +
                         probs.dims().to_string());
    }

    RegionGraph g;
    g.channel_names_ = probs.names();

    std::vector<const float*> chan(nchan);
    for (std::size_t c = 0; c < nchan; ++c) {
        chan[c] = probs.channel(c).data().data();
    }

    for (std::size_t i = 0; i < labels.size(); ++i) {
        const Label l = labels[i];
        if (l == 0) {
            throw ValueError("label 0 is reserved and may not appear in a region graph input");
        }
        auto [it, inserted] = g.nodes_.try_emplace(l);
        RegionNode& n = it->second;
        if (inserted) {
            n.id = l;
            n.channel_hists.resize(nchan);
        }
        ++n.voxel_count;
        for (std::size_t c = 0; c < nchan; ++c) {
            n.channel_hists[c].accumulate(chan[c][i]);
        }
    }

    // Ordered by pair key, which fixes the edge id assignment.
    std::map<std::uint64_t, EdgeAccum> accum;
    for_each_face_pair(labels.dims(), [&](std::size_t i, std::size_t j) {
        const Label a = labels[i];
        const Label b = labels[j];
        if (a == b) {
            return;
        }
        EdgeAccum& e = accum[pair_key(a, b)];
        if (e.hists.empty()) {
            e.hists.resize(nchan);
        }
        ++e.faces;
        for (std::size_t c = 0; c < nchan; ++c) {
            e.hists[c].accumulate(chan[c][i]);
            e.hists[c].accumulate(chan[c][j]);
        }
    });

    EdgeId next = 0;
    g.edges_.reserve(accum.size());
    for (auto& [key, acc] : accum) {
        BoundaryEdge e;
        e.id = next++;
        e.lo = static_cast<Label>(key >> 32);
        e.hi = static_cast<Label>(key & 0xffffffffu);
        e.face_length = acc.faces;
        e.channel_hists = std::move(acc.hists);
        e.version = ++g.clock_;
        g.nodes_[e.lo].adjacency.emplace(e.hi, e.id);
        g.nodes_[e.hi].adjacency.emplace(e.lo, e.id);
        g.edges_.emplace(e.id, std::move(e));
    }
    return g;
}

std::optional<std::size_t> RegionGraph::channel_index(std::string_view name) const
{
    for (std::size_t i = 0; i < channel_names_.size(); ++i) {
        if (channel_names_[i] == name) {
            return i;
        }
    }
    return std::nullopt;
}

const RegionNode& RegionGraph::node(Label id) const
{
    auto it = nodes_.find(id);
    if (it == nodes_.end()) {
        throw ValueError("unknown region " + std::to_string(id));
    }
    return it->second;
}

RegionNode& RegionGraph::node_mut(Label id)
{
    auto it = nodes_.find(id);
    if (it == nodes_.end()) {
        throw ValueError("unknown region " + std::to_string(id));
    }
    return it->second;
}

std::vector<Label> RegionGraph::neighbors(Label id) const
{
    const RegionNode& n = node(id);
    std::vector<Label> out;
    out.reserve(n.adjacency.size());
    for (const auto& [nb, eid] : n.adjacency) {
        out.push_back(nb);
    }
    return out;
}

const BoundaryEdge& RegionGraph::edge(EdgeId id) const
{
    auto it = edges_.find(id);
    if (it == edges_.end()) {
        throw ValueError("unknown edge " + std::to_string(id));
    }
    return it->second;
}

BoundaryEdge& RegionGraph::edge_mut(EdgeId id)
{
    auto it = edges_.find(id);
    if (it == edges_.end()) {
        throw ValueError("unknown edge " + std::to_string(id));
    }
    return it->second;
}

const BoundaryEdge* RegionGraph::find_edge(Label a, Label b) const
{
    auto it = nodes_.find(a);
    if (it == nodes_.end()) {
        return nullptr;
    }
    auto adj = it->second.adjacency.find(b);
    if (adj == it->second.adjacency.end()) {
        return nullptr;
    }
    return &edges_.at(adj->second);
}

std::vector<EdgeId> RegionGraph::edge_ids() const
{
    std::vector<EdgeId> ids;
    ids.reserve(edges_.size());
    for (const auto& [id, e] : edges_) {
        ids.push_back(id);
    }
    std::sort(ids.begin(), ids.end());
    return ids;
}

void RegionGraph::merge(Label keep, Label absorb)
{
    if (keep == absorb) {
        throw ValueError("cannot merge region " + std::to_string(keep) + " with itself");
    }
    RegionNode& k = node_mut(keep);
    RegionNode& a = node_mut(absorb);
    auto shared = k.adjacency.find(absorb);
    if (shared == k.adjacency.end()) {
        throw ValueError("regions " + std::to_string(keep) + " and " + std::to_string(absorb) +
                         " are not adjacent");
    }

    edges_.erase(shared->second);
    k.adjacency.erase(shared);
    a.adjacency.erase(keep);

    k.voxel_count += a.voxel_count;
    for (std::size_t c = 0; c < k.channel_hists.size(); ++c) {
        k.channel_hists[c].merge(a.channel_hists[c]);
    }
    if (k.type == RegionType::Cyto || a.type == RegionType::Cyto) {
        k.type = RegionType::Cyto;
    }

    for (const auto& [nb, eid] : a.adjacency) {
        RegionNode& b = nodes_.at(nb);
        b.adjacency.erase(absorb);
        auto parallel = k.adjacency.find(nb);
        if (parallel == k.adjacency.end()) {
            BoundaryEdge& e = edges_.at(eid);
            e.lo = std::min(keep, nb);
            e.hi = std::max(keep, nb);
            touch(e);
            k.adjacency.emplace(nb, eid);
            b.adjacency.emplace(keep, eid);
            continue;
        }
        const EdgeId survivor_id = std::min(parallel->second, eid);
        const EdgeId dropped_id = std::max(parallel->second, eid);
        BoundaryEdge& survivor = edges_.at(survivor_id);
        const BoundaryEdge& dropped = edges_.at(dropped_id);
        survivor.face_length += dropped.face_length;
        for (std::size_t c = 0; c < survivor.channel_hists.size(); ++c) {
            survivor.channel_hists[c].merge(dropped.channel_hists[c]);
        }
        survivor.lo = std::min(keep, nb);
        survivor.hi = std::max(keep, nb);
        survivor.cached_confidence.reset();
        touch(survivor);
        edges_.erase(dropped_id);
        parallel->second = survivor_id;
        b.adjacency[keep] = survivor_id;
    }
    nodes_.erase(absorb);
}

void RegionGraph::set_type(Label id, RegionType type)
{
    node_mut(id).type = type;
}

void RegionGraph::set_flag(EdgeId id, EdgeFlag flag)
{
    BoundaryEdge& e = edge_mut(id);
    e.flag = flag;
    touch(e);
}

void RegionGraph::set_confidence(EdgeId id, double confidence)
{
    BoundaryEdge& e = edge_mut(id);
    e.cached_confidence = confidence;
    touch(e);
}

std::uint64_t RegionGraph::total_voxels() const
{
    std::uint64_t n = 0;
    for (const auto& [id, node] : nodes_) {
        n += node.voxel_count;
    }
    return n;
}

std::uint64_t RegionGraph::total_face_length() const
{
    std::uint64_t n = 0;
    for (const auto& [id, e] : edges_) {
        n += e.face_length;
    }
    return n;
}

bool same_structure(const RegionGraph& a, const RegionGraph& b, std::string* why)
{
    auto fail = [&](std::string msg) {
        if (why) {
            *why = std::move(msg);
        }
        return false;
    };
    if (a.node_count() != b.node_count()) {
        return fail("node counts differ: " + std::to_string(a.node_count()) + " vs " +
                    std::to_string(b.node_count()));
    }
    if (a.edge_count() != b.edge_count()) {
        return fail("edge counts differ: " + std::to_string(a.edge_count()) + " vs " +
                    std::to_string(b.edge_count()));
    }
    for (const auto& [id, na] : a.nodes()) {
        if (!b.has_node(id)) {
            return fail("node " + std::to_string(id) + " missing");
        }
        const RegionNode& nb = b.node(id);
        if (na.voxel_count != nb.voxel_count) {
            return fail("voxel count of node " + std::to_string(id));
        }
        if (na.channel_hists != nb.channel_hists) {
            return fail("histograms of node " + std::to_string(id));
        }
        if (na.adjacency.size() != nb.adjacency.size()) {
            return fail("degree of node " + std::to_string(id));
        }
        for (const auto& [other, eid] : na.adjacency) {
            const BoundaryEdge* eb = b.find_edge(id, other);
            if (!eb) {
                return fail("edge {" + std::to_string(id) + "," + std::to_string(other) + "} missing");
            }
            const BoundaryEdge& ea = a.edge(eid);
            if (ea.face_length != eb->face_length) {
                return fail("face length of edge {" + std::to_string(id) + "," + std::to_string(other) +
                            "}: " + std::to_string(ea.face_length) + " vs " + std::to_string(eb->face_length));
            }
            if (ea.channel_hists != eb->channel_hists) {
                return fail("histograms of edge {" + std::to_string(id) + "," + std::to_string(other) + "}");
            }
        }
    }
    return true;
}

Label MergeForest::find(Label id) const
{
    auto it = parent_.find(id);
    while (it != parent_.end()) {
        id = it->second;
        it = parent_.find(id);
    }
    return id;
}

LabelVolume MergeForest::relabel(const LabelVolume& labels) const
{
    std::unordered_map<Label, Label> memo;
    LabelVolume out(labels.dims());
    for (std::size_t i = 0; i < labels.size(); ++i) {
        const Label l = labels[i];
        auto it = memo.find(l);
        if (it == memo.end()) {
            it = memo.emplace(l, find(l)).first;
        }
        out[i] = it->second;
    }
    return out;
}

} // namespace cada
