#include "cada/context.hpp"

#include "cada/predictor.hpp"

namespace cada {

void ContextConfig::validate() const
{
    for (const auto& [name, v] : {std::pair{"theta_mito", theta_mito}, {"delta_c", delta_c}, {"delta_m", delta_m}}) {
        if (!(v >= 0.0 && v <= 1.0)) {
            throw ValueError(std::string(name) + " must lie in [0,1], got " + std::to_string(v));
        }
    }
    if (channels.empty()) {
        throw ValueError("channel list is empty");
    }
}

nlohmann::json ContextConfig::to_json() const
{
    return {{"theta_mito", theta_mito}, {"delta_c", delta_c}, {"delta_m", delta_m},
            {"policy", to_string(policy)}, {"context", context},   {"lazy", lazy},
            {"seed", seed},             {"channels", channels}};
}

ContextConfig ContextConfig::from_json(const nlohmann::json& doc)
{
    ContextConfig c;
    try {
        for (const auto& [key, value] : doc.items()) {
            if (key == "theta_mito") {
                c.theta_mito = value.get<double>();
            } else if (key == "delta_c") {
                c.delta_c = value.get<double>();
            } else if (key == "delta_m") {
                c.delta_m = value.get<double>();
            } else if (key == "policy") {
                c.policy = parse_policy(value.get<std::string>());
            } else if (key == "context") {
                c.context = value.get<bool>();
            } else if (key == "lazy") {
                c.lazy = value.get<bool>();
            } else if (key == "seed") {
                c.seed = value.get<std::uint64_t>();
            } else if (key == "channels") {
                c.channels = value.get<std::vector<std::string>>();
            } else {
                throw ValueError("unknown pipeline parameter '" + key + "'");
            }
        }
    } catch (const nlohmann::json::exception& e) {
        throw ValueError(std::string("bad pipeline parameters: ") + e.what());
    }
    c.validate();
    return c;
}

void partition_superpixels(RegionGraph& g, double theta_mito)
{
    const auto c = g.channel_index(channel::kMito);
    if (!c) {
        throw ValueError("graph has no '" + std::string(channel::kMito) + "' channel");
    }
    std::vector<std::pair<Label, RegionType>> tags;
    tags.reserve(g.node_count());
    for (const auto& [id, n] : g.nodes()) {
        tags.emplace_back(id, n.channel_hists[*c].mean() >= theta_mito ? RegionType::Mito : RegionType::Cyto);
    }
    for (const auto& [id, t] : tags) {
        g.set_type(id, t);
    }
}

bool is_cyto_cyto(const RegionGraph& g, const BoundaryEdge& e)
{
    return g.node(e.lo).type == RegionType::Cyto && g.node(e.hi).type == RegionType::Cyto;
}

bool is_mito_cyto(const RegionGraph& g, const BoundaryEdge& e)
{
    return (g.node(e.lo).type == RegionType::Mito) != (g.node(e.hi).type == RegionType::Mito);
}

double overlap_ratio(const RegionGraph& g, const BoundaryEdge& e)
{
    if (!is_mito_cyto(g, e)) {
        throw ValueError("overlap ratio needs exactly one mitochondrion endpoint (edge " + std::to_string(e.id) + ")");
    }
    const Label m = g.node(e.lo).type == RegionType::Mito ? e.lo : e.hi;
    std::uint64_t total = 0;
    for (const auto& [nb, eid] : g.node(m).adjacency) {
        total += g.edge(eid).face_length;
    }
    return static_cast<double>(e.face_length) / static_cast<double>(total);
}

double mito_confidence(const RegionGraph& g, const BoundaryEdge& e)
{
    return 1.0 - overlap_ratio(g, e);
}

MergeTrace agglomerate_mito(RegionGraph& g, double delta_m, bool lazy, const AgglomHooks& hooks)
{
    AgglomHooks h = hooks;
    h.candidate = is_mito_cyto;
    AgglomConfig cfg;
    cfg.delta = delta_m;
    cfg.policy = Policy::Delayed;
    cfg.lazy_updates = lazy;
    return agglomerate_delayed(g, mito_confidence, cfg, h);
}

PipelineResult run_context_pipeline(const LabelVolume& labels, const ProbabilityStack& probs,
                                    const ConfidenceFn& h_c, const ContextConfig& cfg, const PipelineHooks& hooks)
{
    cfg.validate();
    RegionGraph g = build_rag(labels, probs);

    AgglomConfig phase1;
    phase1.delta = cfg.delta_c;
    phase1.policy = cfg.policy;
    phase1.lazy_updates = cfg.lazy;

    PipelineResult out;
    if (!cfg.context) {
        AgglomHooks h = hooks.cyto;
        h.candidate = nullptr;
        out.cyto = agglomerate(g, h_c, phase1, h);
    } else {
        partition_superpixels(g, cfg.theta_mito);
        AgglomHooks h = hooks.cyto;
        h.candidate = is_cyto_cyto;
        out.cyto = agglomerate(g, h_c, phase1, h);
        out.mito = agglomerate_mito(g, cfg.delta_m, cfg.lazy, hooks.mito);
    }
    out.segmentation = relabel(labels, {&out.cyto, &out.mito});
    return out;
}

PipelineResult run_context_pipeline(const LabelVolume& labels, const ProbabilityStack& probs, const Forest& forest,
                                    const ContextConfig& cfg, const PipelineHooks& hooks)
{
    return run_context_pipeline(labels, probs, forest_confidence(forest), cfg, hooks);
}

} // namespace cada
