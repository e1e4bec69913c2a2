#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "cada/agglomerate.hpp"
#include "cada/forest.hpp"
#include "cada/rag.hpp"

namespace cada {

struct ContextConfig {
    double theta_mito = 0.5;
    double delta_c = 0.2;
    // Mitochondria are absorbed while 1 - rho <= delta_m.
    double delta_m = 0.8;
    Policy policy = Policy::Delayed;
    // Off: a single phase over every edge with h_c, no partition.
    bool context = true;
    bool lazy = false;
    std::uint64_t seed = 0;
    std::vector<std::string> channels{std::string(channel::kBoundary), std::string(channel::kCytoplasm),
                                      std::string(channel::kMito), std::string(channel::kMitoBoundary)};

    void validate() const;
    nlohmann::json to_json() const;
    // Missing keys keep their defaults; unknown keys are rejected.
    static ContextConfig from_json(const nlohmann::json& doc);
};

// Tags a region Mito iff the mean of its mito-channel samples is >= theta_mito.
// Throws ValueError if the graph has no mito channel.
void partition_superpixels(RegionGraph& g, double theta_mito);

// Face length of e over the total face length of its Mito endpoint.
// Throws ValueError unless exactly one endpoint is Mito.
double overlap_ratio(const RegionGraph& g, const BoundaryEdge& e);

// h_m = 1 - rho.
double mito_confidence(const RegionGraph& g, const BoundaryEdge& e);

bool is_cyto_cyto(const RegionGraph& g, const BoundaryEdge& e);
bool is_mito_cyto(const RegionGraph& g, const BoundaryEdge& e);

// Delayed agglomeration over Mito-Cyto edges with h_m. A merged region is
// Cyto, so faces it inherits from an absorbed mitochondrion become candidates.
// `hooks.candidate` is ignored; the other hooks are forwarded.
MergeTrace agglomerate_mito(RegionGraph& g, double delta_m, bool lazy = false, const AgglomHooks& hooks = {});

struct PipelineResult {
    LabelVolume segmentation;
    MergeTrace cyto;
    MergeTrace mito; // empty when context is off
};

// Optional per-phase hooks, mostly for tests and instrumentation.
struct PipelineHooks {
    AgglomHooks cyto;
    AgglomHooks mito;
};

// Build the graph, partition, phase 1 on Cyto-Cyto edges with h_c up to
// delta_c, then phase 2 with h_m up to delta_m; returns the relabelled volume.
PipelineResult run_context_pipeline(const LabelVolume& labels, const ProbabilityStack& probs,
                                    const ConfidenceFn& h_c, const ContextConfig& cfg,
                                    const PipelineHooks& hooks = {});

PipelineResult run_context_pipeline(const LabelVolume& labels, const ProbabilityStack& probs,
                                    const Forest& forest, const ContextConfig& cfg,
                                    const PipelineHooks& hooks = {});

} // namespace cada
