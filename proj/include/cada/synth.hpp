#pragma once

#include <cstdint>
#include <vector>

#include <nlohmann/json.hpp>

#include "cada/volume.hpp"

namespace cada {

// Parameters of the synthetic EM-like volume generator.
struct SynthParams {
    std::vector<std::size_t> dims{256, 256};
    std::size_t n_cells = 40;
    std::size_t mito_min = 0; // blobs per cell, inclusive range
    std::size_t mito_max = 2;
    double radius_min = 4.0;  // blob semi-axes in voxels
    double radius_max = 7.0;
    // Minimum number of cytoplasm voxels between a blob and the cell membrane.
    std::size_t mito_margin = 3;
    double boundary_blur_sigma = 1.0;
    double noise_sigma = 0.08;
    // Correlation length (Gaussian sigma, voxels) of the noise field.
    double noise_corr = 1.5;
    // Peak boundary-channel response on mitochondrion membranes, relative to
    // cell membranes.
    double mito_membrane = 0.7;
    // Boundary-channel response on the internal membrane crossing each blob.
    double cristae = 0.6;
    // Depth of random dimming along cell membranes; 0 keeps them uniform.
    double membrane_dropout = 0.6;
    // Correlation length of the dimming pattern along membranes.
    double dropout_corr = 4.0;
    std::uint64_t seed = 0;

    void validate() const;
    nlohmann::json to_json() const;
    // Missing keys keep their defaults; unknown keys are rejected.
    static SynthParams from_json(const nlohmann::json& doc);
};

struct SynthVolume {
    LabelVolume cells;          // ground-truth cell ids 1..n
    LabelVolume mito;           // mitochondrion blob ids, 0 outside blobs
    std::vector<Label> blob_cell; // blob_cell[b - 1] = enclosing cell of blob b
    ProbabilityStack channels;  // boundary, cytoplasm, mitochondria, mito_boundary
};

// Voronoi cells of n_cells uniform sites, elliptical mitochondria placed
// strictly inside cells, and blurred/noisy probability channels clipped to
// [0,1]. Byte-identical output for equal parameters.
SynthVolume synth_generate(const SynthParams& p);

// Separable Gaussian blur with clamped borders; sigma <= 0 is the identity.
std::vector<double> gaussian_blur(const std::vector<double>& values, const Dims& dims, double sigma);

} // namespace cada
