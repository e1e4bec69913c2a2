#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "cada/rag.hpp"
#include "cada/rng.hpp"
#include "cada/volume.hpp"

namespace testutil {

using cada::Dims;
using cada::Label;
using cada::LabelVolume;

inline LabelVolume labels_of(std::vector<std::size_t> dims, std::vector<Label> values)
{
    return LabelVolume(Dims(std::move(dims)), std::move(values));
}

inline cada::ChannelGrid grid_of(const Dims& d, std::vector<float> values)
{
    return cada::ChannelGrid(d, std::move(values));
}

inline cada::ChannelGrid random_grid(const Dims& d, cada::SeededRng& rng)
{
    std::vector<float> v(d.voxel_count());
    for (float& x : v) {
        x = static_cast<float>(rng.uniform01());
    }
    return cada::ChannelGrid(d, std::move(v));
}

inline cada::ProbabilityStack random_stack(const Dims& d, const std::vector<std::string>& names, cada::SeededRng& rng)
{
    cada::ProbabilityStack s(d);
    for (const std::string& n : names) {
        s.add(n, random_grid(d, rng));
    }
    return s;
}

inline cada::ProbabilityStack constant_stack(const Dims& d, const std::string& name, float value)
{
    cada::ProbabilityStack s(d);
    s.add(name, cada::ChannelGrid(d, value));
    return s;
}

// Nearest-site labelling with labels 1..n_sites (some may end up unused).
inline LabelVolume random_partition(const Dims& d, std::size_t n_sites, cada::SeededRng& rng)
{
    const std::size_t nd = d.ndim();
    std::vector<std::vector<double>> sites(n_sites, std::vector<double>(nd));
    for (auto& s : sites) {
        for (std::size_t a = 0; a < nd; ++a) {
            s[a] = rng.uniform(0.0, static_cast<double>(d[a]));
        }
    }
    LabelVolume out(d);
    for (std::size_t i = 0; i < d.voxel_count(); ++i) {
        double best = 1e300;
        Label lab = 1;
        for (std::size_t k = 0; k < n_sites; ++k) {
            double dist = 0;
            for (std::size_t a = 0; a < nd; ++a) {
                const double c = static_cast<double>((i / d.stride(a)) % d[a]) + 0.5 - sites[k][a];
                dist += c * c;
            }
            if (dist < best) {
                best = dist;
                lab = static_cast<Label>(k + 1);
            }
        }
        out[i] = lab;
    }
    return out;
}

// Labels drawn independently per voxel from 1..n.
inline LabelVolume random_noise_labels(const Dims& d, std::size_t n, cada::SeededRng& rng)
{
    LabelVolume out(d);
    for (std::size_t i = 0; i < d.voxel_count(); ++i) {
        out[i] = static_cast<Label>(1 + rng.below(n));
    }
    return out;
}

// Face lengths of every adjacent label pair, by direct scan.
inline std::map<std::pair<Label, Label>, std::uint64_t> scan_faces(const LabelVolume& v)
{
    std::map<std::pair<Label, Label>, std::uint64_t> out;
    const Dims& d = v.dims();
    for (std::size_t i = 0; i < v.size(); ++i) {
        for (std::size_t a = 0; a < d.ndim(); ++a) {
            const std::size_t s = d.stride(a);
            if ((i / s) % d[a] + 1 >= d[a]) {
                continue;
            }
            Label x = v[i];
            Label y = v[i + s];
            if (x != y) {
                ++out[{std::min(x, y), std::max(x, y)}];
            }
        }
    }
    return out;
}

} // namespace testutil
