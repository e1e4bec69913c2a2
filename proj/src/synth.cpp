#include "cada/synth.hpp"

#include <algorithm>
#include <cmath>

#include "cada/rng.hpp"

namespace cada {

void SynthParams::validate() const
{
    Dims d(dims); // validates extent count and positivity
    if (n_cells == 0) {
        throw ValueError("n_cells must be positive");
    }
    if (mito_min > mito_max) {
        throw ValueError("mito_min exceeds mito_max");
    }
    if (!(radius_min > 0.0) || radius_min > radius_max) {
        throw ValueError("mito radius range must satisfy 0 < radius_min <= radius_max");
    }
    if (!(boundary_blur_sigma >= 0.0) || !(noise_sigma >= 0.0) || !(noise_corr >= 0.0) || !(dropout_corr >= 0.0)) {
        throw ValueError("blur sigma, noise sigma and correlation lengths must be non-negative");
    }
    if (!(cristae >= 0.0 && cristae <= 1.0)) {
        throw ValueError("cristae must lie in [0,1]");
    }
    if (!(mito_membrane >= 0.0 && mito_membrane <= 1.0) || !(membrane_dropout >= 0.0 && membrane_dropout <= 1.0)) {
        throw ValueError("mito_membrane and membrane_dropout must lie in [0,1]");
    }
}

nlohmann::json SynthParams::to_json() const
{
    return {{"dims", dims},
            {"n_cells", n_cells},
            {"mito_min", mito_min},
            {"mito_max", mito_max},
            {"radius_min", radius_min},
            {"radius_max", radius_max},
            {"mito_margin", mito_margin},
            {"boundary_blur_sigma", boundary_blur_sigma},
            {"noise_sigma", noise_sigma},
            {"noise_corr", noise_corr},
            {"mito_membrane", mito_membrane},
            {"cristae", cristae},
            {"membrane_dropout", membrane_dropout},
            {"dropout_corr", dropout_corr},
            {"seed", seed}};
}

SynthParams SynthParams::from_json(const nlohmann::json& doc)
{
    SynthParams p;
    try {
        for (const auto& [key, value] : doc.items()) {
            if (key == "dims") {
                p.dims = value.get<std::vector<std::size_t>>();
            } else if (key == "n_cells") {
                p.n_cells = value.get<std::size_t>();
            } else if (key == "mito_min") {
                p.mito_min = value.get<std::size_t>();
            } else if (key == "mito_max") {
                p.mito_max = value.get<std::size_t>();
            } else if (key == "radius_min") {
                p.radius_min = value.get<double>();
            } else if (key == "radius_max") {
                p.radius_max = value.get<double>();
            } else if (key == "mito_margin") {
                p.mito_margin = value.get<std::size_t>();
            } else if (key == "boundary_blur_sigma") {
                p.boundary_blur_sigma = value.get<double>();
            } else if (key == "noise_sigma") {
                p.noise_sigma = value.get<double>();
            } else if (key == "noise_corr") {
                p.noise_corr = value.get<double>();
            } else if (key == "mito_membrane") {
                p.mito_membrane = value.get<double>();
            } else if (key == "cristae") {
                p.cristae = value.get<double>();
            } else if (key == "membrane_dropout") {
                p.membrane_dropout = value.get<double>();
            } else if (key == "dropout_corr") {
                p.dropout_corr = value.get<double>();
            } else if (key == "seed") {
                p.seed = value.get<std::uint64_t>();
            } else {
                throw ValueError("unknown generator parameter '" + key + "'");
            }
        }
    } catch (const nlohmann::json::exception& e) {
        throw ValueError(std::string("bad generator parameters: ") + e.what());
    }
    p.validate();
    return p;
}

std::vector<double> gaussian_blur(const std::vector<double>& values, const Dims& dims, double sigma)
{
    if (sigma <= 0.0) {
        return values;
    }
    const int radius = static_cast<int>(std::ceil(3.0 * sigma));
    std::vector<double> kernel(2 * radius + 1);
    double norm = 0.0;
    for (int k = -radius; k <= radius; ++k) {
        kernel[k + radius] = std::exp(-0.5 * k * k / (sigma * sigma));
        norm += kernel[k + radius];
    }
    for (double& w : kernel) {
        w /= norm;
    }

    std::vector<double> cur = values;
    std::vector<double> next(values.size());
    for (std::size_t axis = 0; axis < dims.ndim(); ++axis) {
        const std::size_t extent = dims[axis];
        if (extent < 2) {
            continue;
        }
        const std::size_t stride = dims.stride(axis);
        const auto last = static_cast<long>(extent) - 1;
        for (std::size_t i = 0; i < cur.size(); ++i) {
            const auto coord = static_cast<long>((i / stride) % extent);
            const std::size_t base = i - static_cast<std::size_t>(coord) * stride;
            double acc = 0.0;
            for (int k = -radius; k <= radius; ++k) {
                const long c = std::clamp(coord + k, 0L, last);
                acc += kernel[k + radius] * cur[base + static_cast<std::size_t>(c) * stride];
            }
            next[i] = acc;
        }
        std::swap(cur, next);
    }
    return cur;
}

namespace {

// Zero-mean, unit-variance Gaussian field with correlation length `corr`.
std::vector<double> smooth_field(SeededRng& rng, const Dims& dims, double corr)
{
    std::vector<double> f(dims.voxel_count());
    for (double& v : f) {
        v = rng.normal();
    }
    f = gaussian_blur(f, dims, corr);
    double mean = 0.0;
    for (double v : f) {
        mean += v;
    }
    mean /= static_cast<double>(f.size());
    double var = 0.0;
    for (double v : f) {
        var += (v - mean) * (v - mean);
    }
    const double sd = std::sqrt(var / static_cast<double>(f.size()));
    for (double& v : f) {
        v = sd > 0.0 ? (v - mean) / sd : 0.0;
    }
    return f;
}

double peak(const std::vector<double>& v)
{
    double m = 0.0;
    for (double x : v) {
        m = std::max(m, x);
    }
    return m;
}

ChannelGrid to_channel(const Dims& dims, const std::vector<double>& v)
{
    std::vector<float> out(v.size());
    for (std::size_t i = 0; i < v.size(); ++i) {
        out[i] = static_cast<float>(std::clamp(v[i], 0.0, 1.0));
    }
    return ChannelGrid(dims, std::move(out));
}

std::vector<std::size_t> coords_of(const Dims& dims, std::size_t i)
{
    std::vector<std::size_t> c(dims.ndim());
    for (std::size_t a = dims.ndim(); a-- > 0;) {
        c[a] = i % dims[a];
        i /= dims[a];
    }
    return c;
}

} // namespace

SynthVolume synth_generate(const SynthParams& p)
{
    p.validate();
    const Dims dims(p.dims);
    const std::size_t n = dims.voxel_count();
    const std::size_t nd = dims.ndim();
    SeededRng rng(p.seed);

    // Voronoi partition; ties go to the lower site index.
    std::vector<std::vector<double>> sites(p.n_cells, std::vector<double>(nd));
    for (auto& s : sites) {
        for (std::size_t a = 0; a < nd; ++a) {
            s[a] = rng.uniform(0.0, static_cast<double>(dims[a]));
        }
    }
    SynthVolume out;
    out.cells = LabelVolume(dims, 0);
    for (std::size_t i = 0; i < n; ++i) {
        const auto c = coords_of(dims, i);
        double best = std::numeric_limits<double>::infinity();
        std::size_t owner = 0;
        for (std::size_t s = 0; s < sites.size(); ++s) {
            double d2 = 0.0;
            for (std::size_t a = 0; a < nd; ++a) {
                const double d = static_cast<double>(c[a]) + 0.5 - sites[s][a];
                d2 += d * d;
            }
            if (d2 < best) {
                best = d2;
                owner = s;
            }
        }
        out.cells[i] = static_cast<Label>(owner + 1);
    }

    std::vector<char> membrane(n, 0);
    for_each_face_pair(dims, [&](std::size_t i, std::size_t j) {
        if (out.cells[i] != out.cells[j]) {
            membrane[i] = membrane[j] = 1;
        }
    });

    // City-block distance to the nearest membrane voxel.
    std::vector<std::size_t> to_membrane(n, std::numeric_limits<std::size_t>::max());
    {
        std::vector<std::size_t> frontier;
        for (std::size_t i = 0; i < n; ++i) {
            if (membrane[i]) {
                to_membrane[i] = 0;
                frontier.push_back(i);
            }
        }
        std::vector<std::size_t> next_frontier;
        std::vector<std::size_t> nb;
        while (!frontier.empty()) {
            next_frontier.clear();
            for (std::size_t v : frontier) {
                face_neighbors(dims, v, nb);
                for (std::size_t u : nb) {
                    if (to_membrane[u] > to_membrane[v] + 1) {
                        to_membrane[u] = to_membrane[v] + 1;
                        next_frontier.push_back(u);
                    }
                }
            }
            std::swap(frontier, next_frontier);
        }
    }

    // Mitochondria: ellipsoids strictly inside one cell, at least mito_margin
    // voxels clear of membranes and one voxel clear of other blobs.
    std::vector<std::vector<std::size_t>> cell_voxels(p.n_cells + 1);
    for (std::size_t i = 0; i < n; ++i) {
        cell_voxels[out.cells[i]].push_back(i);
    }
    out.mito = LabelVolume(dims, 0);
    std::vector<std::size_t> nbrs;
    std::vector<std::size_t> blob;
    Label next_blob = 0;
    constexpr int kTries = 30;
    for (Label cell = 1; cell <= p.n_cells; ++cell) {
        const auto& voxels = cell_voxels[cell];
        const auto count = static_cast<std::size_t>(
            rng.between(static_cast<std::int64_t>(p.mito_min), static_cast<std::int64_t>(p.mito_max)));
        for (std::size_t b = 0; b < count && !voxels.empty(); ++b) {
            std::vector<double> radii(nd);
            for (double& r : radii) {
                r = rng.uniform(p.radius_min, p.radius_max);
            }
            if (nd == 3 && dims[0] == 1) {
                radii[0] = 0.5;
            }
            bool placed = false;
            while (!placed && *std::max_element(radii.begin(), radii.end()) >= 1.0) {
                for (int t = 0; t < kTries && !placed; ++t) {
                    const auto center = coords_of(dims, voxels[rng.below(voxels.size())]);
                    blob.clear();
                    bool ok = true;
                    std::vector<long> lo(nd);
                    std::vector<long> hi(nd);
                    for (std::size_t a = 0; a < nd; ++a) {
                        lo[a] = static_cast<long>(center[a]) - static_cast<long>(std::floor(radii[a]));
                        hi[a] = static_cast<long>(center[a]) + static_cast<long>(std::floor(radii[a]));
                        if (lo[a] < 0 || hi[a] >= static_cast<long>(dims[a])) {
                            ok = false;
                        }
                    }
                    if (!ok) {
                        continue;
                    }
                    std::vector<long> c(lo);
                    for (;;) {
                        double r2 = 0.0;
                        std::size_t idx = 0;
                        for (std::size_t a = 0; a < nd; ++a) {
                            const double d = static_cast<double>(c[a] - static_cast<long>(center[a])) /
                                             std::max(radii[a], 0.5);
                            r2 += d * d;
                            idx = idx * dims[a] + static_cast<std::size_t>(c[a]);
                        }
                        if (r2 <= 1.0) {
                            blob.push_back(idx);
                        }
                        std::size_t a = nd;
                        while (a-- > 0) {
                            if (++c[a] <= hi[a]) {
                                break;
                            }
                            c[a] = lo[a];
                        }
                        if (a == static_cast<std::size_t>(-1)) {
                            break;
                        }
                    }
                    for (std::size_t v : blob) {
                        if (out.cells[v] != cell || to_membrane[v] <= p.mito_margin || out.mito[v] != 0) {
                            ok = false;
                            break;
                        }
                        face_neighbors(dims, v, nbrs);
                        if (nbrs.size() < 2 * nd) {
                            ok = false; // touches the image border
                            break;
                        }
                        for (std::size_t u : nbrs) {
                            if (out.cells[u] != cell || membrane[u] || out.mito[u] != 0) {
                                ok = false;
                                break;
                            }
                        }
                        if (!ok) {
                            break;
                        }
                    }
                    if (ok && !blob.empty()) {
                        ++next_blob;
                        for (std::size_t v : blob) {
                            out.mito[v] = next_blob;
                        }
                        out.blob_cell.push_back(cell);
                        placed = true;
                    }
                }
                if (!placed) {
                    for (double& r : radii) {
                        r *= 0.8;
                    }
                }
            }
        }
    }

    std::vector<double> blob_ind(n, 0.0);
    std::vector<double> perim_ind(n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        if (out.mito[i] == 0) {
            continue;
        }
        blob_ind[i] = 1.0;
        face_neighbors(dims, i, nbrs);
        for (std::size_t u : nbrs) {
            if (out.mito[u] != out.mito[i]) {
                perim_ind[i] = 1.0;
            }
        }
    }

    // Cristae: one flat membrane through each blob's centroid in a random
    // orientation, leaving the blob perimeter untouched.
    std::vector<double> cristae_ind(n, 0.0);
    {
        std::vector<std::vector<double>> centroid(out.blob_cell.size(), std::vector<double>(nd, 0.0));
        std::vector<double> size(out.blob_cell.size(), 0.0);
        for (std::size_t i = 0; i < n; ++i) {
            if (out.mito[i] != 0) {
                const auto c = coords_of(dims, i);
                for (std::size_t a = 0; a < nd; ++a) {
                    centroid[out.mito[i] - 1][a] += static_cast<double>(c[a]);
                }
                size[out.mito[i] - 1] += 1.0;
            }
        }
        std::vector<std::vector<double>> normal(out.blob_cell.size(), std::vector<double>(nd, 0.0));
        for (std::size_t b = 0; b < normal.size(); ++b) {
            double len = 0.0;
            while (len < 1e-9) {
                len = 0.0;
                for (double& x : normal[b]) {
                    x = rng.normal();
                    len += x * x;
                }
                len = std::sqrt(len);
            }
            for (std::size_t a = 0; a < nd; ++a) {
                normal[b][a] /= len;
                centroid[b][a] /= size[b];
            }
        }
        for (std::size_t i = 0; i < n; ++i) {
            if (out.mito[i] == 0 || perim_ind[i] != 0.0) {
                continue;
            }
            const std::size_t b = out.mito[i] - 1;
            const auto c = coords_of(dims, i);
            double d = 0.0;
            for (std::size_t a = 0; a < nd; ++a) {
                d += (static_cast<double>(c[a]) - centroid[b][a]) * normal[b][a];
            }
            if (std::abs(d) < 0.5) {
                cristae_ind[i] = 1.0;
            }
        }
    }

    // Cell membranes, dimmed along random stretches.
    const std::vector<double> dropout = smooth_field(rng, dims, p.dropout_corr);
    std::vector<double> mem_full(n, 0.0);
    std::vector<double> mem(n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        if (membrane[i]) {
            mem_full[i] = 1.0;
            mem[i] = 1.0 - p.membrane_dropout * std::clamp(dropout[i], 0.0, 1.0);
        }
    }
    const double sigma = p.boundary_blur_sigma;
    const double mem_peak = peak(gaussian_blur(mem_full, dims, sigma));
    mem = gaussian_blur(mem, dims, sigma);
    std::vector<double> perim = gaussian_blur(perim_ind, dims, sigma);
    const double perim_peak = peak(perim);
    const std::vector<double> cristae = gaussian_blur(cristae_ind, dims, sigma);
    const double cristae_peak = peak(cristae);

    const std::vector<double> noise_b = smooth_field(rng, dims, p.noise_corr);
    const std::vector<double> noise_m = smooth_field(rng, dims, p.noise_corr);
    const std::vector<double> noise_mb = smooth_field(rng, dims, p.noise_corr);
    const std::vector<double> mito_blur = gaussian_blur(blob_ind, dims, 0.5 * sigma);

    std::vector<double> boundary(n);
    std::vector<double> mito(n);
    std::vector<double> mito_boundary(n);
    std::vector<double> cyto(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double m = mem_peak > 0.0 ? mem[i] / mem_peak : 0.0;
        const double pm = perim_peak > 0.0 ? perim[i] / perim_peak : 0.0;
        const double cr = cristae_peak > 0.0 ? cristae[i] / cristae_peak : 0.0;
        // Interior texture sits around 1.5 sigma so that low-probability
        // basins are plentiful but disconnected.
        boundary[i] = std::clamp(m + p.mito_membrane * pm + p.cristae * cr + p.noise_sigma * (1.5 + noise_b[i]), 0.0, 1.0);
        mito[i] = std::clamp(mito_blur[i] + p.noise_sigma * noise_m[i], 0.0, 1.0);
        mito_boundary[i] = std::clamp(pm + p.noise_sigma * noise_mb[i], 0.0, 1.0);
        cyto[i] = std::clamp(1.0 - (boundary[i] + mito[i]), 0.0, 1.0);
    }
    out.channels = ProbabilityStack(dims);
    out.channels.add(std::string(channel::kBoundary), to_channel(dims, boundary));
    out.channels.add(std::string(channel::kCytoplasm), to_channel(dims, cyto));
    out.channels.add(std::string(channel::kMito), to_channel(dims, mito));
    out.channels.add(std::string(channel::kMitoBoundary), to_channel(dims, mito_boundary));
    return out;
}

} // namespace cada
