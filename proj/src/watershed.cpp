#include "cada/watershed.hpp"

#include <queue>
#include <tuple>
#include <vector>

namespace cada {

LabelVolume watershed(const ChannelGrid& boundary, double theta_seed)
{
    const Dims& dims = boundary.dims();
    const std::size_t n = boundary.size();
    LabelVolume labels(dims, 0);
    std::vector<std::size_t> nbrs;

    Label next = 0;
    std::vector<std::size_t> stack;
    for (std::size_t i = 0; i < n; ++i) {
        if (labels[i] != 0 || !(boundary[i] < theta_seed)) {
            continue;
        }
        labels[i] = ++next;
        stack.push_back(i);
        while (!stack.empty()) {
            const std::size_t v = stack.back();
            stack.pop_back();
            face_neighbors(dims, v, nbrs);
            for (std::size_t u : nbrs) {
                if (labels[u] == 0 && boundary[u] < theta_seed) {
                    labels[u] = next;
                    stack.push_back(u);
                }
            }
        }
    }
    if (next == 0) {
        throw ValueError("watershed found no seed voxels below " + std::to_string(theta_seed));
    }

    using Item = std::tuple<float, std::size_t, Label>;
    std::priority_queue<Item, std::vector<Item>, std::greater<>> flood;
    for (std::size_t i = 0; i < n; ++i) {
        if (labels[i] == 0) {
            continue;
        }
        face_neighbors(dims, i, nbrs);
        for (std::size_t u : nbrs) {
            if (labels[u] == 0) {
                flood.emplace(boundary[u], u, labels[i]);
            }
        }
    }
    while (!flood.empty()) {
        const auto [p, v, label] = flood.top();
        flood.pop();
        if (labels[v] != 0) {
            continue;
        }
        labels[v] = label;
        face_neighbors(dims, v, nbrs);
        for (std::size_t u : nbrs) {
            if (labels[u] == 0) {
                flood.emplace(boundary[u], u, label);
            }
        }
    }
    return labels;
}

} // namespace cada
