#include "cada/volume.hpp"

#include <algorithm>

namespace cada {

Dims::Dims(std::vector<std::size_t> extents) : extents_(std::move(extents))
{
    if (extents_.size() != 2 && extents_.size() != 3) {
        throw ShapeError("volumes must be 2D or 3D, got " + std::to_string(extents_.size()) + " extents");
    }
    for (std::size_t e : extents_) {
        if (e == 0) {
            throw ShapeError("extents must be positive: " + to_string());
        }
    }
}

std::size_t Dims::voxel_count() const
{
    if (extents_.empty()) {
        return 0;
    }
    std::size_t n = 1;
    for (std::size_t e : extents_) {
        n *= e;
    }
    return n;
}

std::size_t Dims::stride(std::size_t axis) const
{
    std::size_t s = 1;
    for (std::size_t a = axis + 1; a < extents_.size(); ++a) {
        s *= extents_[a];
    }
    return s;
}

std::string Dims::to_string() const
{
    std::string s = "(";
    for (std::size_t i = 0; i < extents_.size(); ++i) {
        if (i) {
            s += ",";
        }
        s += std::to_string(extents_[i]);
    }
    return s + ")";
}

void face_neighbors(const Dims& dims, std::size_t i, std::vector<std::size_t>& out)
{
    out.clear();
    for (std::size_t axis = 0; axis < dims.ndim(); ++axis) {
        const std::size_t stride = dims.stride(axis);
        const std::size_t coord = (i / stride) % dims[axis];
        if (coord > 0) {
            out.push_back(i - stride);
        }
        if (coord + 1 < dims[axis]) {
            out.push_back(i + stride);
        }
    }
}

void ProbabilityStack::add(std::string name, ChannelGrid grid)
{
    if (grids_.empty() && dims_.ndim() == 0) {
        dims_ = grid.dims();
    }
    if (!(grid.dims() == dims_)) {
        throw ShapeError("channel '" + name + "' has extents " + grid.dims().to_string() + ", expected " +
                         dims_.to_string());
    }
    if (index_of(name)) {
        throw ValueError("duplicate channel name '" + name + "'");
    }
    const auto bad = std::find_if(grid.data().begin(), grid.data().end(),
                                  [](float v) { return !(v >= 0.0f && v <= 1.0f); });
    if (bad != grid.data().end()) {
        throw ValueError("channel '" + name + "' has value " + std::to_string(*bad) + " outside [0,1]");
    }
    names_.push_back(std::move(name));
    grids_.push_back(std::move(grid));
}

const ChannelGrid& ProbabilityStack::channel(std::string_view name) const
{
    auto idx = index_of(name);
    if (!idx) {
        throw ShapeError("missing channel '" + std::string(name) + "'");
    }
    return grids_[*idx];
}

std::optional<std::size_t> ProbabilityStack::index_of(std::string_view name) const
{
    for (std::size_t i = 0; i < names_.size(); ++i) {
        if (names_[i] == name) {
            return i;
        }
    }
    return std::nullopt;
}

} // namespace cada
