#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "cada/errors.hpp"

namespace cada {

using Label = std::uint32_t;

// Extents of a 2D or 3D grid, slowest-varying axis first (z, y, x).
// Storage is row-major: the last extent is contiguous.
class Dims {
public:
    Dims() = default;
    explicit Dims(std::vector<std::size_t> extents);

    std::size_t ndim() const { return extents_.size(); }
    std::size_t operator[](std::size_t axis) const { return extents_[axis]; }
    const std::vector<std::size_t>& extents() const { return extents_; }
    std::size_t voxel_count() const;
    std::size_t stride(std::size_t axis) const;

    std::string to_string() const;

    bool operator==(const Dims&) const = default;

private:
    std::vector<std::size_t> extents_;
};

template <typename T>
class Grid {
public:
    Grid() = default;
    explicit Grid(Dims dims, T fill = T{}) : dims_(std::move(dims)), data_(dims_.voxel_count(), fill) {}
    Grid(Dims dims, std::vector<T> data) : dims_(std::move(dims)), data_(std::move(data))
    {
        if (data_.size() != dims_.voxel_count()) {
            throw ShapeError("grid payload has " + std::to_string(data_.size()) +
                             " values, extents " + dims_.to_string() + " need " +
                             std::to_string(dims_.voxel_count()));
        }
    }

    const Dims& dims() const { return dims_; }
    std::size_t size() const { return data_.size(); }

    T& operator[](std::size_t i) { return data_[i]; }
    const T& operator[](std::size_t i) const { return data_[i]; }

    std::vector<T>& data() { return data_; }
    const std::vector<T>& data() const { return data_; }

    bool operator==(const Grid&) const = default;

private:
    Dims dims_;
    std::vector<T> data_;
};

using LabelVolume = Grid<Label>;
using ChannelGrid = Grid<float>;

namespace channel {
inline constexpr std::string_view kBoundary = "boundary";
inline constexpr std::string_view kCytoplasm = "cytoplasm";
inline constexpr std::string_view kMito = "mitochondria";
inline constexpr std::string_view kMitoBoundary = "mito_boundary";
} // namespace channel

// Named per-voxel probability channels sharing one set of extents.
class ProbabilityStack {
public:
    ProbabilityStack() = default;
    explicit ProbabilityStack(Dims dims) : dims_(std::move(dims)) {}

    // Rejects duplicate names, mismatched extents and values outside [0,1].
    void add(std::string name, ChannelGrid grid);

    const Dims& dims() const { return dims_; }
    std::size_t channel_count() const { return grids_.size(); }
    const std::vector<std::string>& names() const { return names_; }
    const ChannelGrid& channel(std::size_t i) const { return grids_[i]; }
    const ChannelGrid& channel(std::string_view name) const;
    std::optional<std::size_t> index_of(std::string_view name) const;

private:
    Dims dims_;
    std::vector<std::string> names_;
    std::vector<ChannelGrid> grids_;
};

// Calls fn(i, j) for every face-adjacent voxel pair (i < j): 4-neighborhood in
// 2D, 6-neighborhood in 3D. Pairs are visited axis by axis in index order.
template <typename Fn>
void for_each_face_pair(const Dims& dims, Fn&& fn)
{
    const std::size_t n = dims.voxel_count();
    for (std::size_t axis = 0; axis < dims.ndim(); ++axis) {
        const std::size_t stride = dims.stride(axis);
        const std::size_t extent = dims[axis];
        for (std::size_t i = 0; i < n; ++i) {
            if ((i / stride) % extent + 1 < extent) {
                fn(i, i + stride);
            }
        }
    }
}

// Face neighbors of voxel i, appended to out (cleared first).
void face_neighbors(const Dims& dims, std::size_t i, std::vector<std::size_t>& out);

} // namespace cada
