#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "cada/volume.hpp"

namespace cada {

// SEGV volume file, all integers little-endian:
//
//   offset  size      field
//   0       4         magic "SEGV"
//   4       1         format version (1)
//   5       1         dtype: 0 = uint32 labels, 1 = float32 values
//   6       1         dimension count n (2 or 3)
//   7       8 * n     extents, uint64, slowest axis first
//   7+8n    4 * N     payload, row-major, N = product of extents
enum class DType : std::uint8_t { Labels = 0, Float32 = 1 };

inline constexpr std::uint8_t kVolumeFormatVersion = 1;

struct VolumeHeader {
    DType dtype = DType::Labels;
    Dims dims;
};

std::vector<std::uint8_t> encode_volume(const LabelVolume& v);
std::vector<std::uint8_t> encode_volume(const ChannelGrid& v);
// Throws FormatError on bad magic, version, dtype, extents or payload size.
std::variant<LabelVolume, ChannelGrid> decode_volume(std::span<const std::uint8_t> bytes);

void write_volume(const std::string& path, const LabelVolume& v);
void write_volume(const std::string& path, const ChannelGrid& v);
std::variant<LabelVolume, ChannelGrid> read_volume(const std::string& path);
// Typed readers; FormatError if the file holds the other dtype.
LabelVolume read_labels(const std::string& path);
ChannelGrid read_channel(const std::string& path);

// Channel stacks live in a directory as one <name>.segv file per channel.
void write_stack(const std::string& dir, const ProbabilityStack& stack);
ProbabilityStack read_stack(const std::string& dir, const std::vector<std::string>& names);

std::vector<std::uint8_t> read_file(const std::string& path);
void write_file(const std::string& path, std::span<const std::uint8_t> bytes);
void write_text(const std::string& path, const std::string& text);

} // namespace cada
