#include "cada/io.hpp"

#include <bit>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iterator>

namespace cada {

namespace {

void put_u64(std::vector<std::uint8_t>& out, std::uint64_t v)
{
    for (int b = 0; b < 8; ++b) {
        out.push_back(static_cast<std::uint8_t>(v >> (8 * b)));
    }
}

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v)
{
    for (int b = 0; b < 4; ++b) {
        out.push_back(static_cast<std::uint8_t>(v >> (8 * b)));
    }
}

std::uint64_t get_u64(const std::uint8_t* p)
{
    std::uint64_t v = 0;
    for (int b = 7; b >= 0; --b) {
        v = (v << 8) | p[b];
    }
    return v;
}

std::uint32_t get_u32(const std::uint8_t* p)
{
    return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
           (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}

std::vector<std::uint8_t> header(DType dtype, const Dims& dims)
{
    std::vector<std::uint8_t> out{'S', 'E', 'G', 'V', kVolumeFormatVersion, static_cast<std::uint8_t>(dtype),
                                  static_cast<std::uint8_t>(dims.ndim())};
    for (std::size_t e : dims.extents()) {
        put_u64(out, e);
    }
    return out;
}

} // namespace

std::vector<std::uint8_t> encode_volume(const LabelVolume& v)
{
    std::vector<std::uint8_t> out = header(DType::Labels, v.dims());
    out.reserve(out.size() + 4 * v.size());
    for (Label l : v.data()) {
        put_u32(out, l);
    }
    return out;
}

std::vector<std::uint8_t> encode_volume(const ChannelGrid& v)
{
    std::vector<std::uint8_t> out = header(DType::Float32, v.dims());
    out.reserve(out.size() + 4 * v.size());
    for (float f : v.data()) {
        put_u32(out, std::bit_cast<std::uint32_t>(f));
    }
    return out;
}

std::variant<LabelVolume, ChannelGrid> decode_volume(std::span<const std::uint8_t> bytes)
{
    if (bytes.size() < 7 || std::memcmp(bytes.data(), "SEGV", 4) != 0) {
        throw FormatError("not a SEGV volume (bad magic)");
    }
    if (bytes[4] != kVolumeFormatVersion) {
        throw FormatError("unsupported SEGV version " + std::to_string(bytes[4]));
    }
    const std::uint8_t dtype = bytes[5];
    if (dtype > 1) {
        throw FormatError("unknown SEGV dtype code " + std::to_string(dtype));
    }
    const std::size_t ndim = bytes[6];
    if (ndim != 2 && ndim != 3) {
        throw FormatError("SEGV dimension count must be 2 or 3, got " + std::to_string(ndim));
    }
    if (bytes.size() < 7 + 8 * ndim) {
        throw FormatError("truncated SEGV header");
    }
    std::vector<std::size_t> extents(ndim);
    std::uint64_t n = 1;
    for (std::size_t a = 0; a < ndim; ++a) {
        const std::uint64_t e = get_u64(bytes.data() + 7 + 8 * a);
        if (e == 0 || e > (1ULL << 40) || n > (1ULL << 40) / e) {
            throw FormatError("invalid SEGV extent " + std::to_string(e));
        }
        extents[a] = static_cast<std::size_t>(e);
        n *= e;
    }
    const std::size_t offset = 7 + 8 * ndim;
    if (bytes.size() - offset != 4 * n) {
        throw FormatError("SEGV payload holds " + std::to_string(bytes.size() - offset) + " bytes, expected " +
                          std::to_string(4 * n));
    }
    Dims dims(std::move(extents));
    const std::uint8_t* p = bytes.data() + offset;
    if (static_cast<DType>(dtype) == DType::Labels) {
        std::vector<Label> data(n);
        for (std::size_t i = 0; i < n; ++i) {
            data[i] = get_u32(p + 4 * i);
        }
        return LabelVolume(std::move(dims), std::move(data));
    }
    std::vector<float> data(n);
    for (std::size_t i = 0; i < n; ++i) {
        data[i] = std::bit_cast<float>(get_u32(p + 4 * i));
    }
    return ChannelGrid(std::move(dims), std::move(data));
}

std::vector<std::uint8_t> read_file(const std::string& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw IoError("cannot open '" + path + "' for reading");
    }
    return std::vector<std::uint8_t>(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

void write_file(const std::string& path, std::span<const std::uint8_t> bytes)
{
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) {
        throw IoError("cannot open '" + path + "' for writing");
    }
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out) {
        throw IoError("failed writing '" + path + "'");
    }
}

void write_text(const std::string& path, const std::string& text)
{
    write_file(path, std::span(reinterpret_cast<const std::uint8_t*>(text.data()), text.size()));
}

void write_volume(const std::string& path, const LabelVolume& v)
{
    write_file(path, encode_volume(v));
}

void write_volume(const std::string& path, const ChannelGrid& v)
{
    write_file(path, encode_volume(v));
}

std::variant<LabelVolume, ChannelGrid> read_volume(const std::string& path)
{
    const std::vector<std::uint8_t> bytes = read_file(path);
    try {
        return decode_volume(bytes);
    } catch (const FormatError& e) {
        throw FormatError("'" + path + "': " + e.what());
    }
}

LabelVolume read_labels(const std::string& path)
{
    auto v = read_volume(path);
    if (auto* labels = std::get_if<LabelVolume>(&v)) {
        return std::move(*labels);
    }
    throw FormatError("'" + path + "' holds float values, expected labels");
}

ChannelGrid read_channel(const std::string& path)
{
    auto v = read_volume(path);
    if (auto* grid = std::get_if<ChannelGrid>(&v)) {
        return std::move(*grid);
    }
    throw FormatError("'" + path + "' holds labels, expected float values");
}

void write_stack(const std::string& dir, const ProbabilityStack& stack)
{
    for (std::size_t c = 0; c < stack.channel_count(); ++c) {
        write_volume((std::filesystem::path(dir) / (stack.names()[c] + ".segv")).string(), stack.channel(c));
    }
}

ProbabilityStack read_stack(const std::string& dir, const std::vector<std::string>& names)
{
    ProbabilityStack stack;
    for (const std::string& name : names) {
        stack.add(name, read_channel((std::filesystem::path(dir) / (name + ".segv")).string()));
    }
    return stack;
}

} // namespace cada
