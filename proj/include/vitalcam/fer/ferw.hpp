#pragma once

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <string>
#include <vector>

#include "vitalcam/fer/model.hpp"

namespace vitalcam::fer {

// FERW v1 weight container, little-endian throughout:
//   magic "FERW" | version u32 | layer_count u32
//   per layer: kind u8 | D u32 | stride u32 | padding u32 | M u32 | N u32 |
//              flags u32 | payload_len u64 | payload (f32 scalars)
//   trailer: u64 checksum = sum of all payload bytes mod 2^64
// Payload scalar order per kind is documented on fer::Layer. Batch-norm
// epsilon is fixed at 1e-3 and not stored.

inline constexpr uint32_t kFerwVersion = 1;

namespace detail {

inline void put_u32(std::string& out, uint32_t v) {
    for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

inline void put_u64(std::string& out, uint64_t v) {
    for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

class ByteReader {
public:
    ByteReader(const uint8_t* data, size_t size) : data_(data), size_(size) {}

    bool need(size_t n) const { return n <= size_ - pos_; }
    size_t remaining() const { return size_ - pos_; }

    uint8_t u8() { return data_[pos_++]; }

    uint32_t u32() {
        uint32_t v = 0;
        for (int i = 0; i < 4; ++i) v |= static_cast<uint32_t>(data_[pos_++]) << (8 * i);
        return v;
    }

    uint64_t u64() {
        uint64_t v = 0;
        for (int i = 0; i < 8; ++i) v |= static_cast<uint64_t>(data_[pos_++]) << (8 * i);
        return v;
    }

    const uint8_t* raw() const { return data_ + pos_; }
    void skip(size_t n) { pos_ += n; }

private:
    const uint8_t* data_;
    size_t size_;
    size_t pos_ = 0;
};

inline uint64_t payload_byte_sum(const std::vector<float>& payload) {
    uint64_t sum = 0;
    for (float f : payload) {
        const uint32_t bits = std::bit_cast<uint32_t>(f);
        sum += (bits & 0xff) + ((bits >> 8) & 0xff) + ((bits >> 16) & 0xff) + (bits >> 24);
    }
    return sum;
}

}  // namespace detail

inline std::string serialize(const Model& model) {
    std::string out;
    out.append("FERW", 4);
    detail::put_u32(out, kFerwVersion);
    detail::put_u32(out, static_cast<uint32_t>(model.layers.size()));
    uint64_t checksum = 0;
    for (const Layer& layer : model.layers) {
        const LayerSpec& s = layer.spec;
        out.push_back(static_cast<char>(s.kind));
        detail::put_u32(out, static_cast<uint32_t>(s.kernel));
        detail::put_u32(out, static_cast<uint32_t>(s.stride));
        detail::put_u32(out, static_cast<uint32_t>(s.padding));
        detail::put_u32(out, static_cast<uint32_t>(s.in_channels));
        detail::put_u32(out, static_cast<uint32_t>(s.out_channels));
        detail::put_u32(out, s.flags);
        detail::put_u64(out, static_cast<uint64_t>(layer.payload.size()) * 4);
        const size_t base = out.size();
        out.resize(base + layer.payload.size() * 4);
        std::memcpy(out.data() + base, layer.payload.data(), layer.payload.size() * 4);
        checksum += detail::payload_byte_sum(layer.payload);
    }
    detail::put_u64(out, checksum);
    return out;
}

inline Model load_model(const uint8_t* data, size_t size) {
    detail::ByteReader r(data, size);
    if (!r.need(4) || std::memcmp(r.raw(), "FERW", 4) != 0)
        throw error(errc::bad_magic, "missing FERW magic");
    r.skip(4);
    if (!r.need(8)) throw error(errc::truncated_file, "truncated header");
    const uint32_t version = r.u32();
    if (version != kFerwVersion)
        throw error(errc::unsupported_version, "version " + std::to_string(version));
    const uint32_t layer_count = r.u32();

    Model model;
    model.layers.reserve(layer_count);
    uint64_t checksum = 0;
    for (uint32_t i = 0; i < layer_count; ++i) {
        if (!r.need(1 + 6 * 4 + 8))
            throw error(errc::truncated_file, "truncated at layer " + std::to_string(i),
                        static_cast<long>(i));
        Layer layer;
        const uint8_t kind = r.u8();
        if (kind > static_cast<uint8_t>(LayerKind::max_pool))
            throw error(errc::bad_format, "unknown layer kind at layer " + std::to_string(i),
                        static_cast<long>(i));
        layer.spec.kind = static_cast<LayerKind>(kind);
        layer.spec.kernel = static_cast<int>(r.u32());
        layer.spec.stride = static_cast<int>(r.u32());
        const uint32_t pad = r.u32();
        if (pad > 1)
            throw error(errc::bad_format, "bad padding code at layer " + std::to_string(i),
                        static_cast<long>(i));
        layer.spec.padding = static_cast<Padding>(pad);
        layer.spec.in_channels = static_cast<int>(r.u32());
        layer.spec.out_channels = static_cast<int>(r.u32());
        layer.spec.flags = r.u32();
        const uint64_t payload_len = r.u64();
        if (payload_len % 4 != 0)
            throw error(errc::bad_format, "payload not float-aligned at layer " + std::to_string(i),
                        static_cast<long>(i));
        if (!r.need(payload_len))
            throw error(errc::truncated_file, "truncated payload at layer " + std::to_string(i),
                        static_cast<long>(i));
        layer.payload.resize(payload_len / 4);
        std::memcpy(layer.payload.data(), r.raw(), payload_len);
        r.skip(payload_len);
        checksum += detail::payload_byte_sum(layer.payload);
        model.layers.push_back(std::move(layer));
    }
    if (!r.need(8)) throw error(errc::truncated_file, "missing checksum trailer");
    if (r.u64() != checksum) throw error(errc::bad_format, "payload checksum mismatch");

    model.shape_check();
    return model;
}

inline Model load_model(const std::string& bytes) {
    return load_model(reinterpret_cast<const uint8_t*>(bytes.data()), bytes.size());
}

inline void save_model_file(const Model& model, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw error(errc::io_error, "cannot open " + path + " for writing");
    const std::string bytes = serialize(model);
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw error(errc::io_error, "short write to " + path);
}

inline Model load_model_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw error(errc::io_error, "cannot open " + path);
    std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return load_model(bytes);
}

}  // namespace vitalcam::fer
