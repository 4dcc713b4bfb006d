#pragma once

#include <cstdint>
#include <cstring>
#include <fstream>
#include <optional>
#include <string>
#include <vector>

#include "vitalcam/error.hpp"
#include "vitalcam/frame.hpp"

namespace vitalcam {

// Raw video container: 16-byte header (magic "RVID", u32 width, u32 height,
// u32 fps in millihertz, all little-endian), then frames as back-to-back
// row-major interleaved RGB bytes. Frame timestamps are derived from the
// frame index and the header rate.
struct RvidHeader {
    uint32_t width = 0;
    uint32_t height = 0;
    uint32_t fps_millihertz = 0;

    double fps() const { return fps_millihertz / 1000.0; }
    size_t frame_bytes() const { return static_cast<size_t>(width) * height * 3; }
    uint32_t timestamp_ms(size_t index) const {
        return static_cast<uint32_t>((index * 1000000ULL + fps_millihertz / 2) /
                                     fps_millihertz);
    }
};

namespace detail {

inline void put_u32le(std::ostream& os, uint32_t v) {
    const uint8_t b[4] = {static_cast<uint8_t>(v), static_cast<uint8_t>(v >> 8),
                          static_cast<uint8_t>(v >> 16), static_cast<uint8_t>(v >> 24)};
    os.write(reinterpret_cast<const char*>(b), 4);
}

inline uint32_t get_u32le(std::istream& is) {
    uint8_t b[4];
    is.read(reinterpret_cast<char*>(b), 4);
    return static_cast<uint32_t>(b[0]) | static_cast<uint32_t>(b[1]) << 8 |
           static_cast<uint32_t>(b[2]) << 16 | static_cast<uint32_t>(b[3]) << 24;
}

}  // namespace detail

class RvidWriter {
public:
    RvidWriter(const std::string& path, uint32_t width, uint32_t height, double fps)
        : header_{width, height, static_cast<uint32_t>(fps * 1000.0 + 0.5)},
          out_(path, std::ios::binary) {
        if (!out_) throw error(errc::io_error, "cannot open " + path + " for writing");
        if (header_.fps_millihertz == 0)
            throw error(errc::invalid_argument, "fps must be positive");
        out_.write("RVID", 4);
        detail::put_u32le(out_, header_.width);
        detail::put_u32le(out_, header_.height);
        detail::put_u32le(out_, header_.fps_millihertz);
    }

    void write(const Frame& f) {
        if (f.width != header_.width || f.height != header_.height)
            throw error(errc::dimension_mismatch, "frame size differs from stream header");
        out_.write(reinterpret_cast<const char*>(f.pixels.data()),
                   static_cast<std::streamsize>(f.pixels.size()));
        if (!out_) throw error(errc::io_error, "short write");
    }

    const RvidHeader& header() const { return header_; }

private:
    RvidHeader header_;
    std::ofstream out_;
};

class RvidReader {
public:
    explicit RvidReader(const std::string& path) : in_(path, std::ios::binary) {
        if (!in_) throw error(errc::io_error, "cannot open " + path);
        char magic[4] = {};
        in_.read(magic, 4);
        if (!in_ || std::memcmp(magic, "RVID", 4) != 0)
            throw error(errc::bad_magic, "not an RVID stream");
        header_.width = detail::get_u32le(in_);
        header_.height = detail::get_u32le(in_);
        header_.fps_millihertz = detail::get_u32le(in_);
        if (!in_ || header_.width < 8 || header_.height < 8 || header_.fps_millihertz == 0)
            throw error(errc::bad_format, "corrupt RVID header");
    }

    const RvidHeader& header() const { return header_; }

    std::optional<Frame> next() {
        Frame f;
        f.width = header_.width;
        f.height = header_.height;
        f.pixels.resize(header_.frame_bytes());
        in_.read(reinterpret_cast<char*>(f.pixels.data()),
                 static_cast<std::streamsize>(f.pixels.size()));
        if (in_.gcount() == 0) return std::nullopt;
        if (static_cast<size_t>(in_.gcount()) != f.pixels.size())
            throw error(errc::truncated_file, "stream ends mid-frame");
        f.timestamp_ms = header_.timestamp_ms(index_++);
        return f;
    }

    std::vector<Frame> read_all() {
        std::vector<Frame> frames;
        while (auto f = next()) frames.push_back(std::move(*f));
        return frames;
    }

private:
    RvidHeader header_;
    std::ifstream in_;
    size_t index_ = 0;
};

}  // namespace vitalcam
