#include "videdit/vten_io.hpp"

#include <cstring>
#include <fstream>
#include <stdexcept>

namespace videdit {

namespace {

constexpr char kMagic[4] = {'V', 'T', 'E', 'N'};
constexpr std::uint32_t kVersion = 1;

void put_u32(std::string& buf, std::uint32_t x) {
    buf.push_back(static_cast<char>(x & 0xff));
    buf.push_back(static_cast<char>((x >> 8) & 0xff));
    buf.push_back(static_cast<char>((x >> 16) & 0xff));
    buf.push_back(static_cast<char>((x >> 24) & 0xff));
}

std::uint32_t get_u32(const unsigned char* p) {
    return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
           (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}

}  // namespace

void write_vten(const std::string& path, const NTensor& t) {
    std::string buf;
    buf.reserve(16 + 4 * t.dims.size() + 4 * t.v.size());
    buf.append(kMagic, 4);
    put_u32(buf, kVersion);
    put_u32(buf, static_cast<std::uint32_t>(t.dims.size()));
    std::size_t expect = 1;
    for (std::uint32_t d : t.dims) {
        if (d == 0) throw std::invalid_argument("write_vten: zero dimension");
        put_u32(buf, d);
        expect *= d;
    }
    if (expect != t.v.size()) throw std::invalid_argument("write_vten: dims/payload mismatch");
    for (float x : t.v) {
        std::uint32_t bits;
        std::memcpy(&bits, &x, 4);
        put_u32(buf, bits);
    }
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("write_vten: cannot open " + path);
    out.write(buf.data(), static_cast<std::streamsize>(buf.size()));
    if (!out) throw std::runtime_error("write_vten: write failed for " + path);
}

NTensor read_vten(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("read_vten: cannot open " + path);
    std::string raw((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    const auto* p = reinterpret_cast<const unsigned char*>(raw.data());
    if (raw.size() < 12 || std::memcmp(p, kMagic, 4) != 0) {
        throw std::runtime_error("read_vten: bad magic in " + path);
    }
    if (get_u32(p + 4) != kVersion) throw std::runtime_error("read_vten: unsupported version in " + path);
    const std::uint32_t ndim = get_u32(p + 8);
    if (ndim == 0 || ndim > 8) throw std::runtime_error("read_vten: implausible rank in " + path);
    if (raw.size() < 12 + 4ull * ndim) throw std::runtime_error("read_vten: truncated header in " + path);

    NTensor t;
    t.dims.resize(ndim);
    std::size_t count = 1;
    for (std::uint32_t i = 0; i < ndim; ++i) {
        t.dims[i] = get_u32(p + 12 + 4 * i);
        if (t.dims[i] == 0) throw std::runtime_error("read_vten: zero dimension in " + path);
        count *= t.dims[i];
    }
    const std::size_t header = 12 + 4ull * ndim;
    if (raw.size() != header + 4 * count) throw std::runtime_error("read_vten: truncated payload in " + path);
    t.v.resize(count);
    for (std::size_t i = 0; i < count; ++i) {
        const std::uint32_t bits = get_u32(p + header + 4 * i);
        std::memcpy(&t.v[i], &bits, 4);
    }
    return t;
}

NTensor to_ntensor(const VideoLatent& v) {
    NTensor t;
    t.dims = {static_cast<std::uint32_t>(v.b), static_cast<std::uint32_t>(v.c),
              static_cast<std::uint32_t>(v.f), static_cast<std::uint32_t>(v.h),
              static_cast<std::uint32_t>(v.w)};
    t.v = v.data;
    return t;
}

VideoLatent to_video(const NTensor& t) {
    if (t.dims.size() != 5) throw std::runtime_error("to_video: expected a 5D tensor");
    VideoLatent v(static_cast<int>(t.dims[0]), static_cast<int>(t.dims[1]),
                  static_cast<int>(t.dims[2]), static_cast<int>(t.dims[3]),
                  static_cast<int>(t.dims[4]));
    v.data = t.v;
    return v;
}

void write_video_vten(const std::string& path, const VideoLatent& v) {
    write_vten(path, to_ntensor(v));
}

VideoLatent read_video_vten(const std::string& path) { return to_video(read_vten(path)); }

}  // namespace videdit
