#include "i3sb/tensor_io.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstring>
#include <fstream>

namespace i3sb {

namespace {

constexpr char kMagic[8] = {'B', 'R', 'S', 'T', 'N', 'S', 'R', '1'};

// Serialization is explicitly little-endian regardless of host order.
void put_u32(std::ostream& os, std::uint32_t v) {
    const std::array<unsigned char, 4> b = {
        static_cast<unsigned char>(v & 0xff),
        static_cast<unsigned char>((v >> 8) & 0xff),
        static_cast<unsigned char>((v >> 16) & 0xff),
        static_cast<unsigned char>((v >> 24) & 0xff)};
    os.write(reinterpret_cast<const char*>(b.data()), 4);
}

void put_f32(std::ostream& os, float v) {
    std::uint32_t bits;
    std::memcpy(&bits, &v, 4);
    put_u32(os, bits);
}

std::uint32_t get_u32(std::istream& is) {
    unsigned char b[4];
    is.read(reinterpret_cast<char*>(b), 4);
    if (!is) throw TensorIoError(TensorIoError::Kind::truncated, "truncated header");
    return static_cast<std::uint32_t>(b[0]) | (static_cast<std::uint32_t>(b[1]) << 8) |
           (static_cast<std::uint32_t>(b[2]) << 16) | (static_cast<std::uint32_t>(b[3]) << 24);
}

float get_f32(std::istream& is) {
    const std::uint32_t bits = get_u32(is);
    float v;
    std::memcpy(&v, &bits, 4);
    return v;
}

}  // namespace

void write_tensor(const ImageTensor& t, const std::string& path) {
    t.validate();
    if (!t.all_finite()) {
        throw TensorIoError(TensorIoError::Kind::non_finite,
                            "refusing to write non-finite tensor: " + path);
    }
    std::ofstream os(path, std::ios::binary | std::ios::trunc);
    if (!os) throw TensorIoError(TensorIoError::Kind::io, "cannot open for write: " + path);
    os.write(kMagic, sizeof(kMagic));
    put_u32(os, t.height);
    put_u32(os, t.width);
    put_u32(os, t.channels);
    put_f32(os, t.range_min);
    put_f32(os, t.range_max);
    for (float v : t.data) put_f32(os, v);
    os.flush();
    if (!os) throw TensorIoError(TensorIoError::Kind::io, "write failed: " + path);
}

ImageTensor read_tensor(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw TensorIoError(TensorIoError::Kind::io, "cannot open for read: " + path);
    char magic[8];
    is.read(magic, sizeof(magic));
    if (!is || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0) {
        throw TensorIoError(TensorIoError::Kind::bad_magic, "bad magic in " + path);
    }
    ImageTensor t;
    t.height = get_u32(is);
    t.width = get_u32(is);
    t.channels = get_u32(is);
    t.range_min = get_f32(is);
    t.range_max = get_f32(is);
    if (t.height == 0 || t.width == 0 || t.channels == 0) {
        throw TensorIoError(TensorIoError::Kind::bad_header, "zero dimension in " + path);
    }
    if (!(t.range_min < t.range_max)) {
        throw TensorIoError(TensorIoError::Kind::bad_header, "invalid range in " + path);
    }
    const std::size_t count =
        static_cast<std::size_t>(t.height) * t.width * t.channels;
    t.data.resize(count);
    for (std::size_t i = 0; i < count; ++i) {
        t.data[i] = get_f32(is);
    }
    return t;
}

void export_pgm(const ImageTensor& t, const std::string& path,
                float display_min, float display_max) {
    t.validate();
    if (t.channels != 1) {
        throw std::invalid_argument("export_pgm: single-channel images only");
    }
    if (!(display_min < display_max)) {
        throw std::invalid_argument("export_pgm: display_min must be below display_max");
    }
    std::ofstream os(path, std::ios::binary | std::ios::trunc);
    if (!os) throw TensorIoError(TensorIoError::Kind::io, "cannot open for write: " + path);
    os << "P5\n" << t.width << " " << t.height << "\n255\n";
    const double lo = display_min;
    const double span = static_cast<double>(display_max) - lo;
    std::vector<unsigned char> row(t.width);
    for (std::uint32_t y = 0; y < t.height; ++y) {
        for (std::uint32_t x = 0; x < t.width; ++x) {
            const double u = std::clamp((t.at(y, x) - lo) / span, 0.0, 1.0);
            row[x] = static_cast<unsigned char>(std::lround(255.0 * u));
        }
        os.write(reinterpret_cast<const char*>(row.data()), row.size());
    }
    os.flush();
    if (!os) throw TensorIoError(TensorIoError::Kind::io, "write failed: " + path);
}

}  // namespace i3sb
