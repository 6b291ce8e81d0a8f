#pragma once

#include <stdexcept>
#include <string>

#include "i3sb/tensor.hpp"

namespace i3sb {

// File layout ("BRSTNSR1" container, all little-endian):
//   8 bytes   magic "BRSTNSR1"
//   3 x u32   height, width, channels
//   2 x f32   range_min, range_max
//   h*w*c f32 data, row-major
class TensorIoError : public std::runtime_error {
public:
    enum class Kind { io, bad_magic, truncated, bad_header, non_finite };

    TensorIoError(Kind kind, const std::string& what)
        : std::runtime_error(what), kind_(kind) {}

    Kind kind() const { return kind_; }

private:
    Kind kind_;
};

void write_tensor(const ImageTensor& t, const std::string& path);
ImageTensor read_tensor(const std::string& path);

// 8-bit binary PGM (P5). v maps to round(255 * clamp((v - display_min) /
// (display_max - display_min), 0, 1)), half away from zero.
void export_pgm(const ImageTensor& t, const std::string& path,
                float display_min, float display_max);

}  // namespace i3sb
