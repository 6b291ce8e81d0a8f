#include "i3sb/tensor.hpp"

#include <cmath>
#include <stdexcept>

namespace i3sb {

ImageTensor::ImageTensor(std::uint32_t h, std::uint32_t w, std::uint32_t c,
                         float rmin, float rmax)
    : height(h), width(w), channels(c), range_min(rmin), range_max(rmax),
      data(static_cast<std::size_t>(h) * w * c, 0.0f) {
    validate();
}

bool ImageTensor::all_finite() const {
    for (float v : data) {
        if (!std::isfinite(v)) return false;
    }
    return true;
}

void ImageTensor::validate() const {
    if (height == 0 || width == 0 || channels == 0) {
        throw std::invalid_argument("ImageTensor: zero dimension");
    }
    if (data.size() != static_cast<std::size_t>(height) * width * channels) {
        throw std::invalid_argument("ImageTensor: data length does not match dimensions");
    }
    if (!(range_min < range_max)) {
        throw std::invalid_argument("ImageTensor: range_min must be below range_max");
    }
}

ImageTensor constant_like(const ImageTensor& shape_of, float value) {
    ImageTensor out(shape_of.height, shape_of.width, shape_of.channels,
                    shape_of.range_min, shape_of.range_max);
    for (float& v : out.data) v = value;
    return out;
}

}  // namespace i3sb
