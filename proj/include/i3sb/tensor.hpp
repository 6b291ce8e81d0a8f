#pragma once

#include <cstdint>
#include <vector>

namespace i3sb {

// 2-D float image with an explicit nominal intensity range. Row-major,
// channel-interleaved storage; channels is 1 for every built-in task.
// Treated as an immutable value once filled: copy freely, share across
// threads.
struct ImageTensor {
    std::uint32_t height = 0;
    std::uint32_t width = 0;
    std::uint32_t channels = 1;
    float range_min = -1.0f;
    float range_max = 1.0f;
    std::vector<float> data;

    ImageTensor() = default;
    ImageTensor(std::uint32_t h, std::uint32_t w, std::uint32_t c = 1,
                float rmin = -1.0f, float rmax = 1.0f);

    std::size_t size() const { return data.size(); }

    float& at(std::uint32_t y, std::uint32_t x, std::uint32_t ch = 0) {
        return data[(static_cast<std::size_t>(y) * width + x) * channels + ch];
    }
    float at(std::uint32_t y, std::uint32_t x, std::uint32_t ch = 0) const {
        return data[(static_cast<std::size_t>(y) * width + x) * channels + ch];
    }

    bool same_shape(const ImageTensor& o) const {
        return height == o.height && width == o.width && channels == o.channels;
    }

    bool all_finite() const;

    // Throws std::invalid_argument if dimensions, data length, or the
    // declared range are inconsistent.
    void validate() const;
};

ImageTensor constant_like(const ImageTensor& shape_of, float value);

}  // namespace i3sb
