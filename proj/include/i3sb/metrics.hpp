#pragma once

#include <array>
#include <optional>
#include <utility>
#include <vector>

#include "i3sb/tensor.hpp"

namespace i3sb {

// rectangular region of interest: top-left corner plus extent
struct Roi {
    std::uint32_t y = 0, x = 0, h = 0, w = 0;
};

// Mean local structural similarity over an 11x11 Gaussian window
// (sigma 1.5), stability constants (0.01 * range)^2 and (0.03 * range)^2,
// fully covered window positions only. Result lies in [-1, 1].
double ssim(const ImageTensor& a, const ImageTensor& b, double data_range,
            std::optional<Roi> roi = {});

struct GlcmConfig {
    int levels = 32;
    // displacement (dy, dx) per co-occurrence direction
    std::vector<std::pair<int, int>> offsets = {{0, 1}, {1, 0}, {1, 1}, {1, -1}};
    double window_min = -1.0;
    double window_max = 1.0;
    bool symmetric = true;

    void validate() const;
};

struct GlcmMatrix {
    int levels = 0;
    std::pair<int, int> offset;
    std::vector<double> p;  // levels x levels, row-major, sums to 1

    double at(int i, int j) const { return p[static_cast<std::size_t>(i) * levels + j]; }
};

// Intensities clamped to the window, quantized to `levels` uniform bins,
// pair counts over in-bounds pixels, optionally symmetrized, normalized.
std::vector<GlcmMatrix> glcm(const ImageTensor& img, const GlcmConfig& cfg,
                             std::optional<Roi> roi = {});

// Index order: angular second moment, contrast, correlation, sum of squares
// variance, inverse difference moment, sum average, sum variance, sum
// entropy, entropy, difference variance, difference entropy, information
// measures of correlation 1 and 2. Natural logarithms with a 1e-12 guard.
using HaralickVector = std::array<double, 13>;

extern const std::array<const char*, 13> kHaralickNames;

HaralickVector haralick_of_glcm(const GlcmMatrix& m);

// Per-offset features averaged over the configured offsets.
HaralickVector haralick_features(const ImageTensor& img, const GlcmConfig& cfg,
                                 std::optional<Roi> roi = {});

// sqrt(mean_i ((f_test_i - f_ref_i) / s_i)^2) with per-feature scale
// s_i = |f_ref_i| + 1e-8.
double haralick_distance_vec(const HaralickVector& test, const HaralickVector& ref);
double haralick_distance(const ImageTensor& test, const ImageTensor& ref,
                         const GlcmConfig& cfg, std::optional<Roi> roi = {});

double rmse(const ImageTensor& a, const ImageTensor& b);

}  // namespace i3sb
