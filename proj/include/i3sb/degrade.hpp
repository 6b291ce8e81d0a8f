#pragma once

#include <string>
#include <vector>

#include "i3sb/predictor.hpp"
#include "i3sb/tensor.hpp"

namespace i3sb {

enum class DegradeKind { gaussian_noise, downsample4x };

struct DegradeSpec {
    DegradeKind kind = DegradeKind::gaussian_noise;
    double noise_sigma = 0.5;  // intensity units, gaussian_noise only
    std::uint64_t seed = 0;

    void validate() const;
};

// gaussian_noise: x0 + sigma * z, seeded. downsample4x: 4x4 block means
// followed by bilinear upsampling back onto the original grid, so clean and
// corrupted images always share a shape.
ImageTensor apply_degrade(const DegradeSpec& spec, const ImageTensor& x0);

// The two halves of downsample4x, exposed for direct verification.
ImageTensor box_downsample4(const ImageTensor& t);
ImageTensor bilinear_upsample(const ImageTensor& coarse, std::uint32_t out_h,
                              std::uint32_t out_w);

enum class ToyKind { texture_field, checker_blobs };

// texture_field: unit normals smoothed once per axis with [0.25, 0.5, 0.25]
// and min-max rescaled to [-1, 1]. checker_blobs: random rectangles and
// disks over a checkerboard, rescaled the same way. Item i of a dataset
// uses derive_seed(seed, i), so datasets are reproducible byte for byte.
ImageTensor make_toy_image(ToyKind kind, int size, std::uint64_t seed);

std::vector<ImagePair> make_toy_dataset(ToyKind kind, int count, int size,
                                        std::uint64_t seed,
                                        const DegradeSpec& degrade);

// Directory of tensor-container files plus a manifest listing the pairs.
void save_dataset(const std::vector<ImagePair>& pairs, const std::string& dir);
std::vector<ImagePair> load_dataset(const std::string& dir);

std::string to_string(DegradeKind k);
std::string to_string(ToyKind k);
DegradeKind degrade_kind_from_string(const std::string& s);
ToyKind toy_kind_from_string(const std::string& s);

}  // namespace i3sb
