#include "i3sb/degrade.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <stdexcept>

#include "i3sb/rng.hpp"
#include "i3sb/tensor_io.hpp"

namespace i3sb {

void DegradeSpec::validate() const {
    if (!(noise_sigma >= 0.0)) {
        throw std::invalid_argument("DegradeSpec: noise_sigma must be >= 0");
    }
}

ImageTensor box_downsample4(const ImageTensor& t) {
    t.validate();
    if (t.channels != 1) {
        throw std::invalid_argument("box_downsample4: single-channel images only");
    }
    if (t.height % 4 != 0 || t.width % 4 != 0) {
        throw std::invalid_argument("box_downsample4: dimensions must be divisible by 4");
    }
    ImageTensor out(t.height / 4, t.width / 4, 1, t.range_min, t.range_max);
    for (std::uint32_t by = 0; by < out.height; ++by) {
        for (std::uint32_t bx = 0; bx < out.width; ++bx) {
            double acc = 0.0;
            for (std::uint32_t dy = 0; dy < 4; ++dy) {
                for (std::uint32_t dx = 0; dx < 4; ++dx) {
                    acc += t.at(4 * by + dy, 4 * bx + dx);
                }
            }
            out.at(by, bx) = static_cast<float>(acc / 16.0);
        }
    }
    return out;
}

ImageTensor bilinear_upsample(const ImageTensor& coarse, std::uint32_t out_h,
                              std::uint32_t out_w) {
    coarse.validate();
    if (coarse.channels != 1) {
        throw std::invalid_argument("bilinear_upsample: single-channel images only");
    }
    ImageTensor out(out_h, out_w, 1, coarse.range_min, coarse.range_max);
    const double sy = static_cast<double>(coarse.height) / out_h;
    const double sx = static_cast<double>(coarse.width) / out_w;
    for (std::uint32_t y = 0; y < out_h; ++y) {
        // half-pixel-center mapping, coordinates clamped at the borders
        double fy = (y + 0.5) * sy - 0.5;
        fy = std::clamp(fy, 0.0, static_cast<double>(coarse.height - 1));
        const auto y0 = static_cast<std::uint32_t>(fy);
        const std::uint32_t y1 = std::min(y0 + 1, coarse.height - 1);
        const double wy = fy - y0;
        for (std::uint32_t x = 0; x < out_w; ++x) {
            double fx = (x + 0.5) * sx - 0.5;
            fx = std::clamp(fx, 0.0, static_cast<double>(coarse.width - 1));
            const auto x0 = static_cast<std::uint32_t>(fx);
            const std::uint32_t x1 = std::min(x0 + 1, coarse.width - 1);
            const double wx = fx - x0;
            const double top = (1.0 - wx) * coarse.at(y0, x0) + wx * coarse.at(y0, x1);
            const double bot = (1.0 - wx) * coarse.at(y1, x0) + wx * coarse.at(y1, x1);
            out.at(y, x) = static_cast<float>((1.0 - wy) * top + wy * bot);
        }
    }
    return out;
}

ImageTensor apply_degrade(const DegradeSpec& spec, const ImageTensor& x0) {
    spec.validate();
    x0.validate();
    switch (spec.kind) {
        case DegradeKind::gaussian_noise: {
            ImageTensor out = x0;
            if (spec.noise_sigma > 0.0) {
                RandomStream rng(spec.seed);
                for (float& v : out.data) {
                    v = static_cast<float>(static_cast<double>(v) +
                                           spec.noise_sigma * rng.normal());
                }
            }
            return out;
        }
        case DegradeKind::downsample4x:
            return bilinear_upsample(box_downsample4(x0), x0.height, x0.width);
    }
    throw std::logic_error("apply_degrade: unknown kind");
}

namespace {

void smooth_3tap(ImageTensor& t) {
    // separable [0.25, 0.5, 0.25], edge replicate, one pass per axis
    const int h = static_cast<int>(t.height);
    const int w = static_cast<int>(t.width);
    std::vector<float> row(w), col(h);
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            const float l = t.at(y, std::max(x - 1, 0));
            const float r = t.at(y, std::min(x + 1, w - 1));
            row[x] = 0.25f * l + 0.5f * t.at(y, x) + 0.25f * r;
        }
        for (int x = 0; x < w; ++x) t.at(y, x) = row[x];
    }
    for (int x = 0; x < w; ++x) {
        for (int y = 0; y < h; ++y) {
            const float u = t.at(std::max(y - 1, 0), x);
            const float d = t.at(std::min(y + 1, h - 1), x);
            col[y] = 0.25f * u + 0.5f * t.at(y, x) + 0.25f * d;
        }
        for (int y = 0; y < h; ++y) t.at(y, x) = col[y];
    }
}

void rescale_to_unit_range(ImageTensor& t) {
    float lo = t.data[0], hi = t.data[0];
    for (float v : t.data) {
        lo = std::min(lo, v);
        hi = std::max(hi, v);
    }
    if (!(hi > lo)) {
        std::fill(t.data.begin(), t.data.end(), 0.0f);
        return;
    }
    const float scale = 2.0f / (hi - lo);
    for (float& v : t.data) v = (v - lo) * scale - 1.0f;
}

}  // namespace

ImageTensor make_toy_image(ToyKind kind, int size, std::uint64_t seed) {
    if (size < 8) throw std::invalid_argument("make_toy_image: size too small");
    ImageTensor img(static_cast<std::uint32_t>(size), static_cast<std::uint32_t>(size),
                    1, -1.0f, 1.0f);
    RandomStream rng(seed);
    if (kind == ToyKind::texture_field) {
        for (float& v : img.data) v = static_cast<float>(rng.normal());
        smooth_3tap(img);
    } else {
        const int tile = std::max(size / 8, 1);
        for (int y = 0; y < size; ++y) {
            for (int x = 0; x < size; ++x) {
                img.at(y, x) = ((x / tile + y / tile) % 2 == 0) ? -0.5f : 0.5f;
            }
        }
        const int rects = 2 + static_cast<int>(rng.raw() % 3);
        for (int i = 0; i < rects; ++i) {
            const int rw = size / 8 + static_cast<int>(rng.raw() % (size / 4));
            const int rh = size / 8 + static_cast<int>(rng.raw() % (size / 4));
            const int x0 = static_cast<int>(rng.raw() % (size - rw));
            const int y0 = static_cast<int>(rng.raw() % (size - rh));
            const float v = static_cast<float>(2.0 * rng.uniform() - 1.0);
            for (int y = y0; y < y0 + rh; ++y) {
                for (int x = x0; x < x0 + rw; ++x) img.at(y, x) = v;
            }
        }
        const int disks = 2 + static_cast<int>(rng.raw() % 3);
        for (int i = 0; i < disks; ++i) {
            const int radius = size / 10 + static_cast<int>(rng.raw() % (size / 6));
            const int cx = static_cast<int>(rng.raw() % size);
            const int cy = static_cast<int>(rng.raw() % size);
            const float v = static_cast<float>(2.0 * rng.uniform() - 1.0);
            for (int y = std::max(cy - radius, 0); y <= std::min(cy + radius, size - 1); ++y) {
                for (int x = std::max(cx - radius, 0); x <= std::min(cx + radius, size - 1); ++x) {
                    const int dx = x - cx, dy = y - cy;
                    if (dx * dx + dy * dy <= radius * radius) img.at(y, x) = v;
                }
            }
        }
    }
    rescale_to_unit_range(img);
    return img;
}

std::vector<ImagePair> make_toy_dataset(ToyKind kind, int count, int size,
                                        std::uint64_t seed,
                                        const DegradeSpec& degrade) {
    if (count < 0) throw std::invalid_argument("make_toy_dataset: negative count");
    degrade.validate();
    std::vector<ImagePair> pairs;
    pairs.reserve(count);
    for (int i = 0; i < count; ++i) {
        ImageTensor clean = make_toy_image(kind, size, derive_seed(seed, i));
        DegradeSpec item = degrade;
        item.seed = derive_seed(degrade.seed, i);
        ImageTensor corrupt = apply_degrade(item, clean);
        pairs.emplace_back(std::move(clean), std::move(corrupt));
    }
    return pairs;
}

void save_dataset(const std::vector<ImagePair>& pairs, const std::string& dir) {
    namespace fs = std::filesystem;
    fs::create_directories(dir);
    std::ofstream manifest(fs::path(dir) / "manifest.txt");
    if (!manifest) throw std::runtime_error("save_dataset: cannot write manifest");
    manifest << "pairs " << pairs.size() << "\n";
    char name[64];
    for (std::size_t i = 0; i < pairs.size(); ++i) {
        std::snprintf(name, sizeof(name), "clean_%04zu.tnsr", i);
        const std::string clean_file = name;
        std::snprintf(name, sizeof(name), "corrupt_%04zu.tnsr", i);
        const std::string corrupt_file = name;
        write_tensor(pairs[i].first, (fs::path(dir) / clean_file).string());
        write_tensor(pairs[i].second, (fs::path(dir) / corrupt_file).string());
        manifest << "pair " << i << " " << clean_file << " " << corrupt_file << "\n";
    }
    if (!manifest) throw std::runtime_error("save_dataset: manifest write failed");
}

std::vector<ImagePair> load_dataset(const std::string& dir) {
    namespace fs = std::filesystem;
    std::ifstream manifest(fs::path(dir) / "manifest.txt");
    if (!manifest) throw std::runtime_error("load_dataset: missing manifest in " + dir);
    std::string key;
    std::size_t count = 0;
    manifest >> key >> count;
    if (key != "pairs") throw std::runtime_error("load_dataset: malformed manifest");
    std::vector<ImagePair> pairs;
    pairs.reserve(count);
    std::size_t idx;
    std::string clean_file, corrupt_file;
    while (manifest >> key >> idx >> clean_file >> corrupt_file) {
        if (key != "pair") throw std::runtime_error("load_dataset: malformed manifest");
        pairs.emplace_back(read_tensor((fs::path(dir) / clean_file).string()),
                           read_tensor((fs::path(dir) / corrupt_file).string()));
    }
    if (pairs.size() != count) {
        throw std::runtime_error("load_dataset: manifest count mismatch");
    }
    return pairs;
}

std::string to_string(DegradeKind k) {
    return k == DegradeKind::gaussian_noise ? "gaussian_noise" : "downsample4x";
}

std::string to_string(ToyKind k) {
    return k == ToyKind::texture_field ? "texture_field" : "checker_blobs";
}

DegradeKind degrade_kind_from_string(const std::string& s) {
    if (s == "gaussian_noise") return DegradeKind::gaussian_noise;
    if (s == "downsample4x") return DegradeKind::downsample4x;
    throw std::invalid_argument("unknown degrade kind: " + s);
}

ToyKind toy_kind_from_string(const std::string& s) {
    if (s == "texture_field") return ToyKind::texture_field;
    if (s == "checker_blobs") return ToyKind::checker_blobs;
    throw std::invalid_argument("unknown toy dataset kind: " + s);
}

}  // namespace i3sb
