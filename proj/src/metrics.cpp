#include "i3sb/metrics.hpp"

#include <cmath>
#include <stdexcept>

namespace i3sb {

namespace {

constexpr int kSsimWindow = 11;
constexpr double kSsimSigma = 1.5;
constexpr double kLogGuard = 1e-12;

void require_single_channel(const ImageTensor& t, const char* who) {
    if (t.channels != 1) {
        throw std::invalid_argument(std::string(who) + ": single-channel images only");
    }
}

ImageTensor crop(const ImageTensor& t, const Roi& roi) {
    if (roi.h == 0 || roi.w == 0 || roi.y + roi.h > t.height || roi.x + roi.w > t.width) {
        throw std::invalid_argument("roi out of bounds");
    }
    ImageTensor out(roi.h, roi.w, 1, t.range_min, t.range_max);
    for (std::uint32_t y = 0; y < roi.h; ++y) {
        for (std::uint32_t x = 0; x < roi.w; ++x) {
            out.at(y, x) = t.at(roi.y + y, roi.x + x);
        }
    }
    return out;
}

ImageTensor maybe_crop(const ImageTensor& t, const std::optional<Roi>& roi) {
    return roi ? crop(t, *roi) : t;
}

// valid-mode separable filtering: rows then columns
std::vector<double> filter_valid(const std::vector<double>& img, int h, int w,
                                 const std::vector<double>& kernel, int& oh, int& ow) {
    const int k = static_cast<int>(kernel.size());
    ow = w - k + 1;
    oh = h - k + 1;
    std::vector<double> rows(static_cast<std::size_t>(h) * ow);
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < ow; ++x) {
            double acc = 0.0;
            for (int i = 0; i < k; ++i) acc += kernel[i] * img[y * w + x + i];
            rows[y * ow + x] = acc;
        }
    }
    std::vector<double> out(static_cast<std::size_t>(oh) * ow);
    for (int y = 0; y < oh; ++y) {
        for (int x = 0; x < ow; ++x) {
            double acc = 0.0;
            for (int i = 0; i < k; ++i) acc += kernel[i] * rows[(y + i) * ow + x];
            out[y * ow + x] = acc;
        }
    }
    return out;
}

}  // namespace

double ssim(const ImageTensor& a, const ImageTensor& b, double data_range,
            std::optional<Roi> roi) {
    if (!a.same_shape(b)) throw std::invalid_argument("ssim: shape mismatch");
    require_single_channel(a, "ssim");
    if (!(data_range > 0.0)) throw std::invalid_argument("ssim: data_range must be positive");
    const ImageTensor ca = maybe_crop(a, roi);
    const ImageTensor cb = maybe_crop(b, roi);
    const int h = static_cast<int>(ca.height);
    const int w = static_cast<int>(ca.width);
    if (h < kSsimWindow || w < kSsimWindow) {
        throw std::invalid_argument("ssim: image smaller than the 11x11 window");
    }

    std::vector<double> kernel(kSsimWindow);
    double ksum = 0.0;
    for (int i = 0; i < kSsimWindow; ++i) {
        const double d = i - (kSsimWindow - 1) / 2.0;
        kernel[i] = std::exp(-d * d / (2.0 * kSsimSigma * kSsimSigma));
        ksum += kernel[i];
    }
    for (double& v : kernel) v /= ksum;

    const std::size_t count = ca.data.size();
    std::vector<double> xa(count), xb(count), xaa(count), xbb(count), xab(count);
    for (std::size_t i = 0; i < count; ++i) {
        xa[i] = ca.data[i];
        xb[i] = cb.data[i];
        xaa[i] = xa[i] * xa[i];
        xbb[i] = xb[i] * xb[i];
        xab[i] = xa[i] * xb[i];
    }
    int oh = 0, ow = 0;
    const std::vector<double> mu_a = filter_valid(xa, h, w, kernel, oh, ow);
    const std::vector<double> mu_b = filter_valid(xb, h, w, kernel, oh, ow);
    const std::vector<double> raw_aa = filter_valid(xaa, h, w, kernel, oh, ow);
    const std::vector<double> raw_bb = filter_valid(xbb, h, w, kernel, oh, ow);
    const std::vector<double> raw_ab = filter_valid(xab, h, w, kernel, oh, ow);

    const double c1 = (0.01 * data_range) * (0.01 * data_range);
    const double c2 = (0.03 * data_range) * (0.03 * data_range);
    double total = 0.0;
    const std::size_t n = mu_a.size();
    for (std::size_t i = 0; i < n; ++i) {
        const double ma = mu_a[i], mb = mu_b[i];
        const double va = raw_aa[i] - ma * ma;
        const double vb = raw_bb[i] - mb * mb;
        const double cab = raw_ab[i] - ma * mb;
        total += ((2.0 * ma * mb + c1) * (2.0 * cab + c2)) /
                 ((ma * ma + mb * mb + c1) * (va + vb + c2));
    }
    return total / static_cast<double>(n);
}

void GlcmConfig::validate() const {
    if (levels < 2) throw std::invalid_argument("GlcmConfig: levels must be >= 2");
    if (!(window_min < window_max)) {
        throw std::invalid_argument("GlcmConfig: window_min must be below window_max");
    }
    if (offsets.empty()) throw std::invalid_argument("GlcmConfig: no offsets");
}

std::vector<GlcmMatrix> glcm(const ImageTensor& img, const GlcmConfig& cfg,
                             std::optional<Roi> roi) {
    cfg.validate();
    require_single_channel(img, "glcm");
    const ImageTensor c = maybe_crop(img, roi);
    const int h = static_cast<int>(c.height);
    const int w = static_cast<int>(c.width);
    const int levels = cfg.levels;
    const double span = cfg.window_max - cfg.window_min;

    std::vector<int> q(c.data.size());
    for (std::size_t i = 0; i < c.data.size(); ++i) {
        const double v =
            std::clamp(static_cast<double>(c.data[i]), cfg.window_min, cfg.window_max);
        q[i] = std::min(levels - 1,
                        static_cast<int>((v - cfg.window_min) / span * levels));
    }

    std::vector<GlcmMatrix> result;
    result.reserve(cfg.offsets.size());
    for (const auto& [dy, dx] : cfg.offsets) {
        GlcmMatrix m;
        m.levels = levels;
        m.offset = {dy, dx};
        m.p.assign(static_cast<std::size_t>(levels) * levels, 0.0);
        std::size_t pairs = 0;
        for (int y = 0; y < h; ++y) {
            const int yy = y + dy;
            if (yy < 0 || yy >= h) continue;
            for (int x = 0; x < w; ++x) {
                const int xx = x + dx;
                if (xx < 0 || xx >= w) continue;
                m.p[static_cast<std::size_t>(q[y * w + x]) * levels + q[yy * w + xx]] += 1.0;
                ++pairs;
            }
        }
        if (pairs == 0) {
            throw std::invalid_argument("glcm: offset leaves no co-occurring pixels");
        }
        if (cfg.symmetric) {
            for (int i = 0; i < levels; ++i) {
                for (int j = i + 1; j < levels; ++j) {
                    const double s = m.at(i, j) + m.at(j, i);
                    m.p[static_cast<std::size_t>(i) * levels + j] = s;
                    m.p[static_cast<std::size_t>(j) * levels + i] = s;
                }
                m.p[static_cast<std::size_t>(i) * levels + i] *= 2.0;
            }
        }
        double total = 0.0;
        for (double v : m.p) total += v;
        for (double& v : m.p) v /= total;
        result.push_back(std::move(m));
    }
    return result;
}

const std::array<const char*, 13> kHaralickNames = {
    "angular_second_moment", "contrast", "correlation", "sum_of_squares_variance",
    "inverse_difference_moment", "sum_average", "sum_variance", "sum_entropy",
    "entropy", "difference_variance", "difference_entropy", "info_correlation_1",
    "info_correlation_2"};

HaralickVector haralick_of_glcm(const GlcmMatrix& m) {
    const int L = m.levels;
    std::vector<double> px(L, 0.0), py(L, 0.0);
    std::vector<double> psum(2 * L - 1, 0.0), pdiff(L, 0.0);
    for (int i = 0; i < L; ++i) {
        for (int j = 0; j < L; ++j) {
            const double p = m.at(i, j);
            px[i] += p;
            py[j] += p;
            psum[i + j] += p;
            pdiff[std::abs(i - j)] += p;
        }
    }
    double mu_x = 0.0, mu_y = 0.0;
    for (int i = 0; i < L; ++i) {
        mu_x += i * px[i];
        mu_y += i * py[i];
    }
    double var_x = 0.0, var_y = 0.0;
    for (int i = 0; i < L; ++i) {
        var_x += (i - mu_x) * (i - mu_x) * px[i];
        var_y += (i - mu_y) * (i - mu_y) * py[i];
    }

    HaralickVector f{};
    double cross = 0.0;
    for (int i = 0; i < L; ++i) {
        for (int j = 0; j < L; ++j) {
            const double p = m.at(i, j);
            f[0] += p * p;
            f[3] += (i - mu_x) * (i - mu_x) * p;
            f[4] += p / (1.0 + (i - j) * (i - j));
            f[8] -= p * std::log(p + kLogGuard);
            cross += i * j * p;
        }
    }
    // correlation of a constant image is taken as perfect
    const double sd = std::sqrt(var_x * var_y);
    f[2] = sd > 0.0 ? (cross - mu_x * mu_y) / sd : 1.0;

    for (int k = 0; k < 2 * L - 1; ++k) {
        f[5] += k * psum[k];
        f[7] -= psum[k] * std::log(psum[k] + kLogGuard);
    }
    for (int k = 0; k < 2 * L - 1; ++k) {
        f[6] += (k - f[5]) * (k - f[5]) * psum[k];
    }
    double mu_d = 0.0;
    for (int k = 0; k < L; ++k) {
        f[1] += static_cast<double>(k) * k * pdiff[k];
        mu_d += k * pdiff[k];
        f[10] -= pdiff[k] * std::log(pdiff[k] + kLogGuard);
    }
    for (int k = 0; k < L; ++k) {
        f[9] += (k - mu_d) * (k - mu_d) * pdiff[k];
    }

    double hx = 0.0, hy = 0.0, hxy1 = 0.0, hxy2 = 0.0;
    for (int i = 0; i < L; ++i) {
        hx -= px[i] * std::log(px[i] + kLogGuard);
        hy -= py[i] * std::log(py[i] + kLogGuard);
        for (int j = 0; j < L; ++j) {
            const double prod = px[i] * py[j];
            hxy1 -= m.at(i, j) * std::log(prod + kLogGuard);
            hxy2 -= prod * std::log(prod + kLogGuard);
        }
    }
    const double hmax = std::max(hx, hy);
    f[11] = hmax > 0.0 ? (f[8] - hxy1) / hmax : 0.0;
    f[12] = std::sqrt(std::max(0.0, 1.0 - std::exp(-2.0 * (hxy2 - f[8]))));

    // the log guard can leave entropies a hair below zero on degenerate input
    for (int k : {7, 8, 10}) f[k] = std::max(0.0, f[k]);
    return f;
}

HaralickVector haralick_features(const ImageTensor& img, const GlcmConfig& cfg,
                                 std::optional<Roi> roi) {
    const std::vector<GlcmMatrix> mats = glcm(img, cfg, roi);
    HaralickVector mean{};
    for (const GlcmMatrix& m : mats) {
        const HaralickVector f = haralick_of_glcm(m);
        for (std::size_t k = 0; k < f.size(); ++k) mean[k] += f[k];
    }
    for (double& v : mean) v /= static_cast<double>(mats.size());
    return mean;
}

double haralick_distance_vec(const HaralickVector& test, const HaralickVector& ref) {
    double acc = 0.0;
    for (std::size_t k = 0; k < test.size(); ++k) {
        const double scale = std::abs(ref[k]) + 1e-8;
        const double d = (test[k] - ref[k]) / scale;
        acc += d * d;
    }
    return std::sqrt(acc / static_cast<double>(test.size()));
}

double haralick_distance(const ImageTensor& test, const ImageTensor& ref,
                         const GlcmConfig& cfg, std::optional<Roi> roi) {
    return haralick_distance_vec(haralick_features(test, cfg, roi),
                                 haralick_features(ref, cfg, roi));
}

double rmse(const ImageTensor& a, const ImageTensor& b) {
    if (!a.same_shape(b)) throw std::invalid_argument("rmse: shape mismatch");
    double acc = 0.0;
    for (std::size_t i = 0; i < a.data.size(); ++i) {
        const double d = static_cast<double>(a.data[i]) - b.data[i];
        acc += d * d;
    }
    return std::sqrt(acc / static_cast<double>(a.data.size()));
}

}  // namespace i3sb
