#pragma once

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <string>

#include "i3sb/rng.hpp"
#include "i3sb/tensor.hpp"

namespace testutil {

// Adaptive Simpson quadrature; independent oracle for the closed-form
// schedule integrals.
inline double simpson(const std::function<double(double)>& f, double a, double b) {
    const double m = 0.5 * (a + b);
    return (b - a) / 6.0 * (f(a) + 4.0 * f(m) + f(b));
}

inline double adaptive_simpson(const std::function<double(double)>& f, double a,
                               double b, double eps, int depth = 28) {
    const double m = 0.5 * (a + b);
    const double whole = simpson(f, a, b);
    const double left = simpson(f, a, m);
    const double right = simpson(f, m, b);
    if (depth <= 0 || std::abs(left + right - whole) < 15.0 * eps) {
        return left + right + (left + right - whole) / 15.0;
    }
    return adaptive_simpson(f, a, m, eps / 2.0, depth - 1) +
           adaptive_simpson(f, m, b, eps / 2.0, depth - 1);
}

inline i3sb::ImageTensor random_tensor(i3sb::RandomStream& rng, std::uint32_t h,
                                       std::uint32_t w, std::uint32_t c = 1,
                                       float lo = -1.0f, float hi = 1.0f) {
    i3sb::ImageTensor t(h, w, c, lo, hi);
    for (float& v : t.data) {
        v = static_cast<float>(lo + (hi - lo) * rng.uniform());
    }
    return t;
}

// Gauss-Jordan with partial pivoting for small dense systems; a is n*n
// row-major and is consumed. Returns x with A x = b.
inline std::vector<double> solve_linear(std::vector<double> a, std::vector<double> b,
                                        int n) {
    for (int col = 0; col < n; ++col) {
        int pivot = col;
        for (int r = col + 1; r < n; ++r) {
            if (std::abs(a[r * n + col]) > std::abs(a[pivot * n + col])) pivot = r;
        }
        for (int c = 0; c < n; ++c) std::swap(a[col * n + c], a[pivot * n + c]);
        std::swap(b[col], b[pivot]);
        const double d = a[col * n + col];
        for (int c = 0; c < n; ++c) a[col * n + c] /= d;
        b[col] /= d;
        for (int r = 0; r < n; ++r) {
            if (r == col) continue;
            const double f = a[r * n + col];
            if (f == 0.0) continue;
            for (int c = 0; c < n; ++c) a[r * n + c] -= f * a[col * n + c];
            b[r] -= f * b[col];
        }
    }
    return b;
}

// Matrix inverse via the same elimination; used for regression standard errors.
inline std::vector<double> invert_matrix(std::vector<double> a, int n) {
    std::vector<double> inv(static_cast<std::size_t>(n) * n, 0.0);
    for (int i = 0; i < n; ++i) inv[i * n + i] = 1.0;
    for (int col = 0; col < n; ++col) {
        int pivot = col;
        for (int r = col + 1; r < n; ++r) {
            if (std::abs(a[r * n + col]) > std::abs(a[pivot * n + col])) pivot = r;
        }
        for (int c = 0; c < n; ++c) {
            std::swap(a[col * n + c], a[pivot * n + c]);
            std::swap(inv[col * n + c], inv[pivot * n + c]);
        }
        const double d = a[col * n + col];
        for (int c = 0; c < n; ++c) {
            a[col * n + c] /= d;
            inv[col * n + c] /= d;
        }
        for (int r = 0; r < n; ++r) {
            if (r == col) continue;
            const double f = a[r * n + col];
            if (f == 0.0) continue;
            for (int c = 0; c < n; ++c) {
                a[r * n + c] -= f * a[col * n + c];
                inv[r * n + c] -= f * inv[col * n + c];
            }
        }
    }
    return inv;
}

// Unique scratch directory under the system temp root; removed on destruction.
class ScratchDir {
public:
    explicit ScratchDir(const std::string& tag) {
        path_ = std::filesystem::temp_directory_path() /
                (tag + "_" + std::to_string(::getpid()));
        std::filesystem::remove_all(path_);
        std::filesystem::create_directories(path_);
    }
    ~ScratchDir() {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    std::string file(const std::string& name) const { return (path_ / name).string(); }
    const std::filesystem::path& path() const { return path_; }

private:
    std::filesystem::path path_;
};

}  // namespace testutil
