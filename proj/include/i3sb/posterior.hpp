#pragma once

#include <vector>

#include "i3sb/rng.hpp"
#include "i3sb/schedule.hpp"
#include "i3sb/tensor.hpp"

namespace i3sb {

// Isotropic Gaussian over images: N(mean, variance * I).
struct GaussianSpec {
    ImageTensor mean;
    double variance = 0.0;
};

// One generative step of the generalized posterior:
//   mean = a * x0_hat + b * x_next + c * x_corrupt,  variance = g2.
// a + b + c = 1 up to rounding for every admissible g.
struct PosteriorCoeffs {
    double a = 0.0;
    double b = 0.0;
    double c = 0.0;
    double g2 = 0.0;
    int step_index = 0;
};

enum class GnKind { i2sb_equivalent, step_function, custom_table };

// Per-step noise policy. i2sb_equivalent reproduces the Markovian sampler
// exactly; step_function zeroes the noise for n/N <= r and uses the
// Markovian value above; custom_table scales the Markovian value by an
// arbitrary per-step multiplier in [0, 1] (indexed by target step n, entry
// table[n-1], length N-1).
struct GnPolicy {
    GnKind kind = GnKind::step_function;
    double r = 0.2;
    std::vector<double> table;

    void validate(int steps) const;
};

// --- scalar layer: the closed-form weights, double precision ---

struct QMoments {
    double w0 = 0.0;       // weight of the clean endpoint
    double wN = 0.0;       // weight of the corrupt endpoint
    double variance = 0.0;
};

// Bridge marginal of X_n given both endpoints: mean weights
// (sbar2_n, sigma2_n) / (sigma2_n + sbar2_n), variance
// sigma2_n * sbar2_n / (sigma2_n + sbar2_n). Valid for 0 <= n <= N.
QMoments q_moments(const Schedule& s, int n);

struct DdpmMoments {
    double w0 = 0.0;      // weight of x0_hat
    double wnext = 0.0;   // weight of x_{n+1}
    double variance = 0.0;
};

// One-step-back posterior of X_n given (x0_hat, X_{n+1}): weights
// (alpha2_n, sigma2_n) / (alpha2_n + sigma2_n). Valid for 0 <= n < N.
DdpmMoments ddpm_moments(const Schedule& s, int n);

// Largest admissible g_n: sigma_n * sbar_n / sqrt(sigma2_n + sbar2_n);
// beyond it the shared radicand in the coefficient formulas goes negative.
double gn_bound(const Schedule& s, int n);

// Markovian-equivalent noise level sigma_n * alpha_n / sqrt(sigma2_n +
// alpha2_n); always within gn_bound since alpha_n <= sbar_n.
double gn_markovian(const Schedule& s, int n);

// Policy value for target step n (1 <= n < N). Asserts the bound.
double gn_value(const Schedule& s, int n, const GnPolicy& policy);

// Coefficients of the generalized posterior for target step n with noise
// level g. Requires 1 <= n < N - 1 had sbar_{n+1} > 0, i.e. n + 1 < N; the
// step down from X_N itself is Markovian and must use ddpm_moments. The
// shared radicand sigma2_n * sbar2_n - g^2 (sigma2_n + sbar2_n) is computed
// once; tiny negative rounding (within -1e-12 relative) is clamped to zero,
// anything worse is a constraint violation.
PosteriorCoeffs pg_coeffs(const Schedule& s, int n, double g);

// --- tensor layer ---

GaussianSpec q_marginal(const Schedule& s, int n, const ImageTensor& x0,
                        const ImageTensor& xN);
GaussianSpec ddpm_posterior(const Schedule& s, int n, const ImageTensor& x0_hat,
                            const ImageTensor& x_next);
GaussianSpec pg_posterior(const PosteriorCoeffs& coeffs, const ImageTensor& x0_hat,
                          const ImageTensor& x_next, const ImageTensor& xN);

// mean + sqrt(variance) * z with one z per element drawn in row-major
// order; variance 0 returns the mean bit-exactly and consumes no draws.
ImageTensor sample_gaussian(const GaussianSpec& spec, RandomStream& rng);

}  // namespace i3sb
