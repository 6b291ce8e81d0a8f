#include "i3sb/posterior.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace i3sb {

namespace {

void require_step(const Schedule& s, int n, int lo, int hi, const char* who) {
    if (n < lo || n > hi) {
        throw std::out_of_range(std::string(who) + ": step " + std::to_string(n) +
                                " outside [" + std::to_string(lo) + ", " +
                                std::to_string(hi) + "] for N=" +
                                std::to_string(s.steps()));
    }
}

void require_same_shape(const ImageTensor& a, const ImageTensor& b, const char* who) {
    if (!a.same_shape(b)) {
        throw std::invalid_argument(std::string(who) + ": shape mismatch");
    }
}

}  // namespace

void GnPolicy::validate(int steps) const {
    if (!(r >= 0.0 && r <= 1.0)) {
        throw std::invalid_argument("GnPolicy: r must lie in [0, 1]");
    }
    if (kind == GnKind::custom_table) {
        if (table.size() != static_cast<std::size_t>(steps) - 1) {
            throw std::invalid_argument("GnPolicy: table must have N-1 entries");
        }
        for (double k : table) {
            if (!(k >= 0.0 && k <= 1.0)) {
                throw std::invalid_argument("GnPolicy: table entries must lie in [0, 1]");
            }
        }
    }
}

QMoments q_moments(const Schedule& s, int n) {
    require_step(s, n, 0, s.steps(), "q_moments");
    const double s2 = s.sigma2[n];
    const double b2 = s.sbar2[n];
    const double denom = s2 + b2;
    return {b2 / denom, s2 / denom, s2 * b2 / denom};
}

DdpmMoments ddpm_moments(const Schedule& s, int n) {
    require_step(s, n, 0, s.steps() - 1, "ddpm_moments");
    const double s2 = s.sigma2[n];
    const double a2 = s.alpha2[n];
    const double denom = a2 + s2;
    return {a2 / denom, s2 / denom, s2 * a2 / denom};
}

double gn_bound(const Schedule& s, int n) {
    require_step(s, n, 1, s.steps() - 1, "gn_bound");
    return std::sqrt(q_moments(s, n).variance);
}

double gn_markovian(const Schedule& s, int n) {
    require_step(s, n, 1, s.steps() - 1, "gn_markovian");
    const double s2 = s.sigma2[n];
    const double a2 = s.alpha2[n];
    return std::sqrt(s2 * a2 / (s2 + a2));
}

double gn_value(const Schedule& s, int n, const GnPolicy& policy) {
    require_step(s, n, 1, s.steps() - 1, "gn_value");
    policy.validate(s.steps());
    const double base = gn_markovian(s, n);
    double g = base;
    switch (policy.kind) {
        case GnKind::i2sb_equivalent:
            break;
        case GnKind::step_function:
            // k_n = 0 for n/N <= r, 1 above; the boundary uses <=.
            g = (static_cast<double>(n) / s.steps() <= policy.r) ? 0.0 : base;
            break;
        case GnKind::custom_table:
            g = policy.table[n - 1] * base;
            break;
    }
    const double bound = gn_bound(s, n);
    if (g > bound * (1.0 + 1e-12)) {
        throw std::logic_error("gn_value: policy value exceeds admissible bound");
    }
    return g;
}

PosteriorCoeffs pg_coeffs(const Schedule& s, int n, double g) {
    require_step(s, n, 1, s.steps() - 1, "pg_coeffs");
    if (n + 1 == s.steps()) {
        throw std::domain_error(
            "pg_coeffs: the step down from the corrupt endpoint is Markovian; "
            "use ddpm_posterior");
    }
    if (!(g >= 0.0)) throw std::invalid_argument("pg_coeffs: g must be >= 0");
    const double s2 = s.sigma2[n];
    const double b2 = s.sbar2[n];
    const double scale = s2 * b2;
    double radicand = scale - g * g * (s2 + b2);
    if (radicand < -1e-12 * scale) {
        throw std::invalid_argument("pg_coeffs: g exceeds the admissible bound");
    }
    if (radicand < 0.0) radicand = 0.0;
    const double shared = std::sqrt(radicand) /
                          std::sqrt(s.sigma2[n + 1] * s.sbar2[n + 1]);
    const QMoments qn = q_moments(s, n);
    const QMoments qnext = q_moments(s, n + 1);
    PosteriorCoeffs c;
    c.a = qn.w0 - qnext.w0 * shared;
    c.b = shared;
    c.c = qn.wN - qnext.wN * shared;
    c.g2 = g * g;
    c.step_index = n;
    return c;
}

GaussianSpec q_marginal(const Schedule& s, int n, const ImageTensor& x0,
                        const ImageTensor& xN) {
    require_same_shape(x0, xN, "q_marginal");
    const QMoments m = q_moments(s, n);
    GaussianSpec spec;
    spec.mean = x0;
    for (std::size_t i = 0; i < x0.data.size(); ++i) {
        spec.mean.data[i] = static_cast<float>(m.w0 * x0.data[i] + m.wN * xN.data[i]);
    }
    spec.variance = m.variance;
    return spec;
}

GaussianSpec ddpm_posterior(const Schedule& s, int n, const ImageTensor& x0_hat,
                            const ImageTensor& x_next) {
    require_same_shape(x0_hat, x_next, "ddpm_posterior");
    const DdpmMoments m = ddpm_moments(s, n);
    GaussianSpec spec;
    spec.mean = x0_hat;
    for (std::size_t i = 0; i < x0_hat.data.size(); ++i) {
        spec.mean.data[i] =
            static_cast<float>(m.w0 * x0_hat.data[i] + m.wnext * x_next.data[i]);
    }
    spec.variance = m.variance;
    return spec;
}

GaussianSpec pg_posterior(const PosteriorCoeffs& coeffs, const ImageTensor& x0_hat,
                          const ImageTensor& x_next, const ImageTensor& xN) {
    require_same_shape(x0_hat, x_next, "pg_posterior");
    require_same_shape(x0_hat, xN, "pg_posterior");
    GaussianSpec spec;
    spec.mean = x0_hat;
    for (std::size_t i = 0; i < x0_hat.data.size(); ++i) {
        spec.mean.data[i] = static_cast<float>(coeffs.a * x0_hat.data[i] +
                                               coeffs.b * x_next.data[i] +
                                               coeffs.c * xN.data[i]);
    }
    spec.variance = coeffs.g2;
    return spec;
}

ImageTensor sample_gaussian(const GaussianSpec& spec, RandomStream& rng) {
    if (!(spec.variance >= 0.0)) {
        throw std::invalid_argument("sample_gaussian: negative variance");
    }
    ImageTensor out = spec.mean;
    if (spec.variance == 0.0) return out;
    const double sd = std::sqrt(spec.variance);
    for (float& v : out.data) {
        v = static_cast<float>(static_cast<double>(v) + sd * rng.normal());
    }
    return out;
}

}  // namespace i3sb
