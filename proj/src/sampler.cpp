#include "i3sb/sampler.hpp"

#include <cmath>
#include <cstdio>
#include <sstream>
#include <stdexcept>

#include "i3sb/tensor_io.hpp"

namespace i3sb {

namespace {

bool all_finite(const std::vector<double>& v) {
    for (double x : v) {
        if (!std::isfinite(x)) return false;
    }
    return true;
}

}  // namespace

ImageTensor generate(const ImageTensor& xN, const EpsilonPredictor& eps,
                     const Schedule& s, const SamplerConfig& cfg,
                     TrajectoryRecord* record) {
    xN.validate();
    if (!xN.all_finite()) {
        throw std::invalid_argument("generate: corrupted input contains non-finite values");
    }
    if (cfg.steps != s.steps()) {
        throw std::invalid_argument("generate: sampler steps do not match the schedule grid");
    }
    if (cfg.steps < 1) throw std::invalid_argument("generate: steps must be >= 1");
    cfg.policy.validate(s.steps());
    if (cfg.clamp_x0_hat && !(cfg.clamp_x0_hat->first < cfg.clamp_x0_hat->second)) {
        throw std::invalid_argument("generate: clamp bounds out of order");
    }

    const int N = s.steps();
    const std::size_t count = xN.size();
    std::vector<double> state(xN.data.begin(), xN.data.end());
    const std::vector<double> corrupt = state;
    std::vector<double> eps_out(count), x0_hat(count);
    RandomStream rng(cfg.seed);

    if (record) {
        record->height = xN.height;
        record->width = xN.width;
        record->channels = xN.channels;
        record->steps.clear();
        record->steps.reserve(N);
    }

    for (int n = N; n >= 1; --n) {
        PredictView view;
        view.x_t = state.data();
        view.x_corrupt = corrupt.data();
        view.height = xN.height;
        view.width = xN.width;
        view.channels = xN.channels;
        view.step = n;
        view.t = s.grid.t[n];
        view.sigma_t = std::sqrt(s.sigma2[n]);
        view.sigma_bar_t = std::sqrt(s.sbar2[n]);
        eps.eval(view, eps_out);

        for (std::size_t i = 0; i < count; ++i) {
            x0_hat[i] = state[i] - view.sigma_t * eps_out[i];
        }
        if (cfg.clamp_x0_hat) {
            const double lo = cfg.clamp_x0_hat->first;
            const double hi = cfg.clamp_x0_hat->second;
            for (double& v : x0_hat) v = std::clamp(v, lo, hi);
        }
        if (!all_finite(x0_hat)) {
            throw std::runtime_error("generate: non-finite clean estimate at step " +
                                     std::to_string(n));
        }

        StepBranch branch;
        PosteriorCoeffs pc;
        if (n == N && N > 1) {
            branch = StepBranch::ddpm;
            const DdpmMoments d = ddpm_moments(s, n - 1);
            pc.a = d.w0;
            pc.b = d.wnext;
            pc.c = 0.0;
            pc.g2 = d.variance;
            pc.step_index = n - 1;
        } else if (n > 1) {
            branch = StepBranch::pg;
            pc = pg_coeffs(s, n - 1, gn_value(s, n - 1, cfg.policy));
        } else {
            branch = StepBranch::deterministic_final;
            pc.a = 1.0;
            pc.b = 0.0;
            pc.c = 0.0;
            pc.g2 = 0.0;
            pc.step_index = 0;
        }

        for (std::size_t i = 0; i < count; ++i) {
            state[i] = pc.a * x0_hat[i] + pc.b * state[i] + pc.c * corrupt[i];
        }
        if (pc.g2 > 0.0) {
            const double sd = std::sqrt(pc.g2);
            for (double& v : state) v += sd * rng.normal();
        }
        if (!all_finite(state)) {
            throw std::runtime_error("generate: non-finite state after step " +
                                     std::to_string(n));
        }

        if (record) {
            TrajectoryStep rec;
            rec.step = n;
            rec.branch = branch;
            rec.coeffs = pc;
            rec.x0_hat = x0_hat;
            rec.state = state;
            record->steps.push_back(std::move(rec));
        }
    }

    ImageTensor out = xN;
    for (std::size_t i = 0; i < count; ++i) {
        out.data[i] = static_cast<float>(state[i]);
    }
    return out;
}

std::string to_string(StepBranch b) {
    switch (b) {
        case StepBranch::ddpm: return "ddpm";
        case StepBranch::pg: return "pg";
        case StepBranch::deterministic_final: return "deterministic-final";
    }
    return "?";
}

std::string trajectory_manifest(const TrajectoryRecord& rec) {
    std::ostringstream os;
    os << "step branch a b c g2\n";
    char line[256];
    for (const TrajectoryStep& st : rec.steps) {
        std::snprintf(line, sizeof(line), "%d %s %.17g %.17g %.17g %.17g\n", st.step,
                      to_string(st.branch).c_str(), st.coeffs.a, st.coeffs.b,
                      st.coeffs.c, st.coeffs.g2);
        os << line;
    }
    return os.str();
}

void write_trajectory(const TrajectoryRecord& rec, const std::string& basepath) {
    {
        std::FILE* f = std::fopen((basepath + "_manifest.txt").c_str(), "wb");
        if (!f) throw std::runtime_error("write_trajectory: cannot open manifest");
        const std::string text = trajectory_manifest(rec);
        std::fwrite(text.data(), 1, text.size(), f);
        std::fclose(f);
    }
    char suffix[64];
    for (const TrajectoryStep& st : rec.steps) {
        ImageTensor snap(rec.height, rec.width, rec.channels);
        for (std::size_t i = 0; i < st.x0_hat.size(); ++i) {
            snap.data[i] = static_cast<float>(st.x0_hat[i]);
        }
        std::snprintf(suffix, sizeof(suffix), "_x0hat_%03d.tnsr", st.step);
        write_tensor(snap, basepath + suffix);
        for (std::size_t i = 0; i < st.state.size(); ++i) {
            snap.data[i] = static_cast<float>(st.state[i]);
        }
        std::snprintf(suffix, sizeof(suffix), "_state_%03d.tnsr", st.step);
        write_tensor(snap, basepath + suffix);
    }
}

namespace {

// Scalar replica of the generation loop with an exact clean estimate and a
// switchable defect; exists solely so the marginal check can demonstrate it
// detects broken samplers. The clean path below always runs generate().
void run_mutated_scalar(double x0, double xN, const Schedule& s,
                        const SamplerConfig& cfg, std::uint64_t seed,
                        const MutationSpec& mutation, std::vector<double>& states) {
    const int N = s.steps();
    RandomStream rng(seed);
    double state = xN;
    states.assign(N + 1, 0.0);
    states[N] = xN;
    for (int n = N; n >= 1; --n) {
        const double x0_hat = x0;
        PosteriorCoeffs pc;
        bool draw = true;
        if (n == N && N > 1) {
            const DdpmMoments d = ddpm_moments(s, n - 1);
            pc.a = d.w0;
            pc.b = d.wnext;
            pc.c = 0.0;
            pc.g2 = d.variance;
            if (mutation.kind == MutationSpec::Kind::skip_draw) draw = false;
        } else if (n > 1) {
            pc = pg_coeffs(s, n - 1, gn_value(s, n - 1, cfg.policy));
            if (mutation.kind == MutationSpec::Kind::scale_b) pc.b *= mutation.factor;
        } else {
            pc.a = 1.0;
            pc.b = 0.0;
            pc.c = 0.0;
            pc.g2 = 0.0;
        }
        state = pc.a * x0_hat + pc.b * state + pc.c * xN;
        if (draw && pc.g2 > 0.0) state += std::sqrt(pc.g2) * rng.normal();
        states[n - 1] = state;
    }
}

}  // namespace

MarginalReport marginal_check(double x0, double xN, const Schedule& s,
                              const SamplerConfig& cfg, int trajectories,
                              const MutationSpec& mutation) {
    if (trajectories < 1) {
        throw std::invalid_argument("marginal_check: need at least one trajectory");
    }
    const int N = s.steps();
    MarginalReport report;
    report.x0 = x0;
    report.xN = xN;
    report.trajectories = trajectories;
    report.low_power = trajectories < 10'000;

    std::vector<double> sums(N + 1, 0.0), sumsq(N + 1, 0.0);

    if (mutation.kind == MutationSpec::Kind::none) {
        ImageTensor start(1, 1);
        start.data[0] = static_cast<float>(xN);
        ImageTensor clean(1, 1);
        clean.data[0] = static_cast<float>(x0);
        const auto oracle = cheat_oracle(clean, s.beta);
        SamplerConfig run = cfg;
        run.record_trajectory = true;
        TrajectoryRecord rec;
        for (int i = 0; i < trajectories; ++i) {
            run.seed = derive_seed(cfg.seed, static_cast<std::uint64_t>(i));
            (void)generate(start, *oracle, s, run, &rec);
            for (const TrajectoryStep& st : rec.steps) {
                const double v = st.state[0];
                sums[st.step - 1] += v;
                sumsq[st.step - 1] += v * v;
            }
        }
    } else {
        std::vector<double> states;
        for (int i = 0; i < trajectories; ++i) {
            run_mutated_scalar(x0, xN, s, cfg,
                               derive_seed(cfg.seed, static_cast<std::uint64_t>(i)),
                               mutation, states);
            for (int n = 0; n < N; ++n) {
                sums[n] += states[n];
                sumsq[n] += states[n] * states[n];
            }
        }
    }

    const double M = static_cast<double>(trajectories);
    const double var_tol = 4.0 * std::sqrt(2.0 / (M - 1.0));
    report.pass = true;
    for (int n = 1; n <= N - 1; ++n) {
        const QMoments q = q_moments(s, n);
        StepStats st;
        st.n = n;
        st.expected_mean = q.w0 * x0 + q.wN * xN;
        st.expected_variance = q.variance;
        st.observed_mean = sums[n] / M;
        st.observed_variance =
            (sumsq[n] - M * st.observed_mean * st.observed_mean) / (M - 1.0);
        st.z_mean = (st.observed_mean - st.expected_mean) /
                    std::sqrt(st.expected_variance / M);
        st.var_rel_err = st.observed_variance / st.expected_variance - 1.0;
        st.var_tol = var_tol;
        st.pass = std::abs(st.z_mean) <= 4.0 && std::abs(st.var_rel_err) <= var_tol;
        report.pass = report.pass && st.pass;
        report.steps.push_back(st);
    }
    return report;
}

}  // namespace i3sb
