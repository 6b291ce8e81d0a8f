#pragma once

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "i3sb/posterior.hpp"
#include "i3sb/predictor.hpp"

namespace i3sb {

struct SamplerConfig {
    int steps = 20;  // must match the schedule grid
    GnPolicy policy;
    std::uint64_t seed = 0;
    bool record_trajectory = false;
    // optional clamp applied to the clean estimate each step; off by default
    std::optional<std::pair<float, float>> clamp_x0_hat;
};

enum class StepBranch { ddpm, pg, deterministic_final };

// One loop iteration: the state X_n was current, the posterior produced
// X_{n-1}. coeffs holds the weights applied to (x0_hat, X_n, X_N).
struct TrajectoryStep {
    int step = 0;
    StepBranch branch = StepBranch::ddpm;
    PosteriorCoeffs coeffs;
    std::vector<double> x0_hat;
    std::vector<double> state;
};

struct TrajectoryRecord {
    std::uint32_t height = 0, width = 0, channels = 1;
    std::vector<TrajectoryStep> steps;
};

// The generation loop, counter n = N..1:
//   x0_hat = X_n - sigma_n * eps(X_n, t_n, y)        with y fixed to xN
//   n == N     -> X_{n-1} ~ one-step-back posterior (the bridge to the
//                 corrupt endpoint is Markovian there)
//   1 < n < N  -> X_{n-1} ~ generalized posterior with the policy's g
//   n == 1     -> X_0 = x0_hat, no draw
// The trajectory is kept in double precision; exactly one Gaussian tensor
// draw is consumed per stochastic step and none when the step variance is
// zero. Bit-reproducible for a fixed (xN, seed, config, predictor).
ImageTensor generate(const ImageTensor& xN, const EpsilonPredictor& eps,
                     const Schedule& s, const SamplerConfig& cfg,
                     TrajectoryRecord* record = nullptr);

// Plain-text manifest: one "step branch a b c g2" line per step.
std::string trajectory_manifest(const TrajectoryRecord& rec);

// Manifest plus per-step x0_hat/state snapshots in the tensor container.
void write_trajectory(const TrajectoryRecord& rec, const std::string& basepath);

std::string to_string(StepBranch b);

// Deliberate defects injected by the diagnostics harness to prove the
// statistical checks have power. Never used by generate().
struct MutationSpec {
    enum class Kind { none, scale_b, skip_draw };
    Kind kind = Kind::none;
    double factor = 1.1;  // multiplier on the x_next weight for scale_b
};

struct StepStats {
    int n = 0;
    double expected_mean = 0.0, expected_variance = 0.0;
    double observed_mean = 0.0, observed_variance = 0.0;
    double z_mean = 0.0;       // standard errors between observed and expected mean
    double var_rel_err = 0.0;  // observed/expected variance - 1
    double var_tol = 0.0;      // 4 * sqrt(2 / (M - 1))
    bool pass = false;
};

struct MarginalReport {
    double x0 = 0.0, xN = 0.0;
    int trajectories = 0;
    bool low_power = false;  // fewer trajectories than the recommended floor
    bool pass = false;
    std::vector<StepStats> steps;
};

// Runs `trajectories` scalar trajectories with an exact clean estimate and
// compares the empirical mean/variance of every interior state against the
// bridge marginal. PASS iff all |z_mean| <= 4 and every variance ratio is
// within 4 standard errors (normal approximation to the chi-square).
MarginalReport marginal_check(double x0, double xN, const Schedule& s,
                              const SamplerConfig& cfg, int trajectories,
                              const MutationSpec& mutation = {});

}  // namespace i3sb
