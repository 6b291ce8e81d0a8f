#pragma once

#include <string>
#include <vector>

#include "i3sb/sampler.hpp"

namespace i3sb {

// Relative 1e-6 perturbation applied to one posterior weight by the
// harness; the identity suite must flag every one of them.
enum class CoeffMutation { none, weight_x0, weight_xnext, weight_xN };

struct CoeffIdentityReport {
    int trials = 0;
    std::uint64_t seed = 0;
    CoeffMutation mutation = CoeffMutation::none;
    // worst absolute violation per identity across all trials
    double max_mean_violation = 0.0;       // weight blend vs marginal mean
    double max_var_violation = 0.0;        // b^2 var + g^2 vs marginal variance
    double max_sum_violation = 0.0;        // a + b + c vs 1
    double max_reduction_violation = 0.0;  // markovian g vs one-step-back weights
    double max_bound_violation = 0.0;      // policy value vs admissible cap
    double threshold = 1e-9;
    bool pass = false;
};

// Random (rate shape, N in [2,64], step, admissible g) configurations.
CoeffIdentityReport coeff_identity_suite(int trials, std::uint64_t seed,
                                         CoeffMutation mutation = CoeffMutation::none);

struct MarginalSuiteEntry {
    std::string label;
    MarginalReport report;
};

struct MarginalSuiteReport {
    int trajectories = 0;
    bool pass = false;
    bool low_power = false;
    std::vector<MarginalSuiteEntry> entries;
};

// Full default matrix: both policies, r in {0, 0.2, 0.5, 1}, N in {4, 20},
// both rate shapes; scalar endpoints 0 -> 1.
MarginalSuiteReport marginal_suite(int trajectories, std::uint64_t seed,
                                   const MutationSpec& mutation = {});

struct EndToEndBin {
    double x1_lo = 0.0, x1_hi = 0.0;
    int count = 0;
    double z_mean = 0.0;  // generated mean vs analytic conditional mean, in SE
    double observed_residual_variance = 0.0;
    double analytic_variance = 0.0;
};

struct EndToEndReport {
    int steps = 0;
    GnKind policy = GnKind::i2sb_equivalent;
    int samples = 0;
    double max_abs_z = 0.0;
    bool mean_pass = false;  // every bin within 4 standard errors
    std::vector<EndToEndBin> bins;
};

// Draws pairs from the model, restores each corrupted scalar with the
// analytic oracle, and compares the generated clean values against the
// model's true posterior, binned by the corrupted value. Conditional means
// are asserted; conditional variances are reported only.
EndToEndReport end_to_end_gaussian(const GaussianPairModel& m, const Schedule& s,
                                   const SamplerConfig& cfg, int samples);

std::string to_text(const CoeffIdentityReport& r);
std::string to_csv(const CoeffIdentityReport& r);
std::string to_text(const MarginalSuiteReport& r);
std::string to_csv(const MarginalSuiteReport& r);
std::string to_text(const EndToEndReport& r);
std::string to_csv(const EndToEndReport& r);

}  // namespace i3sb
