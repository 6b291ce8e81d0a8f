#include "i3sb/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>

namespace i3sb {

namespace {

Schedule random_schedule(RandomStream& rng) {
    BetaSchedule beta;
    beta.kind = (rng.raw() & 1) ? BetaKind::symmetric_triangular : BetaKind::constant_rate;
    beta.beta_min = 1e-5 + 1e-3 * rng.uniform();
    beta.beta_max = 0.05 + 0.45 * rng.uniform();
    const int N = 2 + static_cast<int>(rng.raw() % 63);
    const GridSpacing spacing =
        (rng.raw() & 1) ? GridSpacing::quadratic : GridSpacing::uniform;
    return build_schedule(beta, build_grid(N, spacing, 1e-7));
}

void apply_mutation(PosteriorCoeffs& c, CoeffMutation mutation) {
    constexpr double kBump = 1.0 + 1e-6;
    switch (mutation) {
        case CoeffMutation::none: break;
        case CoeffMutation::weight_x0: c.a *= kBump; break;
        case CoeffMutation::weight_xnext: c.b *= kBump; break;
        case CoeffMutation::weight_xN: c.c *= kBump; break;
    }
}

}  // namespace

CoeffIdentityReport coeff_identity_suite(int trials, std::uint64_t seed,
                                         CoeffMutation mutation) {
    if (trials < 1) throw std::invalid_argument("coeff_identity_suite: trials must be >= 1");
    CoeffIdentityReport rep;
    rep.trials = trials;
    rep.seed = seed;
    rep.mutation = mutation;
    RandomStream rng(seed);
    for (int trial = 0; trial < trials; ++trial) {
        const Schedule s = random_schedule(rng);
        const int N = s.steps();

        // every policy value must respect the radicand cap
        for (int probe = 0; probe < 3; ++probe) {
            const int n = 1 + static_cast<int>(rng.raw() % (N - 1 > 0 ? N - 1 : 1));
            if (n >= N) continue;
            rep.max_bound_violation = std::max(
                rep.max_bound_violation, gn_markovian(s, n) - gn_bound(s, n));
        }
        if (N < 3) continue;

        const int n = 1 + static_cast<int>(rng.raw() % (N - 2));
        const double g = rng.uniform() * gn_bound(s, n);
        PosteriorCoeffs c = pg_coeffs(s, n, g);
        apply_mutation(c, mutation);

        const double x0 = -2.0 + 4.0 * rng.uniform();
        const double xN = -2.0 + 4.0 * rng.uniform();
        const QMoments qn = q_moments(s, n);
        const QMoments qnext = q_moments(s, n + 1);
        const double mu_n = qn.w0 * x0 + qn.wN * xN;
        const double mu_next = qnext.w0 * x0 + qnext.wN * xN;
        rep.max_mean_violation =
            std::max(rep.max_mean_violation,
                     std::abs(c.a * x0 + c.b * mu_next + c.c * xN - mu_n));
        rep.max_var_violation =
            std::max(rep.max_var_violation,
                     std::abs(c.b * c.b * qnext.variance + c.g2 - qn.variance));
        rep.max_sum_violation =
            std::max(rep.max_sum_violation, std::abs(c.a + c.b + c.c - 1.0));

        PosteriorCoeffs cm = pg_coeffs(s, n, gn_markovian(s, n));
        apply_mutation(cm, mutation);
        const DdpmMoments d = ddpm_moments(s, n);
        rep.max_reduction_violation = std::max(
            {rep.max_reduction_violation, std::abs(cm.a - d.w0),
             std::abs(cm.b - d.wnext), std::abs(cm.c)});
    }
    rep.pass = rep.max_mean_violation < rep.threshold &&
               rep.max_var_violation < rep.threshold &&
               rep.max_sum_violation < rep.threshold &&
               rep.max_reduction_violation < rep.threshold &&
               rep.max_bound_violation < rep.threshold;
    return rep;
}

MarginalSuiteReport marginal_suite(int trajectories, std::uint64_t seed,
                                   const MutationSpec& mutation) {
    MarginalSuiteReport rep;
    rep.trajectories = trajectories;
    rep.pass = true;
    rep.low_power = trajectories < 10'000;

    std::uint64_t config_index = 0;
    for (BetaKind kind : {BetaKind::symmetric_triangular, BetaKind::constant_rate}) {
        BetaSchedule beta{kind, 1e-4, 0.15};
        if (kind == BetaKind::constant_rate) beta.beta_min = 0.0;
        for (int N : {4, 20}) {
            const Schedule s = build_schedule(beta, build_grid(N, GridSpacing::quadratic, 1e-6));
            std::vector<GnPolicy> policies;
            policies.push_back({GnKind::i2sb_equivalent, 0.0, {}});
            for (double r : {0.0, 0.2, 0.5, 1.0}) {
                policies.push_back({GnKind::step_function, r, {}});
            }
            for (const GnPolicy& policy : policies) {
                SamplerConfig cfg;
                cfg.steps = N;
                cfg.policy = policy;
                cfg.seed = derive_seed(seed, config_index++);
                MarginalSuiteEntry entry;
                char label[96];
                if (policy.kind == GnKind::i2sb_equivalent) {
                    std::snprintf(label, sizeof(label), "%s_N%d_markovian",
                                  to_string(kind).c_str(), N);
                } else {
                    std::snprintf(label, sizeof(label), "%s_N%d_step_r%.1f",
                                  to_string(kind).c_str(), N, policy.r);
                }
                entry.label = label;
                entry.report = marginal_check(0.0, 1.0, s, cfg, trajectories, mutation);
                rep.pass = rep.pass && entry.report.pass;
                rep.entries.push_back(std::move(entry));
            }
        }
    }
    return rep;
}

EndToEndReport end_to_end_gaussian(const GaussianPairModel& m, const Schedule& s,
                                   const SamplerConfig& cfg, int samples) {
    m.validate();
    if (samples < 100) {
        throw std::invalid_argument("end_to_end_gaussian: too few samples");
    }
    EndToEndReport rep;
    rep.steps = s.steps();
    rep.policy = cfg.policy.kind;
    rep.samples = samples;

    const auto oracle = gaussian_analytic_oracle(m, s);
    RandomStream pair_rng(derive_seed(cfg.seed, 0x9e3779));
    std::vector<std::pair<double, double>> x1_gen(samples);  // (corrupted, restored)
    ImageTensor start(1, 1);
    SamplerConfig run = cfg;
    for (int i = 0; i < samples; ++i) {
        const double x0 = m.mu0 + std::sqrt(m.s0sq) * pair_rng.normal();
        const double x1 = x0 + std::sqrt(m.s1sq) * pair_rng.normal();
        start.data[0] = static_cast<float>(x1);
        run.seed = derive_seed(cfg.seed, static_cast<std::uint64_t>(i));
        const ImageTensor out = generate(start, *oracle, s, run);
        x1_gen[i] = {x1, out.data[0]};
    }

    // true posterior of the pair model
    const double precision = 1.0 / m.s0sq + 1.0 / m.s1sq;
    const double cond_var = 1.0 / precision;
    auto cond_mean = [&](double x1) {
        return (m.mu0 / m.s0sq + x1 / m.s1sq) * cond_var;
    };

    std::sort(x1_gen.begin(), x1_gen.end());
    const int kBins = 8;
    rep.mean_pass = true;
    for (int b = 0; b < kBins; ++b) {
        const int lo = static_cast<int>(static_cast<long>(samples) * b / kBins);
        const int hi = static_cast<int>(static_cast<long>(samples) * (b + 1) / kBins);
        EndToEndBin bin;
        bin.count = hi - lo;
        bin.x1_lo = x1_gen[lo].first;
        bin.x1_hi = x1_gen[hi - 1].first;
        double sum = 0.0, sumsq = 0.0;
        for (int i = lo; i < hi; ++i) {
            const double resid = x1_gen[i].second - cond_mean(x1_gen[i].first);
            sum += resid;
            sumsq += resid * resid;
        }
        const double mean = sum / bin.count;
        const double var = (sumsq - bin.count * mean * mean) / (bin.count - 1.0);
        bin.observed_residual_variance = var;
        bin.analytic_variance = cond_var;
        bin.z_mean = mean / std::sqrt(var / bin.count);
        rep.max_abs_z = std::max(rep.max_abs_z, std::abs(bin.z_mean));
        rep.mean_pass = rep.mean_pass && std::abs(bin.z_mean) <= 4.0;
        rep.bins.push_back(bin);
    }
    return rep;
}

namespace {

const char* to_cstr(CoeffMutation m) {
    switch (m) {
        case CoeffMutation::none: return "none";
        case CoeffMutation::weight_x0: return "weight_x0";
        case CoeffMutation::weight_xnext: return "weight_xnext";
        case CoeffMutation::weight_xN: return "weight_xN";
    }
    return "?";
}

}  // namespace

std::string to_text(const CoeffIdentityReport& r) {
    std::ostringstream os;
    os << "coefficient identity suite: trials=" << r.trials << " seed=" << r.seed
       << " mutation=" << to_cstr(r.mutation) << "\n";
    char line[160];
    const struct {
        const char* name;
        double value;
    } rows[] = {{"mean_composition", r.max_mean_violation},
                {"variance_composition", r.max_var_violation},
                {"weight_sum", r.max_sum_violation},
                {"markovian_reduction", r.max_reduction_violation},
                {"policy_bound", r.max_bound_violation}};
    for (const auto& row : rows) {
        std::snprintf(line, sizeof(line), "  %-22s max violation %.3e (threshold %.1e)\n",
                      row.name, row.value, r.threshold);
        os << line;
    }
    os << (r.pass ? "PASS" : "FAIL") << "\n";
    return os.str();
}

std::string to_csv(const CoeffIdentityReport& r) {
    std::ostringstream os;
    os << "identity,max_violation,threshold,pass\n";
    char line[160];
    const struct {
        const char* name;
        double value;
    } rows[] = {{"mean_composition", r.max_mean_violation},
                {"variance_composition", r.max_var_violation},
                {"weight_sum", r.max_sum_violation},
                {"markovian_reduction", r.max_reduction_violation},
                {"policy_bound", r.max_bound_violation}};
    for (const auto& row : rows) {
        std::snprintf(line, sizeof(line), "%s,%.17g,%.1e,%d\n", row.name, row.value,
                      r.threshold, row.value < r.threshold ? 1 : 0);
        os << line;
    }
    return os.str();
}

std::string to_text(const MarginalSuiteReport& r) {
    std::ostringstream os;
    os << "marginal preservation suite: trajectories=" << r.trajectories;
    if (r.low_power) os << " (LOW POWER: below the 10000-trajectory floor)";
    os << "\n";
    char line[200];
    for (const MarginalSuiteEntry& e : r.entries) {
        double worst_z = 0.0, worst_var = 0.0;
        for (const StepStats& st : e.report.steps) {
            worst_z = std::max(worst_z, std::abs(st.z_mean));
            worst_var = std::max(worst_var, std::abs(st.var_rel_err));
        }
        std::snprintf(line, sizeof(line),
                      "  %-34s %s  worst |z|=%.2f  worst var err=%.4f (tol %.4f)\n",
                      e.label.c_str(), e.report.pass ? "PASS" : "FAIL", worst_z,
                      worst_var, e.report.steps.empty() ? 0.0 : e.report.steps[0].var_tol);
        os << line;
    }
    os << (r.pass ? "PASS" : "FAIL") << "\n";
    return os.str();
}

std::string to_csv(const MarginalSuiteReport& r) {
    std::ostringstream os;
    os << "config,n,expected_mean,observed_mean,z_mean,expected_variance,"
          "observed_variance,var_rel_err,var_tol,pass\n";
    char line[320];
    for (const MarginalSuiteEntry& e : r.entries) {
        for (const StepStats& st : e.report.steps) {
            std::snprintf(line, sizeof(line), "%s,%d,%.10g,%.10g,%.4f,%.10g,%.10g,%.6f,%.6f,%d\n",
                          e.label.c_str(), st.n, st.expected_mean, st.observed_mean,
                          st.z_mean, st.expected_variance, st.observed_variance,
                          st.var_rel_err, st.var_tol, st.pass ? 1 : 0);
            os << line;
        }
    }
    return os.str();
}

std::string to_text(const EndToEndReport& r) {
    std::ostringstream os;
    os << "end-to-end gaussian restoration: steps=" << r.steps << " policy="
       << (r.policy == GnKind::i2sb_equivalent
               ? "markovian"
               : (r.policy == GnKind::step_function ? "step_function" : "custom_table"))
       << " samples=" << r.samples << "\n";
    char line[200];
    for (const EndToEndBin& b : r.bins) {
        std::snprintf(line, sizeof(line),
                      "  x1 in [%+.3f, %+.3f]  n=%d  z_mean=%+.2f  resid var=%.5f "
                      "(analytic %.5f)\n",
                      b.x1_lo, b.x1_hi, b.count, b.z_mean, b.observed_residual_variance,
                      b.analytic_variance);
        os << line;
    }
    os << "max |z| = " << r.max_abs_z << " -> " << (r.mean_pass ? "PASS" : "FAIL")
       << "\n";
    return os.str();
}

std::string to_csv(const EndToEndReport& r) {
    std::ostringstream os;
    os << "x1_lo,x1_hi,count,z_mean,observed_residual_variance,analytic_variance\n";
    char line[200];
    for (const EndToEndBin& b : r.bins) {
        std::snprintf(line, sizeof(line), "%.10g,%.10g,%d,%.4f,%.10g,%.10g\n", b.x1_lo,
                      b.x1_hi, b.count, b.z_mean, b.observed_residual_variance,
                      b.analytic_variance);
        os << line;
    }
    return os.str();
}

}  // namespace i3sb
