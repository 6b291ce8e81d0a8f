#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <filesystem>

#include "i3sb/sampler.hpp"
#include "test_util.hpp"

using namespace i3sb;

namespace {

const BetaSchedule kBeta{BetaKind::symmetric_triangular, 1e-4, 0.15};

Schedule make_schedule(int N, BetaKind kind = BetaKind::symmetric_triangular) {
    BetaSchedule beta = kBeta;
    beta.kind = kind;
    if (kind == BetaKind::constant_rate) beta.beta_min = 0.0;
    return build_schedule(beta, build_grid(N, GridSpacing::quadratic, 1e-6));
}

// Literal Markovian reference: clean estimate then the one-step-back
// posterior at every step, weights written out from the accumulations
// directly. Consumes one normal per pixel per stochastic step, exactly
// like the production loop.
std::vector<std::vector<double>> reference_markovian(const ImageTensor& xN,
                                                     const ImageTensor& x0_true,
                                                     const Schedule& s,
                                                     std::uint64_t seed) {
    const int N = s.steps();
    const std::size_t count = xN.size();
    std::vector<double> state(xN.data.begin(), xN.data.end());
    RandomStream rng(seed);
    std::vector<std::vector<double>> states;
    for (int n = N; n >= 1; --n) {
        const double sigma_n = std::sqrt(s.sigma2[n]);
        std::vector<double> x0_hat(count);
        for (std::size_t i = 0; i < count; ++i) {
            const double eps = (state[i] - x0_true.data[i]) / sigma_n;
            x0_hat[i] = state[i] - sigma_n * eps;
        }
        if (n == 1) {
            state = x0_hat;
        } else {
            const int m = n - 1;
            const double a2 = s.alpha2[m];
            const double s2 = s.sigma2[m];
            const double w0 = a2 / (a2 + s2);
            const double wn = s2 / (a2 + s2);
            const double var = s2 * a2 / (a2 + s2);
            for (std::size_t i = 0; i < count; ++i) {
                state[i] = w0 * x0_hat[i] + wn * state[i];
            }
            if (var > 0.0) {
                const double sd = std::sqrt(var);
                for (double& v : state) v += sd * rng.normal();
            }
        }
        states.push_back(state);
    }
    return states;
}

}  // namespace

TEST_CASE("exact clean estimates reproduce the clean image") {
    RandomStream rng(11);
    const ImageTensor x0 = testutil::random_tensor(rng, 12, 10);
    const ImageTensor xN = testutil::random_tensor(rng, 12, 10);
    const Schedule s = make_schedule(20);
    const auto oracle = cheat_oracle(x0, s.beta);

    for (GnKind kind : {GnKind::i2sb_equivalent, GnKind::step_function}) {
        SamplerConfig cfg;
        cfg.steps = 20;
        cfg.policy.kind = kind;
        cfg.policy.r = 0.2;
        cfg.seed = 5;
        TrajectoryRecord rec;
        cfg.record_trajectory = true;
        const ImageTensor out = generate(xN, *oracle, s, cfg, &rec);
        for (std::size_t i = 0; i < out.data.size(); ++i) {
            REQUIRE(out.data[i] == doctest::Approx(x0.data[i]).epsilon(1e-5));
        }
        // the clean estimate is exact at every step
        for (const TrajectoryStep& st : rec.steps) {
            for (std::size_t i = 0; i < st.x0_hat.size(); ++i) {
                REQUIRE(std::abs(st.x0_hat[i] - x0.data[i]) < 1e-6);
            }
        }
    }
}

TEST_CASE("single-step generation is the deterministic estimate") {
    RandomStream rng(3);
    const ImageTensor x0 = testutil::random_tensor(rng, 6, 6);
    const ImageTensor xN = testutil::random_tensor(rng, 6, 6);
    const Schedule s = make_schedule(1);
    const auto oracle = cheat_oracle(x0, s.beta);
    SamplerConfig cfg;
    cfg.steps = 1;
    cfg.seed = 99;
    TrajectoryRecord rec;
    cfg.record_trajectory = true;
    const ImageTensor a = generate(xN, *oracle, s, cfg, &rec);
    cfg.seed = 12345;  // no draws happen, so the seed cannot matter
    const ImageTensor b = generate(xN, *oracle, s, cfg);
    CHECK(a.data == b.data);
    REQUIRE(rec.steps.size() == 1);
    CHECK(rec.steps[0].branch == StepBranch::deterministic_final);
}

TEST_CASE("markovian policy matches the literal reference trajectory") {
    RandomStream rng(21);
    for (int N : {4, 6, 20}) {
        const ImageTensor x0 = testutil::random_tensor(rng, 8, 8);
        const ImageTensor xN = testutil::random_tensor(rng, 8, 8);
        const Schedule s = make_schedule(N);
        const auto oracle = cheat_oracle(x0, s.beta);
        SamplerConfig cfg;
        cfg.steps = N;
        cfg.policy.kind = GnKind::i2sb_equivalent;
        cfg.seed = derive_seed(77, N);
        cfg.record_trajectory = true;
        TrajectoryRecord rec;
        (void)generate(xN, *oracle, s, cfg, &rec);

        const auto ref = reference_markovian(xN, x0, s, cfg.seed);
        REQUIRE(rec.steps.size() == ref.size());
        for (std::size_t k = 0; k < ref.size(); ++k) {
            for (std::size_t i = 0; i < ref[k].size(); ++i) {
                REQUIRE(std::abs(rec.steps[k].state[i] - ref[k][i]) < 1e-9);
            }
        }
    }
}

TEST_CASE("fixed seeds give bit-identical outputs") {
    RandomStream rng(8);
    const ImageTensor x0 = testutil::random_tensor(rng, 9, 7);
    const ImageTensor xN = testutil::random_tensor(rng, 9, 7);
    const Schedule s = make_schedule(12);
    const auto oracle = cheat_oracle(x0, s.beta);
    SamplerConfig cfg;
    cfg.steps = 12;
    cfg.policy.kind = GnKind::step_function;
    cfg.policy.r = 0.25;
    cfg.seed = 31415;
    const ImageTensor a = generate(xN, *oracle, s, cfg);
    const ImageTensor b = generate(xN, *oracle, s, cfg);
    CHECK(a.data == b.data);
}

TEST_CASE("zero-noise policies make interior steps deterministic") {
    RandomStream rng(13);
    const ImageTensor x0 = testutil::random_tensor(rng, 5, 5);
    const ImageTensor xN = testutil::random_tensor(rng, 5, 5);
    const Schedule s = make_schedule(8);
    const auto oracle = cheat_oracle(x0, s.beta);

    SamplerConfig cfg;
    cfg.steps = 8;
    cfg.record_trajectory = true;

    SUBCASE("custom table of zeros") {
        cfg.policy.kind = GnKind::custom_table;
        cfg.policy.table.assign(7, 0.0);
    }
    SUBCASE("step function with r covering every interior step") {
        cfg.policy.kind = GnKind::step_function;
        cfg.policy.r = 7.0 / 8.0;
    }

    TrajectoryRecord rec;
    (void)generate(xN, *oracle, s, cfg, &rec);
    // after the first (stochastic) step, every state is the exact affine
    // blend of its inputs: no randomness is consumed
    for (std::size_t k = 1; k < rec.steps.size(); ++k) {
        const TrajectoryStep& st = rec.steps[k];
        const std::vector<double>& prev = rec.steps[k - 1].state;
        CHECK(st.coeffs.g2 == 0.0);
        for (std::size_t i = 0; i < st.state.size(); ++i) {
            const double expect = st.coeffs.a * st.x0_hat[i] + st.coeffs.b * prev[i] +
                                  st.coeffs.c * xN.data[i];
            REQUIRE(st.state[i] == doctest::Approx(expect).epsilon(1e-15));
        }
    }
}

TEST_CASE("r = 0 reproduces the markovian noise pattern") {
    const Schedule s = make_schedule(10);
    SamplerConfig cfg;
    cfg.steps = 10;
    cfg.policy.kind = GnKind::step_function;
    cfg.policy.r = 0.0;
    for (int n = 1; n < 10; ++n) {
        CHECK(gn_value(s, n, cfg.policy) == doctest::Approx(gn_markovian(s, n)));
    }
}

TEST_CASE("configuration and input validation") {
    RandomStream rng(2);
    const ImageTensor x0 = testutil::random_tensor(rng, 4, 4);
    ImageTensor xN = testutil::random_tensor(rng, 4, 4);
    const Schedule s = make_schedule(6);
    const auto oracle = cheat_oracle(x0, s.beta);
    SamplerConfig cfg;
    cfg.steps = 5;  // schedule says 6
    CHECK_THROWS_AS(generate(xN, *oracle, s, cfg), std::invalid_argument);

    cfg.steps = 6;
    xN.data[3] = std::numeric_limits<float>::infinity();
    CHECK_THROWS_AS(generate(xN, *oracle, s, cfg), std::invalid_argument);
}

TEST_CASE("trajectory record structure and serialization") {
    RandomStream rng(4);
    const ImageTensor x0 = testutil::random_tensor(rng, 4, 4);
    const ImageTensor xN = testutil::random_tensor(rng, 4, 4);
    const Schedule s = make_schedule(5);
    const auto oracle = cheat_oracle(x0, s.beta);
    SamplerConfig cfg;
    cfg.steps = 5;
    cfg.policy.kind = GnKind::step_function;
    cfg.policy.r = 0.4;
    cfg.record_trajectory = true;
    TrajectoryRecord rec;
    (void)generate(xN, *oracle, s, cfg, &rec);

    REQUIRE(rec.steps.size() == 5);
    CHECK(rec.steps.front().step == 5);
    CHECK(rec.steps.front().branch == StepBranch::ddpm);
    CHECK(rec.steps.back().step == 1);
    CHECK(rec.steps.back().branch == StepBranch::deterministic_final);
    for (std::size_t k = 1; k + 1 < rec.steps.size(); ++k) {
        CHECK(rec.steps[k].branch == StepBranch::pg);
    }

    const std::string manifest = trajectory_manifest(rec);
    CHECK(manifest.find("step branch a b c g2") == 0);
    CHECK(manifest.find("deterministic-final") != std::string::npos);

    testutil::ScratchDir dir("trajectory");
    write_trajectory(rec, dir.file("run"));
    CHECK(std::filesystem::exists(dir.file("run_manifest.txt")));
    CHECK(std::filesystem::exists(dir.file("run_state_005.tnsr")));
    CHECK(std::filesystem::exists(dir.file("run_x0hat_001.tnsr")));
}

TEST_CASE("marginal check accepts the correct sampler") {
    const int M = 20'000;
    SamplerConfig cfg;
    cfg.steps = 4;
    cfg.seed = 2024;

    SUBCASE("step function policy, constant rate") {
        const Schedule s = make_schedule(4, BetaKind::constant_rate);
        cfg.policy.kind = GnKind::step_function;
        cfg.policy.r = 0.5;
        const MarginalReport rep = marginal_check(0.0, 1.0, s, cfg, M);
        CHECK(rep.pass);
        CHECK(!rep.low_power);
        CHECK(rep.steps.size() == 3);
    }
    SUBCASE("markovian policy, triangular rate") {
        const Schedule s = make_schedule(4);
        cfg.policy.kind = GnKind::i2sb_equivalent;
        const MarginalReport rep = marginal_check(0.0, 1.0, s, cfg, M);
        CHECK(rep.pass);
    }
    SUBCASE("small samples raise the low-power flag") {
        const Schedule s = make_schedule(4);
        cfg.policy.kind = GnKind::i2sb_equivalent;
        const MarginalReport rep = marginal_check(0.0, 1.0, s, cfg, 100);
        CHECK(rep.low_power);
    }
}

TEST_CASE("marginal check rejects corrupted samplers") {
    const Schedule s = make_schedule(4, BetaKind::constant_rate);
    SamplerConfig cfg;
    cfg.steps = 4;
    cfg.seed = 2025;
    cfg.policy.kind = GnKind::step_function;
    cfg.policy.r = 0.5;
    const int M = 20'000;

    SUBCASE("inflated next-state weight") {
        MutationSpec mut;
        mut.kind = MutationSpec::Kind::scale_b;
        mut.factor = 1.1;
        const MarginalReport rep = marginal_check(0.0, 1.0, s, cfg, M, mut);
        CHECK(!rep.pass);
    }
    SUBCASE("skipped stochastic draw") {
        MutationSpec mut;
        mut.kind = MutationSpec::Kind::skip_draw;
        const MarginalReport rep = marginal_check(0.0, 1.0, s, cfg, M, mut);
        CHECK(!rep.pass);
    }
}
