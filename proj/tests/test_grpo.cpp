#include <doctest.h>

#include <cmath>
#include <filesystem>

#include "rnr/degrade.hpp"
#include "rnr/grpo.hpp"
#include "rnr/metrics.hpp"
#include "support/synthetic.hpp"

using namespace rnr;

namespace {

std::vector<double> random_mse(Rng& rng, int n, double scale) {
    std::vector<double> v(n);
    for (double& x : v) x = rng.uniform() * scale;
    return v;
}

GradContext fog_context(int seed, const Image& degraded, const Image& clean) {
    GradContext ctx;
    ctx.degraded = &degraded;
    ctx.clean = &clean;
    ctx.exploration_std.fill(0.05);
    Rng rng(seed);
    ctx.eps.resize(4);
    for (auto& e : ctx.eps)
        for (double& x : e) x = rng.normal();
    ctx.advantages = {1.2, -0.4, -0.4, -0.4};
    ctx.tau = 0.01;
    return ctx;
}

} // namespace

TEST_CASE("fidelity softmax: symmetry, arithmetic, flat limit") {
    SUBCASE("equal errors give the uniform distribution") {
        const auto lp = fidelity_log_probs({0.7, 0.7, 0.7}, 2.0);
        for (double v : lp) CHECK(v == doctest::Approx(std::log(1.0 / 3.0)).epsilon(1e-12));
    }
    SUBCASE("a gap of tau*ln(3) splits 0.75/0.25") {
        const auto lp = fidelity_log_probs({0.0, std::log(3.0)}, 1.0);
        CHECK(std::exp(lp[0]) == doctest::Approx(0.75).epsilon(1e-12));
        CHECK(std::exp(lp[1]) == doctest::Approx(0.25).epsilon(1e-12));
    }
    SUBCASE("enormous temperature flattens any finite group") {
        const std::vector<double> mse = {0.1, 3.0, 7.5, 2.2};
        const auto lp = fidelity_log_probs(mse, 1e6 * 7.5);
        for (double v : lp) CHECK(std::exp(v) == doctest::Approx(0.25).epsilon(1e-6));
    }
    SUBCASE("softmax stays normalized over fuzzed groups") {
        Rng rng(17);
        for (int i = 0; i < 1000; ++i) {
            const int n = 2 + static_cast<int>(rng.uniform_int(7));
            const auto lp = fidelity_log_probs(random_mse(rng, n, 50.0), rng.uniform(1e-3, 10.0));
            double sum = 0.0;
            for (double v : lp) {
                CHECK(v <= 0.0);
                sum += std::exp(v);
            }
            CHECK(std::abs(sum - 1.0) < 1e-9);
        }
    }
    SUBCASE("huge errors do not overflow") {
        const auto lp = fidelity_log_probs({1e300, 0.0}, 1.0);
        CHECK(std::exp(lp[1]) == doctest::Approx(1.0));
        CHECK(std::isfinite(lp[0]));
    }
    SUBCASE("invalid inputs are rejected") {
        CHECK_THROWS_AS(fidelity_log_probs({1.0}, 1.0), std::invalid_argument);
        CHECK_THROWS_AS(fidelity_log_probs({1.0, 2.0}, 0.0), std::invalid_argument);
        CHECK_THROWS_AS(fidelity_log_probs({1.0, -0.5}, 1.0), std::invalid_argument);
        CHECK_THROWS_AS(fidelity_log_probs({1.0, std::nan("")}, 1.0), std::invalid_argument);
    }
    SUBCASE("the best candidate always gets the highest probability") {
        Rng rng(23);
        for (int i = 0; i < 200; ++i) {
            const int n = 2 + static_cast<int>(rng.uniform_int(7));
            const auto mse = random_mse(rng, n, 10.0);
            const auto lp = fidelity_log_probs(mse, rng.uniform(1e-3, 5.0));
            const auto best_lp = std::max_element(lp.begin(), lp.end()) - lp.begin();
            const auto best_mse = std::min_element(mse.begin(), mse.end()) - mse.begin();
            CHECK(best_lp == best_mse);
        }
    }
}

TEST_CASE("diagnostic reward is the total severity reduction") {
    DiagnosticReport input;
    input.severity = {60.0, 1.0, 1.0, 40.0};
    DiagnosticReport candidate;
    candidate.severity = {20.0, 1.0, 1.0, 10.0};

    CHECK(diagnostic_reward(input, input) == 0.0);
    CHECK(diagnostic_reward(input, candidate) == doctest::Approx(70.0));

    DiagnosticReport worse;
    worse.severity = {70.0, 5.0, 2.0, 50.0};
    CHECK(diagnostic_reward(input, worse) < 0.0);
}

TEST_CASE("advantages: normalization, degenerate groups, invariances") {
    SUBCASE("worked example") {
        const auto a = advantages({10.0, 20.0, 30.0});
        CHECK(a[0] == doctest::Approx(-1.2247).epsilon(1e-4));
        CHECK(a[1] == doctest::Approx(0.0));
        CHECK(a[2] == doctest::Approx(1.2247).epsilon(1e-4));
    }
    SUBCASE("two-element group") {
        const auto a = advantages({0.0, 1.0});
        CHECK(a[0] == doctest::Approx(-1.0).epsilon(1e-12));
        CHECK(a[1] == doctest::Approx(1.0).epsilon(1e-12));
    }
    SUBCASE("constant rewards give all zeros") {
        for (double v : advantages({5.0, 5.0, 5.0, 5.0})) CHECK(v == 0.0);
    }
    SUBCASE("mean 0, population std 1, shift and scale invariance (fuzzed)") {
        Rng rng(31);
        for (int i = 0; i < 1000; ++i) {
            const int n = 2 + static_cast<int>(rng.uniform_int(7));
            std::vector<double> r(n);
            for (double& x : r) x = rng.uniform(-100.0, 100.0);
            const auto a = advantages(r);

            double mean = 0.0, var = 0.0;
            for (double v : a) mean += v;
            mean /= n;
            for (double v : a) var += (v - mean) * (v - mean);
            const double std_pop = std::sqrt(var / n);
            CHECK(std::abs(mean) < 1e-9);
            if (std_pop > 0.0) CHECK(std::abs(std_pop - 1.0) < 1e-6);

            std::vector<double> shifted = r, scaled = r;
            const double c = rng.uniform(0.1, 10.0);
            for (double& x : shifted) x += 123.456;
            for (double& x : scaled) x *= c;
            const auto a_shift = advantages(shifted);
            const auto a_scale = advantages(scaled);
            for (int k = 0; k < n; ++k) {
                CHECK(std::abs(a_shift[k] - a[k]) < 1e-9);
                CHECK(std::abs(a_scale[k] - a[k]) < 1e-9);
            }
        }
    }
}

TEST_CASE("grpo loss: worked example, symmetry, degenerate group") {
    GrpoGroup g;
    g.advantages = {-1.0, 1.0};
    g.log_probs = {std::log(0.75), std::log(0.25)};
    CHECK(grpo_loss(g) == doctest::Approx(-0.5 * (-std::log(0.75) + std::log(0.25))).epsilon(1e-12));
    CHECK(grpo_loss(g) == doctest::Approx(0.5 * std::log(3.0)).epsilon(1e-12)); // ~0.5493

    GrpoGroup swapped;
    swapped.advantages = {1.0, -1.0};
    swapped.log_probs = {std::log(0.25), std::log(0.75)};
    CHECK(grpo_loss(swapped) == doctest::Approx(grpo_loss(g)).epsilon(1e-12));

    GrpoGroup zero;
    zero.advantages = {0.0, 0.0, 0.0};
    zero.log_probs = {-1.0, -2.0, -0.5};
    CHECK(grpo_loss(zero) == 0.0);
}

TEST_CASE("EBM oracle equals the fidelity softmax at tau = 2 sigma^2") {
    SUBCASE("worked cases") {
        const double sigma = 0.7;
        const auto p = ebm_oracle_check({0.0, 2.0 * sigma * sigma * std::log(3.0)}, sigma);
        CHECK(p[0] == doctest::Approx(0.75).epsilon(1e-12));
        CHECK(p[1] == doctest::Approx(0.25).epsilon(1e-12));

        const auto uniform = ebm_oracle_check({1.5, 1.5, 1.5, 1.5}, 1.0);
        for (double v : uniform) CHECK(v == doctest::Approx(0.25).epsilon(1e-12));
    }
    SUBCASE("fuzzed equivalence within 1e-12") {
        Rng rng(41);
        for (int i = 0; i < 1000; ++i) {
            const int n = 2 + static_cast<int>(rng.uniform_int(7));
            const auto mse = random_mse(rng, n, 5.0);
            const double sigma = rng.uniform(0.2, 2.0);
            const auto oracle = ebm_oracle_check(mse, sigma);
            const auto lp = fidelity_log_probs(mse, 2.0 * sigma * sigma);
            for (int k = 0; k < n; ++k) CHECK(std::abs(oracle[k] - std::exp(lp[k])) < 1e-12);
        }
    }
}

TEST_CASE("adaptive tau follows the group's error scale") {
    CHECK(adaptive_tau({0.02, 0.04}) == doctest::Approx(0.03).epsilon(1e-12));
    CHECK(adaptive_tau({0.0, 0.0}) == 1e-6); // floor
}

TEST_CASE("loss gradient: zero advantages, symmetry, step-halved oracle") {
    const Image clean = testimg::synthetic_scene(Rng(101), 48, 48);
    FogParams fog;
    fog.atmospheric_light = {0.9, 0.9, 0.9};
    fog.transmission = Plane(48, 48, 0.55f);
    fog.t_mean = 0.55;
    const Image degraded = apply_fog(clean, fog);

    RestorationPolicy policy;
    policy.mean = {0.6, 0.9, 0.9, 0.9, 0.5, 0.3, 0.2}; // interior on every dimension
    policy.exploration_std.fill(0.05);

    SUBCASE("all-zero advantages give a zero gradient") {
        GradContext ctx = fog_context(1, degraded, clean);
        ctx.advantages = {0.0, 0.0, 0.0, 0.0};
        for (double g : loss_gradient(policy, ctx, 1e-4)) CHECK(g == 0.0);
    }

    SUBCASE("symmetric candidates at vanishing exploration cancel") {
        GradContext ctx;
        ctx.degraded = &degraded;
        ctx.clean = &clean;
        ctx.exploration_std.fill(1e-9);
        std::array<double, RestorationParams::kDim> e{};
        Rng rng(3);
        for (double& x : e) x = rng.normal();
        std::array<double, RestorationParams::kDim> minus_e{};
        for (int d = 0; d < RestorationParams::kDim; ++d) minus_e[d] = -e[d];
        ctx.eps = {e, minus_e};
        ctx.advantages = {1.0, -1.0};
        ctx.tau = 0.01;
        for (double g : loss_gradient(policy, ctx, 1e-4)) CHECK(std::abs(g) < 1e-3);
    }

    SUBCASE("central difference agrees with its step-halved refinement") {
        const GradContext ctx = fog_context(7, degraded, clean);
        const double h = 5e-4;
        const auto g = loss_gradient(policy, ctx, h);
        const auto g_half = loss_gradient(policy, ctx, h / 2.0);
        for (int d = 0; d < RestorationParams::kDim; ++d) {
            const double denom = std::max(std::abs(g_half[d]), 1e-6);
            CHECK(std::abs(g[d] - g_half[d]) / denom <= 1e-3);
        }
    }

    SUBCASE("invalid step is rejected") {
        const GradContext ctx = fog_context(7, degraded, clean);
        CHECK_THROWS_AS(loss_gradient(policy, ctx, 0.0), std::invalid_argument);
    }
}

TEST_CASE("train: validation, no-update limit, determinism") {
    const Image clean = testimg::synthetic_scene(Rng(55), 48, 48);
    FogParams fog;
    fog.atmospheric_light = {0.92, 0.9, 0.88};
    fog.transmission = Plane(48, 48, 0.5f);
    fog.t_mean = 0.5;

    TrainItem item;
    item.clean = clean;
    item.degraded = apply_fog(clean, fog);
    item.input_report = diagnose(item.degraded);
    const std::vector<TrainItem> dataset = {item};

    TrainConfig cfg;
    cfg.group_size = 4;
    cfg.max_steps = 3;
    cfg.seed = 11;

    SUBCASE("empty dataset and bad hyperparameters are rejected") {
        CHECK_THROWS_AS(train({}, cfg), std::invalid_argument);
        TrainConfig bad = cfg;
        bad.group_size = 1;
        CHECK_THROWS_AS(train(dataset, bad), std::invalid_argument);
        bad = cfg;
        bad.learning_rate = -1.0;
        CHECK_THROWS_AS(train(dataset, bad), std::invalid_argument);
    }

    SUBCASE("zero learning rate keeps the mean frozen") {
        TrainConfig frozen = cfg;
        frozen.learning_rate = 0.0;
        const TrainState state = train(dataset, frozen);
        CHECK(state.policy.mean == RestorationParams{}.flat());
        CHECK(state.step == 3);
        CHECK(state.history.size() == 3);
    }

    SUBCASE("identical runs produce bit-identical histories") {
        const TrainState a = train(dataset, cfg);
        const TrainState b = train(dataset, cfg);
        REQUIRE(a.history.size() == b.history.size());
        for (std::size_t i = 0; i < a.history.size(); ++i) {
            CHECK(a.history[i].loss == b.history[i].loss);
            CHECK(a.history[i].mean_reward == b.history[i].mean_reward);
            CHECK(a.history[i].mean_psnr == b.history[i].mean_psnr);
        }
        CHECK(a.policy.mean == b.policy.mean);
    }
}

TEST_CASE("checkpoint round trip is field-exact") {
    TrainState state;
    state.step = 137;
    state.policy.mean = {0.55, 0.91, 0.87, 0.9, 1.25, 0.3, 0.15};
    state.policy.exploration_std = {0.05, 0.04, 0.04, 0.04, 0.1, 0.05, 0.03};
    state.config.group_size = 8;
    state.config.tau_rule = TauRule::kFixed;
    state.config.tau_fixed = 0.0123456789012345;
    state.config.learning_rate = 3e-3;
    state.config.max_steps = 200;
    state.config.seed = 0xdeadbeefcafeull;
    state.config.exploration_std = 0.05;
    state.config.fd_step = 1e-4;
    state.config.seed_policy_from_reports = true;
    state.rng = Rng::resume(7, 3, 991);

    const TrainState back = checkpoint_from_text(checkpoint_to_text(state));
    CHECK(back.step == state.step);
    CHECK(back.policy.mean == state.policy.mean);
    CHECK(back.policy.exploration_std == state.policy.exploration_std);
    CHECK(back.config.group_size == state.config.group_size);
    CHECK(back.config.tau_rule == state.config.tau_rule);
    CHECK(back.config.tau_fixed == state.config.tau_fixed);
    CHECK(back.config.learning_rate == state.config.learning_rate);
    CHECK(back.config.max_steps == state.config.max_steps);
    CHECK(back.config.seed == state.config.seed);
    CHECK(back.config.seed_policy_from_reports == state.config.seed_policy_from_reports);
    CHECK(back.rng.seed() == state.rng.seed());
    CHECK(back.rng.stream() == state.rng.stream());
    CHECK(back.rng.counter() == state.rng.counter());

    SUBCASE("unknown versions are rejected by name") {
        std::string text = checkpoint_to_text(state);
        text.replace(text.find("v1"), 2, "v7");
        CHECK_THROWS_WITH_AS(checkpoint_from_text(text), doctest::Contains("v7"),
                             std::invalid_argument);
    }
    SUBCASE("file round trip") {
        const std::string path =
            (std::filesystem::temp_directory_path() / "rnr_ckpt_test.txt").string();
        write_checkpoint(path, state);
        const TrainState from_file = read_checkpoint(path);
        CHECK(from_file.policy.mean == state.policy.mean);
        std::filesystem::remove(path);
    }
}

TEST_CASE("train log format: one tab-separated line per step") {
    std::vector<StepLog> history(2);
    history[0] = {0, 0.5, 10.0, 18.0, 0.6};
    history[1] = {1, 0.4, 12.0, 19.0, 0.62};
    const std::string log = format_train_log(history);

    int lines = 0, tabs = 0;
    for (char c : log) {
        if (c == '\n') ++lines;
        if (c == '\t') ++tabs;
    }
    CHECK(lines == 2);
    CHECK(tabs == 8); // 4 per line
    CHECK(log.rfind("0\t", 0) == 0);
}
