#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "rnr/diagnose.hpp"
#include "rnr/image.hpp"
#include "rnr/restore.hpp"
#include "rnr/rng.hpp"

namespace rnr {

/// One optimization step's bundle of candidates and their statistics.
struct GrpoGroup {
    std::vector<RestorationParams> candidates;
    std::vector<Image> restored;
    std::vector<double> mse;       // E_k >= 0
    std::vector<double> log_probs; // log softmax(-E/tau), sums to 1 in prob space
    std::vector<double> rewards;   // severity reduction per candidate
    std::vector<double> advantages;
    double tau = 1.0;
};

/// log_prob_k = (-mse_k/tau) - logsumexp_j(-mse_j/tau), stabilized by
/// max-subtraction. Throws on tau <= 0, N < 2, or non-finite mse.
std::vector<double> fidelity_log_probs(const std::vector<double>& mse, double tau);

/// Sum over the four degradation channels of (input severity - candidate
/// severity): positive when the candidate is cleaner than the input.
double diagnostic_reward(const DiagnosticReport& input_report, const DiagnosticReport& candidate_report);

/// A_k = (r_k - mean(r)) / population_std(r); all zeros when the population
/// std is <= 1e-12.
std::vector<double> advantages(const std::vector<double>& rewards);

/// -(1/N) * sum_k A_k * log_prob_k.
double grpo_loss(const GrpoGroup& group);

/// Gibbs-normalization oracle: exp(-mse_k/(2 sigma^2)) normalized by the
/// group sum, computed brute force. Matches exp(fidelity_log_probs(mse,
/// tau = 2 sigma^2)) to within accumulated rounding.
std::vector<double> ebm_oracle_check(const std::vector<double>& mse, double sigma);

enum class TauRule { kAdaptive, kFixed };

struct TrainConfig {
    int group_size = 8;
    TauRule tau_rule = TauRule::kAdaptive;
    double tau_fixed = 1.0;
    double learning_rate = 0.01;
    int max_steps = 200;
    std::uint64_t seed = 0;
    double exploration_std = 0.05;
    double fd_step = 5e-4;
    bool seed_policy_from_reports = false; // false: neutral initial mean
};

/// Per-group adaptive temperature: max(mean(mse), 1e-6).
double adaptive_tau(const std::vector<double>& mse);

/// Everything the loss needs to be re-evaluated at a perturbed policy mean:
/// the image pair, the frozen exploration draws, the frozen advantages, and
/// the frozen temperature. Gradients flow only through the fidelity term.
struct GradContext {
    const Image* degraded = nullptr;
    const Image* clean = nullptr;
    std::vector<std::array<double, RestorationParams::kDim>> eps;
    std::array<double, RestorationParams::kDim> exploration_std{};
    std::vector<double> advantages;
    double tau = 1.0;
};

/// L_GRPO as a function of the policy mean with everything else in the
/// context held fixed.
double loss_at(const std::array<double, RestorationParams::kDim>& mean, const GradContext& ctx);

/// Central finite differences of loss_at around the policy mean. Throws if
/// the loss is non-finite at a perturbed point or fd_step <= 0.
std::array<double, RestorationParams::kDim> loss_gradient(const RestorationPolicy& policy,
                                                          const GradContext& ctx, double fd_step);

struct TrainItem {
    Image degraded;
    Image clean;
    DiagnosticReport input_report;
};

struct StepLog {
    int step = 0;
    double loss = 0.0;
    double mean_reward = 0.0;
    double mean_psnr = 0.0;
    double mean_ssim = 0.0;
};

struct TrainState {
    RestorationPolicy policy;
    int step = 0;
    std::vector<StepLog> history;
    TrainConfig config;
    Rng rng = Rng(0);
};

/// Algorithm loop: per step, sample a group around the policy mean, restore,
/// score fidelity and diagnostic rewards, and take one projected gradient
/// step on the mean. Fully seeded; empty datasets are rejected.
TrainState train(const std::vector<TrainItem>& dataset, const TrainConfig& config);

/// Versioned key/value text checkpoint of (step, policy, config, rng state).
/// Round-trips are field-exact.
std::string checkpoint_to_text(const TrainState& state);
TrainState checkpoint_from_text(const std::string& text);
void write_checkpoint(const std::string& path, const TrainState& state);
TrainState read_checkpoint(const std::string& path);

/// One tab-separated line per step: step, loss, mean_reward, mean_psnr,
/// mean_ssim.
std::string format_train_log(const std::vector<StepLog>& history);

} // namespace rnr
