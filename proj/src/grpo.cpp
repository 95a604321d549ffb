#include "rnr/grpo.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>

#include "num_text.hpp"
#include "rnr/metrics.hpp"

namespace rnr {

using numtext::fmt_double;

std::vector<double> fidelity_log_probs(const std::vector<double>& mse, double tau) {
    if (mse.size() < 2) throw std::invalid_argument("fidelity softmax needs N >= 2 candidates");
    if (!(tau > 0.0)) throw std::invalid_argument("temperature must be > 0");
    for (double e : mse)
        if (!std::isfinite(e) || e < 0.0) throw std::invalid_argument("mse values must be finite and >= 0");

    std::vector<double> z(mse.size());
    for (std::size_t i = 0; i < mse.size(); ++i) z[i] = -mse[i] / tau;
    const double zmax = *std::max_element(z.begin(), z.end());
    double sum = 0.0;
    for (double v : z) sum += std::exp(v - zmax);
    const double lse = zmax + std::log(sum);
    for (double& v : z) v -= lse;
    return z;
}

double diagnostic_reward(const DiagnosticReport& input_report, const DiagnosticReport& candidate_report) {
    double r = 0.0;
    for (int i = 0; i < kNumDegradations; ++i)
        r += input_report.severity[i] - candidate_report.severity[i];
    return r;
}

std::vector<double> advantages(const std::vector<double>& rewards) {
    if (rewards.size() < 2) throw std::invalid_argument("advantages need N >= 2 rewards");
    const double n = static_cast<double>(rewards.size());
    double mean = 0.0;
    for (double r : rewards) mean += r;
    mean /= n;
    double var = 0.0;
    for (double r : rewards) var += (r - mean) * (r - mean);
    const double std_pop = std::sqrt(var / n);

    std::vector<double> a(rewards.size(), 0.0);
    if (std_pop <= 1e-12) return a;
    for (std::size_t i = 0; i < rewards.size(); ++i) a[i] = (rewards[i] - mean) / std_pop;
    return a;
}

double grpo_loss(const GrpoGroup& group) {
    const std::size_t n = group.advantages.size();
    if (n == 0 || group.log_probs.size() != n)
        throw std::invalid_argument("group advantages/log_probs are not populated");
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) s += group.advantages[i] * group.log_probs[i];
    return -s / static_cast<double>(n);
}

std::vector<double> ebm_oracle_check(const std::vector<double>& mse, double sigma) {
    if (mse.size() < 2) throw std::invalid_argument("oracle needs N >= 2");
    if (!(sigma > 0.0)) throw std::invalid_argument("sigma must be > 0");
    std::vector<double> p(mse.size());
    double sum = 0.0;
    for (std::size_t i = 0; i < mse.size(); ++i) {
        p[i] = std::exp(-mse[i] / (2.0 * sigma * sigma));
        sum += p[i];
    }
    for (double& v : p) v /= sum;
    return p;
}

double adaptive_tau(const std::vector<double>& mse) {
    double mean = 0.0;
    for (double e : mse) mean += e;
    mean /= static_cast<double>(mse.size());
    return std::max(mean, 1e-6);
}

namespace {

std::array<double, RestorationParams::kDim> project_flat(const std::array<double, RestorationParams::kDim>& v) {
    return project(RestorationParams::from_flat(v)).flat();
}

} // namespace

double loss_at(const std::array<double, RestorationParams::kDim>& mean, const GradContext& ctx) {
    const std::size_t n = ctx.eps.size();
    std::vector<double> errors(n);
    for (std::size_t k = 0; k < n; ++k) {
        std::array<double, RestorationParams::kDim> v{};
        for (int d = 0; d < RestorationParams::kDim; ++d)
            v[d] = mean[d] + ctx.exploration_std[d] * ctx.eps[k][d];
        const Image restored = restore(*ctx.degraded, RestorationParams::from_flat(v));
        errors[k] = mse(restored, *ctx.clean);
    }
    const std::vector<double> lp = fidelity_log_probs(errors, ctx.tau);
    double s = 0.0;
    for (std::size_t k = 0; k < n; ++k) s += ctx.advantages[k] * lp[k];
    return -s / static_cast<double>(n);
}

std::array<double, RestorationParams::kDim> loss_gradient(const RestorationPolicy& policy,
                                                          const GradContext& ctx, double fd_step) {
    if (!(fd_step > 0.0)) throw std::invalid_argument("finite-difference step must be > 0");
    std::array<double, RestorationParams::kDim> grad{};

    bool all_zero = true;
    for (double a : ctx.advantages)
        if (a != 0.0) all_zero = false;
    if (all_zero) return grad; // loss is identically 0

    for (int d = 0; d < RestorationParams::kDim; ++d) {
        std::array<double, RestorationParams::kDim> lo = policy.mean, hi = policy.mean;
        lo[d] -= fd_step;
        hi[d] += fd_step;
        const double f_lo = loss_at(lo, ctx);
        const double f_hi = loss_at(hi, ctx);
        if (!std::isfinite(f_lo) || !std::isfinite(f_hi))
            throw std::runtime_error("non-finite loss at perturbed policy mean");
        grad[d] = (f_hi - f_lo) / (2.0 * fd_step);
    }
    return grad;
}

TrainState train(const std::vector<TrainItem>& dataset, const TrainConfig& config) {
    if (dataset.empty()) throw std::invalid_argument("training dataset is empty");
    if (config.group_size < 2) throw std::invalid_argument("group size must be >= 2");
    if (config.learning_rate < 0.0) throw std::invalid_argument("learning rate must be >= 0");
    if (config.max_steps < 0) throw std::invalid_argument("max steps must be >= 0");

    TrainState state;
    state.config = config;
    state.rng = Rng(config.seed);

    if (config.seed_policy_from_reports) {
        std::array<double, RestorationParams::kDim> acc{};
        for (const TrainItem& item : dataset) {
            const RestorationPolicy p = init_policy(item.input_report, config.exploration_std);
            for (int d = 0; d < RestorationParams::kDim; ++d) acc[d] += p.mean[d];
        }
        for (int d = 0; d < RestorationParams::kDim; ++d) acc[d] /= static_cast<double>(dataset.size());
        state.policy.mean = project_flat(acc);
    } else {
        state.policy.mean = RestorationParams{}.flat();
    }
    state.policy.exploration_std.fill(config.exploration_std);

    const int n = config.group_size;
    for (int step = 0; step < config.max_steps; ++step) {
        Rng step_rng = state.rng.fork(static_cast<std::uint64_t>(step));
        const TrainItem& item = dataset[step_rng.uniform_int(dataset.size())];

        // Rollout: explicit exploration draws so the gradient can replay
        // the same candidates at perturbed means.
        GradContext ctx;
        ctx.degraded = &item.degraded;
        ctx.clean = &item.clean;
        ctx.exploration_std = state.policy.exploration_std;
        ctx.eps.resize(n);
        for (int k = 0; k < n; ++k)
            for (int d = 0; d < RestorationParams::kDim; ++d) ctx.eps[k][d] = step_rng.normal();

        GrpoGroup group;
        group.candidates.reserve(n);
        group.restored.reserve(n);
        group.mse.resize(n);
        for (int k = 0; k < n; ++k) {
            std::array<double, RestorationParams::kDim> v{};
            for (int d = 0; d < RestorationParams::kDim; ++d)
                v[d] = state.policy.mean[d] + state.policy.exploration_std[d] * ctx.eps[k][d];
            group.candidates.push_back(project(RestorationParams::from_flat(v)));
            group.restored.push_back(restore(item.degraded, group.candidates.back()));
            group.mse[k] = mse(group.restored[k], item.clean);
        }

        group.tau = config.tau_rule == TauRule::kAdaptive ? adaptive_tau(group.mse) : config.tau_fixed;
        group.log_probs = fidelity_log_probs(group.mse, group.tau);

        group.rewards.resize(n);
        for (int k = 0; k < n; ++k)
            group.rewards[k] = diagnostic_reward(item.input_report, diagnose(group.restored[k]));
        group.advantages = advantages(group.rewards);

        const double loss = grpo_loss(group);
        ctx.advantages = group.advantages;
        ctx.tau = group.tau;
        const auto grad = loss_gradient(state.policy, ctx, config.fd_step);

        std::array<double, RestorationParams::kDim> next = state.policy.mean;
        for (int d = 0; d < RestorationParams::kDim; ++d) next[d] -= config.learning_rate * grad[d];
        state.policy.mean = project_flat(next);

        StepLog log;
        log.step = step;
        log.loss = loss;
        for (int k = 0; k < n; ++k) {
            log.mean_reward += group.rewards[k];
            log.mean_psnr += psnr(group.restored[k], item.clean);
            log.mean_ssim += ssim(group.restored[k], item.clean);
        }
        log.mean_reward /= n;
        log.mean_psnr /= n;
        log.mean_ssim /= n;
        state.history.push_back(log);
        state.step = step + 1;
    }
    return state;
}

namespace {

constexpr const char* kCheckpointSchema = "# rnr-checkpoint v1";

std::string join_array(const std::array<double, RestorationParams::kDim>& v) {
    std::string s;
    for (int d = 0; d < RestorationParams::kDim; ++d) {
        if (d) s += ' ';
        s += fmt_double(v[d]);
    }
    return s;
}

std::array<double, RestorationParams::kDim> parse_array(const std::string& s, const std::string& key) {
    std::istringstream iss(s);
    std::array<double, RestorationParams::kDim> v{};
    std::string tok;
    for (int d = 0; d < RestorationParams::kDim; ++d) {
        if (!(iss >> tok)) throw std::invalid_argument("checkpoint " + key + ": expected 7 values");
        v[d] = numtext::parse_double(tok, "checkpoint " + key);
    }
    if (iss >> tok) throw std::invalid_argument("checkpoint " + key + ": expected exactly 7 values");
    return v;
}

} // namespace

std::string checkpoint_to_text(const TrainState& state) {
    std::string out = std::string(kCheckpointSchema) + "\n";
    out += "step " + std::to_string(state.step) + "\n";
    out += "policy.mean " + join_array(state.policy.mean) + "\n";
    out += "policy.exploration_std " + join_array(state.policy.exploration_std) + "\n";
    out += "config.group_size " + std::to_string(state.config.group_size) + "\n";
    out += std::string("config.tau_rule ") +
           (state.config.tau_rule == TauRule::kAdaptive ? "adaptive" : "fixed") + "\n";
    out += "config.tau_fixed " + fmt_double(state.config.tau_fixed) + "\n";
    out += "config.learning_rate " + fmt_double(state.config.learning_rate) + "\n";
    out += "config.max_steps " + std::to_string(state.config.max_steps) + "\n";
    out += "config.seed " + std::to_string(state.config.seed) + "\n";
    out += "config.exploration_std " + fmt_double(state.config.exploration_std) + "\n";
    out += "config.fd_step " + fmt_double(state.config.fd_step) + "\n";
    out += "config.seed_policy_from_reports " +
           std::string(state.config.seed_policy_from_reports ? "1" : "0") + "\n";
    out += "rng.seed " + std::to_string(state.rng.seed()) + "\n";
    out += "rng.stream " + std::to_string(state.rng.stream()) + "\n";
    out += "rng.counter " + std::to_string(state.rng.counter()) + "\n";
    return out;
}

TrainState checkpoint_from_text(const std::string& text) {
    std::istringstream iss(text);
    std::string line;
    if (!std::getline(iss, line) || line != kCheckpointSchema)
        throw std::invalid_argument("unsupported checkpoint version '" + line + "'; expected '" +
                                    kCheckpointSchema + "'");

    std::map<std::string, std::string> kv;
    while (std::getline(iss, line)) {
        if (line.empty()) continue;
        const std::size_t sp = line.find(' ');
        if (sp == std::string::npos)
            throw std::invalid_argument("checkpoint: malformed line '" + line + "'");
        kv[line.substr(0, sp)] = line.substr(sp + 1);
    }
    auto need = [&](const char* key) -> const std::string& {
        auto it = kv.find(key);
        if (it == kv.end()) throw std::invalid_argument(std::string("checkpoint: missing key '") + key + "'");
        return it->second;
    };

    TrainState state;
    state.step = static_cast<int>(numtext::parse_u64(need("step"), "checkpoint step"));
    state.policy.mean = parse_array(need("policy.mean"), "policy.mean");
    state.policy.exploration_std = parse_array(need("policy.exploration_std"), "policy.exploration_std");
    state.config.group_size = static_cast<int>(numtext::parse_u64(need("config.group_size"), "group_size"));
    const std::string& rule = need("config.tau_rule");
    if (rule == "adaptive")
        state.config.tau_rule = TauRule::kAdaptive;
    else if (rule == "fixed")
        state.config.tau_rule = TauRule::kFixed;
    else
        throw std::invalid_argument("checkpoint config.tau_rule: expected adaptive|fixed, got '" + rule + "'");
    state.config.tau_fixed = numtext::parse_double(need("config.tau_fixed"), "tau_fixed");
    state.config.learning_rate = numtext::parse_double(need("config.learning_rate"), "learning_rate");
    state.config.max_steps = static_cast<int>(numtext::parse_u64(need("config.max_steps"), "max_steps"));
    state.config.seed = numtext::parse_u64(need("config.seed"), "seed");
    state.config.exploration_std = numtext::parse_double(need("config.exploration_std"), "exploration_std");
    state.config.fd_step = numtext::parse_double(need("config.fd_step"), "fd_step");
    state.config.seed_policy_from_reports = need("config.seed_policy_from_reports") == "1";
    state.rng = Rng::resume(numtext::parse_u64(need("rng.seed"), "rng.seed"),
                            numtext::parse_u64(need("rng.stream"), "rng.stream"),
                            numtext::parse_u64(need("rng.counter"), "rng.counter"));
    return state;
}

void write_checkpoint(const std::string& path, const TrainState& state) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open " + path + " for writing");
    out << checkpoint_to_text(state);
    if (!out) throw std::runtime_error("failed writing " + path);
}

TrainState read_checkpoint(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return checkpoint_from_text(ss.str());
}

std::string format_train_log(const std::vector<StepLog>& history) {
    std::string out;
    for (const StepLog& s : history) {
        out += std::to_string(s.step);
        out += '\t';
        out += fmt_double(s.loss);
        out += '\t';
        out += fmt_double(s.mean_reward);
        out += '\t';
        out += fmt_double(s.mean_psnr);
        out += '\t';
        out += fmt_double(s.mean_ssim);
        out += '\n';
    }
    return out;
}

} // namespace rnr
