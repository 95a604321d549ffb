#include "rnr/restore.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "rnr/kernels.hpp"

namespace rnr {

namespace {

constexpr double kUnsharpSigma = 1.0;
constexpr double kDenoiseMax = 5.0;

inline double clampd(double v, double lo, double hi) { return std::min(hi, std::max(lo, v)); }

// 5-tap horizontal median blend. Rain streaks are near-vertical, so the
// cross-streak direction is fixed horizontal.
Image derain_median(const Image& img, double strength) {
    const int h = img.height, w = img.width;
    Image out(h, w);
#pragma omp parallel for schedule(static)
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x)
            for (int c = 0; c < 3; ++c) {
                float taps[5];
                for (int k = -2; k <= 2; ++k) {
                    const int sx = std::min(w - 1, std::max(0, x + k));
                    taps[k + 2] = img.at(y, sx, c);
                }
                std::nth_element(taps, taps + 2, taps + 5);
                const double v = (1.0 - strength) * img.at(y, x, c) + strength * taps[2];
                out.at(y, x, c) = static_cast<float>(v);
            }
    return out;
}

} // namespace

std::array<double, RestorationParams::kDim> RestorationParams::flat() const {
    return {defog_t,          defog_a[0],     defog_a[1],      defog_a[2],
            denoise_strength, sharpen_amount, derain_strength};
}

RestorationParams RestorationParams::from_flat(const std::array<double, kDim>& v) {
    RestorationParams p;
    p.defog_t = v[0];
    p.defog_a = {v[1], v[2], v[3]};
    p.denoise_strength = v[4];
    p.sharpen_amount = v[5];
    p.derain_strength = v[6];
    return p;
}

RestorationParams project(const RestorationParams& p) {
    RestorationParams q = p;
    q.defog_t = clampd(p.defog_t, 0.05, 1.0);
    for (int c = 0; c < 3; ++c) q.defog_a[c] = clampd(p.defog_a[c], 0.0, 1.0);
    q.denoise_strength = clampd(p.denoise_strength, 0.0, kDenoiseMax);
    q.sharpen_amount = clampd(p.sharpen_amount, 0.0, 2.0);
    q.derain_strength = clampd(p.derain_strength, 0.0, 1.0);
    return q;
}

RestorationPolicy::RestorationPolicy() {
    mean = RestorationParams{}.flat();
    exploration_std.fill(0.05);
}

Image restore(const Image& img, const RestorationParams& params) {
    const RestorationParams p = project(params);
    Image cur = img;

    if (p.derain_strength > 0.0) cur = derain_median(cur, p.derain_strength);
    if (p.denoise_strength > 0.0) cur = gaussian_blur(cur, p.denoise_strength);
    if (p.sharpen_amount > 0.0) {
        const Image smooth = gaussian_blur(cur, kUnsharpSigma);
        const int h = cur.height, w = cur.width;
#pragma omp parallel for schedule(static)
        for (int y = 0; y < h; ++y)
            for (int x = 0; x < w; ++x)
                for (int c = 0; c < 3; ++c) {
                    const double v =
                        cur.at(y, x, c) + p.sharpen_amount * (cur.at(y, x, c) - smooth.at(y, x, c));
                    cur.at(y, x, c) = static_cast<float>(clampd(v, 0.0, 1.0));
                }
    }

    // Fog inversion J = (I - (1-t)A) / t; exact inverse of the scattering
    // model when t and A are the true values. t = 1 is the identity.
    if (p.defog_t < 1.0) {
        const int h = cur.height, w = cur.width;
        Image out(h, w);
#pragma omp parallel for schedule(static)
        for (int y = 0; y < h; ++y)
            for (int x = 0; x < w; ++x)
                for (int c = 0; c < 3; ++c) {
                    const double v = (cur.at(y, x, c) - (1.0 - p.defog_t) * p.defog_a[c]) / p.defog_t;
                    out.at(y, x, c) = static_cast<float>(clampd(v, 0.0, 1.0));
                }
        cur = std::move(out);
    }
    return cur;
}

RestorationPolicy init_policy(const DiagnosticReport& report, double exploration_std) {
    RestorationParams seed; // neutral
    if (report.present[kFog]) {
        seed.defog_t = report.fog.t_mean;
        seed.defog_a = report.fog.atmospheric_light;
    }
    if (report.present[kNoise]) seed.denoise_strength = 30.0 * report.noise.sigma;
    if (report.present[kShake]) seed.sharpen_amount = report.blur.effective_length / 8.0;
    if (report.present[kRain]) seed.derain_strength = 2.0 * report.rain.coverage;

    RestorationPolicy policy;
    policy.mean = project(seed).flat();
    policy.exploration_std.fill(exploration_std);
    return policy;
}

std::vector<RestorationParams> sample_candidates(const RestorationPolicy& policy, Rng rng, int n) {
    if (n < 2) throw std::invalid_argument("candidate groups need N >= 2");
    for (double s : policy.exploration_std)
        if (s <= 0.0) throw std::invalid_argument("exploration std must be strictly positive");

    std::vector<RestorationParams> out;
    out.reserve(n);
    for (int k = 0; k < n; ++k) {
        std::array<double, RestorationParams::kDim> v{};
        for (int d = 0; d < RestorationParams::kDim; ++d)
            v[d] = policy.mean[d] + policy.exploration_std[d] * rng.normal();
        out.push_back(project(RestorationParams::from_flat(v)));
    }
    return out;
}

} // namespace rnr
