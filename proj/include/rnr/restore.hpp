#pragma once

#include <array>
#include <vector>

#include "rnr/diagnose.hpp"
#include "rnr/image.hpp"
#include "rnr/rng.hpp"

namespace rnr {

/// Parameters of the inverse operators. Neutral values (t = 1, strengths 0)
/// make restore() a pixel-exact identity.
struct RestorationParams {
    double defog_t = 1.0;                              // scalar transmission, [0.05, 1]
    std::array<double, 3> defog_a = {1.0, 1.0, 1.0};   // atmospheric light, [0, 1] each
    double denoise_strength = 0.0;                     // Gaussian sigma, [0, 5]
    double sharpen_amount = 0.0;                       // unsharp gain, [0, 2]
    double derain_strength = 0.0;                      // median blend, [0, 1]

    static constexpr int kDim = 7;
    std::array<double, kDim> flat() const;
    static RestorationParams from_flat(const std::array<double, kDim>& v);
};

/// Clamp every field into its admissible range. Idempotent.
RestorationParams project(const RestorationParams& p);

/// Gaussian policy over restoration parameters: candidates are
/// mu + sigma .* eps with eps standard normal, projected into range.
struct RestorationPolicy {
    std::array<double, RestorationParams::kDim> mean{};
    std::array<double, RestorationParams::kDim> exploration_std{};

    RestorationPolicy();
    RestorationParams mean_params() const { return project(RestorationParams::from_flat(mean)); }
};

/// Inverse operators in reverse degradation order: oriented-median derain
/// blend, Gaussian denoise, unsharp sharpening, then fog inversion
/// J = (I - (1-t)A)/t clamped to [0,1]. Deterministic; out-of-range
/// parameters are projected first.
Image restore(const Image& img, const RestorationParams& p);

/// Policy mean seeded from the report: defog from (t_mean, A) when fog is
/// present, denoise strength proportional to the noise sigma estimate,
/// sharpening from the blur length, derain from the coverage estimate.
/// Components whose degradation is absent stay neutral.
RestorationPolicy init_policy(const DiagnosticReport& report, double exploration_std = 0.05);

/// N >= 2 projected Gaussian samples around the policy mean; deterministic
/// in rng. Throws std::invalid_argument for N < 2.
std::vector<RestorationParams> sample_candidates(const RestorationPolicy& policy, Rng rng, int n);

} // namespace rnr
