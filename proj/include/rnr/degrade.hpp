#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "rnr/image.hpp"
#include "rnr/kernels.hpp"
#include "rnr/rng.hpp"

namespace rnr {

/// Degradation channel order used everywhere a 4-vector appears.
enum DegradationChannel : int { kFog = 0, kShake = 1, kRain = 2, kNoise = 3 };
inline constexpr int kNumDegradations = 4;

/// Atmospheric scattering parameters. The transmission map is built against
/// a concrete image size during degradation; until then it is empty and
/// t_mean is negative.
struct FogParams {
    std::array<double, 3> atmospheric_light = {1.0, 1.0, 1.0}; // componentwise in [0.7, 1.0]
    double beta = 1.0;                                          // depth exponent in [0.8, 3.0]
    Plane transmission;                                         // per-pixel t in [0.05, 1.0]
    double t_mean = -1.0;                                       // mean of transmission once built
};

struct RainParams {
    double density = 0.003;       // seed probability per pixel, (0,1)
    double slant = 0.0;           // radians from vertical, positive tilts right
    double streak_length = 12.0;  // px
    double streak_width = 1.0;    // px
    double opacity = 0.5;         // [0,1]
    std::array<double, 3> color = {0.9, 0.9, 0.9}; // componentwise <= atmospheric light
    double coverage = -1.0;       // measured fraction of visible streak pixels
};

/// Signal-dependent readout noise, sigma8(x8) = k*x8 + b in the 8-bit domain.
struct NoiseParams {
    double k = 0.0;          // slope in [0, 0.3]
    double b = 0.0;          // offset in [-20, 20], 8-bit units
    double sigma_bar = -1.0; // measured mean of max(0, sigma8)/255
};

/// Ground truth for one degraded sample: which degradations were applied,
/// with which parameters, and how severe they measured.
struct DegradationRecipe {
    std::array<bool, 4> present = {false, false, false, false};
    std::optional<FogParams> fog;
    std::optional<BlurKernel> blur;
    std::optional<RainParams> rain;
    std::optional<NoiseParams> noise;
    std::array<double, 4> severity = {1.0, 1.0, 1.0, 1.0}; // [1,100], absent => 1
    std::uint64_t seed = 0;
    std::string warning;
};

struct SamplerConfig {
    std::array<double, 4> inclusion_prob = {0.5, 0.5, 0.5, 0.5};

    // Fog
    double atmos_lo = 0.7, atmos_hi = 1.0;
    double beta_lo = 0.8, beta_hi = 3.0;

    // Shake kernel
    int steps_lo = 8, steps_hi = 32; // trajectory sample count, inclusive
    int canvas_radius = 16;

    // Rain
    double density_lo = 0.001, density_hi = 0.01;
    double slant_lo = -0.5236, slant_hi = 0.5236; // +-30 degrees from vertical
    double rain_len_lo = 8.0, rain_len_hi = 24.0;
    double rain_width_lo = 1.0, rain_width_hi = 2.5;
    double opacity_lo = 0.3, opacity_hi = 0.8;

    // Noise
    double noise_k_lo = 0.0, noise_k_hi = 0.3;
    double noise_b_lo = -20.0, noise_b_hi = 20.0;
};

/// Luma threshold above which a streak-layer pixel counts as visible rain.
inline constexpr double kRainCoverageThreshold = 10.0 / 255.0;

/// Fallback atmospheric light used to tint rain when fog is absent.
inline constexpr std::array<double, 3> kDefaultRainAtmosphere = {0.9, 0.9, 0.9};

/// Severity closed forms, pre-clamp. severity_* clamp the result to [1,100].
double fog_severity_raw(double t_mean);
double shake_severity_raw(double r_rms, double r_max);
double rain_severity_raw(double coverage);
double noise_severity_raw(double sigma_bar);
double clamp_severity(double s);

/// Draws presence flags and parameters for one sample. Parameter blocks are
/// populated iff their flag is set; transmission maps and measured
/// quantities are filled in later by degrade(). All probabilities zero
/// yields an empty recipe carrying a warning.
DegradationRecipe sample_recipe(Rng rng, const SamplerConfig& config = {});

/// Smooth relative depth prior in [0.2, 1.0]: a vertical ramp (far at the
/// top, near at the bottom) blended 70/30 with low-frequency value noise.
Plane synth_depth_prior(Rng rng, int height, int width);

/// I = J*t + A*(1-t), clamped to [0,1]. Transmission map must match the
/// image size.
Image apply_fog(const Image& img, const FogParams& fog);

struct ShakeConfig {
    int steps_lo = 8;
    int steps_hi = 32;
    int canvas_radius = 16;
};

/// Gaussian-weighted random-walk shake kernel. The trajectory takes
/// `steps` unit-length samples, temporal weights are a 1D Gaussian with
/// sigma = steps/4 centered mid-trajectory, and the weighted points are
/// rasterized onto a (2R+1)^2 canvas and normalized. Statistics come from
/// the eigen-decomposition of the rasterized weights' second-moment matrix.
BlurKernel make_shake_kernel(Rng rng, const ShakeConfig& config = {});

/// Rasterizes an explicit weighted trajectory; test hook and the back end
/// of make_shake_kernel. Points are (x, y) offsets from the kernel center.
BlurKernel make_kernel_from_trajectory(const std::vector<std::pair<double, double>>& points,
                                       const std::vector<double>& weights, int canvas_radius);

/// Seeds Bernoulli(density) per pixel, elongates them with an oriented
/// blur over streak_length/width at the slant angle, and composites the
/// layer additively with opacity and color. Returns the degraded image and
/// the coverage fraction (layer pixels above kRainCoverageThreshold,
/// independent of opacity).
std::pair<Image, double> apply_rain(const Image& img, const RainParams& rain, Rng rng);

/// Per channel: x8 = 255*v, sigma8 = max(0, k*x8 + b), add N(0, (sigma8/255)^2),
/// clamp to [0,1]. Returns the noisy image and sigma_bar, the mean of
/// sigma8/255 over all samples (post-clamp).
std::pair<Image, double> apply_noise(const Image& img, const NoiseParams& noise, Rng rng);

/// Evaluates the four severity closed forms against the recipe's measured
/// quantities and clamps each to [1,100]. Absent degradations score 1.
std::array<double, 4> severity_scores(const DegradationRecipe& recipe);

struct DegradeResult {
    Image degraded;
    std::vector<std::pair<std::string, Image>> snapshots; // one per applied stage
    DegradationRecipe recipe;                             // measured quantities filled in
};

/// Full composition: fog, then blur of the fogged image, then additive rain,
/// then additive noise. Measured quantities (t_mean, r_rms, coverage,
/// sigma_bar) and severity scores are written back into the returned recipe.
DegradeResult degrade(const Image& img, const DegradationRecipe& recipe, Rng rng);

} // namespace rnr
