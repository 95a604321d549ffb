#include "rnr/degrade.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace rnr {

namespace {

constexpr double kTransmissionFloor = 0.05;

double mean_of_plane(const Plane& p) {
    std::vector<double> row_sum(p.height, 0.0);
#pragma omp parallel for schedule(static)
    for (int y = 0; y < p.height; ++y) {
        double acc = 0.0;
        for (int x = 0; x < p.width; ++x) acc += p.at(y, x);
        row_sum[y] = acc;
    }
    double total = 0.0;
    for (double s : row_sum) total += s;
    return total / (static_cast<double>(p.height) * p.width);
}

} // namespace

double fog_severity_raw(double t_mean) { return (1.0 - t_mean) / (1.0 - 0.05) * 99.0 + 1.0; }
double shake_severity_raw(double r_rms, double r_max) { return r_rms / r_max * 99.0 + 1.0; }
double rain_severity_raw(double coverage) { return coverage * 99.0 + 1.0; }
double noise_severity_raw(double sigma_bar) { return sigma_bar / 0.05 * 99.0 + 1.0; }

double clamp_severity(double s) { return std::min(100.0, std::max(1.0, s)); }

DegradationRecipe sample_recipe(Rng rng, const SamplerConfig& config) {
    DegradationRecipe recipe;
    recipe.seed = rng.fork(5).next_u64();

    Rng flag_rng = rng.fork(0);
    for (int i = 0; i < kNumDegradations; ++i)
        recipe.present[i] = flag_rng.uniform() < config.inclusion_prob[i];

    if (recipe.present[kFog]) {
        Rng r = rng.fork(1);
        FogParams fog;
        for (int c = 0; c < 3; ++c) fog.atmospheric_light[c] = r.uniform(config.atmos_lo, config.atmos_hi);
        fog.beta = r.uniform(config.beta_lo, config.beta_hi);
        recipe.fog = std::move(fog);
    }
    if (recipe.present[kShake]) {
        ShakeConfig sc;
        sc.steps_lo = config.steps_lo;
        sc.steps_hi = config.steps_hi;
        sc.canvas_radius = config.canvas_radius;
        recipe.blur = make_shake_kernel(rng.fork(2), sc);
    }
    if (recipe.present[kRain]) {
        Rng r = rng.fork(3);
        RainParams rain;
        rain.density = r.uniform(config.density_lo, config.density_hi);
        rain.slant = r.uniform(config.slant_lo, config.slant_hi);
        rain.streak_length = r.uniform(config.rain_len_lo, config.rain_len_hi);
        rain.streak_width = r.uniform(config.rain_width_lo, config.rain_width_hi);
        rain.opacity = r.uniform(config.opacity_lo, config.opacity_hi);
        const std::array<double, 3>& atmos =
            recipe.fog ? recipe.fog->atmospheric_light : kDefaultRainAtmosphere;
        for (int c = 0; c < 3; ++c) rain.color[c] = 0.9 * atmos[c];
        recipe.rain = std::move(rain);
    }
    if (recipe.present[kNoise]) {
        Rng r = rng.fork(4);
        NoiseParams noise;
        noise.k = r.uniform(config.noise_k_lo, config.noise_k_hi);
        noise.b = r.uniform(config.noise_b_lo, config.noise_b_hi);
        recipe.noise = noise;
    }

    const bool degenerate = config.inclusion_prob[0] <= 0.0 && config.inclusion_prob[1] <= 0.0 &&
                            config.inclusion_prob[2] <= 0.0 && config.inclusion_prob[3] <= 0.0;
    if (degenerate) recipe.warning = "all inclusion probabilities are zero; recipe has no degradations";
    return recipe;
}

Plane synth_depth_prior(Rng rng, int height, int width) {
    if (height < 8 || width < 8) throw std::invalid_argument("depth prior needs at least 8x8");

    // Low-frequency value noise: a coarse random grid, smoothstep-blended.
    const int cell = std::max(8, std::min(height, width) / 4);
    const int gh = height / cell + 2, gw = width / cell + 2;
    std::vector<double> grid(static_cast<std::size_t>(gh) * gw);
    Rng grid_rng = rng.fork(0);
    for (double& g : grid) g = grid_rng.uniform();

    Plane out(height, width);
    std::vector<float>& v = out.v;
#pragma omp parallel for schedule(static)
    for (int y = 0; y < height; ++y) {
        const double gy = static_cast<double>(y) / cell;
        const int iy = static_cast<int>(gy);
        double fy = gy - iy;
        fy = fy * fy * (3.0 - 2.0 * fy);
        for (int x = 0; x < width; ++x) {
            const double gx = static_cast<double>(x) / cell;
            const int ix = static_cast<int>(gx);
            double fx = gx - ix;
            fx = fx * fx * (3.0 - 2.0 * fx);
            const double n00 = grid[static_cast<std::size_t>(iy) * gw + ix];
            const double n10 = grid[static_cast<std::size_t>(iy) * gw + ix + 1];
            const double n01 = grid[static_cast<std::size_t>(iy + 1) * gw + ix];
            const double n11 = grid[static_cast<std::size_t>(iy + 1) * gw + ix + 1];
            const double noise = (n00 * (1 - fx) + n10 * fx) * (1 - fy) + (n01 * (1 - fx) + n11 * fx) * fy;
            const double ramp = height > 1 ? static_cast<double>(y) / (height - 1) : 1.0;
            v[static_cast<std::size_t>(y) * width + x] = static_cast<float>(0.7 * ramp + 0.3 * noise);
        }
    }

    float lo = v[0], hi = v[0];
    for (float x : v) {
        lo = std::min(lo, x);
        hi = std::max(hi, x);
    }
    const float span = hi > lo ? hi - lo : 1.0f;
    for (float& x : v) x = 0.2f + 0.8f * (x - lo) / span;
    return out;
}

Image apply_fog(const Image& img, const FogParams& fog) {
    if (fog.transmission.height != img.height || fog.transmission.width != img.width)
        throw std::invalid_argument("transmission map size does not match image");
    Image out(img.height, img.width);
#pragma omp parallel for schedule(static)
    for (int y = 0; y < img.height; ++y)
        for (int x = 0; x < img.width; ++x) {
            const double t = fog.transmission.at(y, x);
            for (int c = 0; c < 3; ++c) {
                const double v = img.at(y, x, c) * t + fog.atmospheric_light[c] * (1.0 - t);
                out.at(y, x, c) = static_cast<float>(std::min(1.0, std::max(0.0, v)));
            }
        }
    return out;
}

BlurKernel make_kernel_from_trajectory(const std::vector<std::pair<double, double>>& points,
                                       const std::vector<double>& weights, int canvas_radius) {
    if (points.empty() || points.size() != weights.size())
        throw std::invalid_argument("trajectory needs matching, nonempty points and weights");
    if (canvas_radius < 1) throw std::invalid_argument("canvas radius must be >= 1");

    double wsum = 0.0, cx = 0.0, cy = 0.0;
    for (std::size_t i = 0; i < points.size(); ++i) {
        wsum += weights[i];
        cx += weights[i] * points[i].first;
        cy += weights[i] * points[i].second;
    }
    if (wsum <= 0.0) throw std::invalid_argument("trajectory weights must have positive mass");
    cx /= wsum;
    cy /= wsum;

    BlurKernel k;
    k.side = 2 * canvas_radius + 1;
    k.weights.assign(static_cast<std::size_t>(k.side) * k.side, 0.0);
    k.r_max = canvas_radius;
    for (std::size_t i = 0; i < points.size(); ++i)
        bilinear_splat(k.weights, k.side, canvas_radius + points[i].first - cx,
                       canvas_radius + points[i].second - cy, weights[i], &k.clipped);

    double sum = 0.0;
    for (double w : k.weights) sum += w;
    for (double& w : k.weights) w /= sum;

    const KernelStats stats = compute_kernel_stats(k.weights, k.side);
    k.direction = stats.direction;
    k.effective_length = stats.effective_length;
    k.energy = stats.energy;
    k.r_rms = stats.r_rms;
    return k;
}

BlurKernel make_shake_kernel(Rng rng, const ShakeConfig& config) {
    if (config.steps_lo < 1 || config.steps_hi < config.steps_lo)
        throw std::invalid_argument("invalid shake step range");
    const int steps =
        config.steps_lo + static_cast<int>(rng.uniform_int(config.steps_hi - config.steps_lo + 1));

    // Heading-persistent walk: unit steps with Gaussian angular increments,
    // the usual hand-shake model. Isotropic angles would diffuse as sqrt(n)
    // and never reach the canvas scale.
    std::vector<std::pair<double, double>> points;
    points.reserve(steps);
    double x = 0.0, y = 0.0;
    double heading = rng.uniform(0.0, 6.283185307179586476925287);
    points.emplace_back(x, y);
    for (int i = 1; i < steps; ++i) {
        heading += 0.3 * rng.normal();
        x += std::cos(heading);
        y += std::sin(heading);
        points.emplace_back(x, y);
    }

    // Temporal Gaussian centered mid-trajectory emphasizes the middle of the
    // exposure.
    const double sigma_t = steps / 4.0;
    const double mid = (steps - 1) / 2.0;
    std::vector<double> weights(steps);
    for (int i = 0; i < steps; ++i) {
        const double d = (i - mid) / sigma_t;
        weights[i] = std::exp(-0.5 * d * d);
    }
    return make_kernel_from_trajectory(points, weights, config.canvas_radius);
}

std::pair<Image, double> apply_rain(const Image& img, const RainParams& rain, Rng rng) {
    if (rain.density <= 0.0 || rain.density >= 1.0)
        throw std::invalid_argument("rain density must lie in (0,1)");
    const int h = img.height, w = img.width;

    Plane seeds(h, w, 0.0f);
#pragma omp parallel for schedule(static)
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            Rng px_rng = rng.fork(static_cast<std::uint64_t>(y) * w + x);
            if (px_rng.uniform() < rain.density) seeds.at(y, x) = 1.0f;
        }

    const BlurKernel line = line_kernel(rain.slant, rain.streak_length, rain.streak_width);
    Plane layer = convolve2d(seeds, line.weights, line.side);

    // Rescale so an isolated seed's streak core sits at 1, then count
    // visible pixels. Coverage is measured before opacity is applied.
    long long visible = 0;
    const double inv_peak = 1.0 / *std::max_element(line.weights.begin(), line.weights.end());
#pragma omp parallel for schedule(static) reduction(+ : visible)
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            const double v = std::min(1.0, layer.at(y, x) * inv_peak);
            layer.at(y, x) = static_cast<float>(v);
            if (v > kRainCoverageThreshold) ++visible;
        }
    const double coverage = static_cast<double>(visible) / (static_cast<double>(h) * w);

    Image out(h, w);
#pragma omp parallel for schedule(static)
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            const double l = rain.opacity * layer.at(y, x);
            for (int c = 0; c < 3; ++c) {
                const double v = img.at(y, x, c) + l * rain.color[c];
                out.at(y, x, c) = static_cast<float>(std::min(1.0, std::max(0.0, v)));
            }
        }
    return {std::move(out), coverage};
}

std::pair<Image, double> apply_noise(const Image& img, const NoiseParams& noise, Rng rng) {
    const int h = img.height, w = img.width;
    Image out(h, w);
    std::vector<double> row_sigma(h, 0.0);
#pragma omp parallel for schedule(static)
    for (int y = 0; y < h; ++y) {
        double acc = 0.0;
        for (int x = 0; x < w; ++x) {
            Rng px_rng = rng.fork(static_cast<std::uint64_t>(y) * w + x);
            for (int c = 0; c < 3; ++c) {
                const double v = img.at(y, x, c);
                const double sigma8 = std::max(0.0, noise.k * (255.0 * v) + noise.b);
                const double z = px_rng.normal();
                const double noisy = v + z * (sigma8 / 255.0);
                out.at(y, x, c) = static_cast<float>(std::min(1.0, std::max(0.0, noisy)));
                acc += sigma8 / 255.0;
            }
        }
        row_sigma[y] = acc;
    }
    double total = 0.0;
    for (double s : row_sigma) total += s;
    const double sigma_bar = total / (static_cast<double>(h) * w * 3.0);
    return {std::move(out), sigma_bar};
}

std::array<double, 4> severity_scores(const DegradationRecipe& recipe) {
    std::array<double, 4> s = {1.0, 1.0, 1.0, 1.0};
    if (recipe.present[kFog]) {
        if (!recipe.fog || recipe.fog->t_mean < 0.0)
            throw std::invalid_argument("fog severity needs a measured t_mean");
        s[kFog] = clamp_severity(fog_severity_raw(recipe.fog->t_mean));
    }
    if (recipe.present[kShake]) {
        if (!recipe.blur || recipe.blur->r_max <= 0.0)
            throw std::invalid_argument("shake severity needs kernel statistics");
        s[kShake] = clamp_severity(shake_severity_raw(recipe.blur->r_rms, recipe.blur->r_max));
    }
    if (recipe.present[kRain]) {
        if (!recipe.rain || recipe.rain->coverage < 0.0)
            throw std::invalid_argument("rain severity needs a measured coverage");
        s[kRain] = clamp_severity(rain_severity_raw(recipe.rain->coverage));
    }
    if (recipe.present[kNoise]) {
        if (!recipe.noise || recipe.noise->sigma_bar < 0.0)
            throw std::invalid_argument("noise severity needs a measured sigma_bar");
        s[kNoise] = clamp_severity(noise_severity_raw(recipe.noise->sigma_bar));
    }
    return s;
}

DegradeResult degrade(const Image& img, const DegradationRecipe& recipe, Rng rng) {
    DegradeResult result;
    result.recipe = recipe;
    Image cur = img;

    if (recipe.present[kFog]) {
        if (!result.recipe.fog) throw std::invalid_argument("fog flag set without parameters");
        FogParams& fog = *result.recipe.fog;
        // A pre-populated transmission map (e.g. from an external depth
        // source) is used as-is; otherwise one is synthesized.
        if (fog.transmission.v.empty()) {
            const Plane t0 = synth_depth_prior(rng.fork(0), img.height, img.width);
            Plane t(img.height, img.width);
#pragma omp parallel for schedule(static)
            for (int y = 0; y < img.height; ++y)
                for (int x = 0; x < img.width; ++x) {
                    const double v = std::pow(static_cast<double>(t0.at(y, x)), fog.beta);
                    t.at(y, x) = static_cast<float>(std::min(1.0, std::max(kTransmissionFloor, v)));
                }
            fog.transmission = std::move(t);
        }
        fog.t_mean = mean_of_plane(fog.transmission);
        cur = apply_fog(cur, fog);
        result.snapshots.emplace_back("fog", cur);
    }
    if (recipe.present[kShake]) {
        if (!result.recipe.blur) throw std::invalid_argument("shake flag set without a kernel");
        cur = convolve2d(cur, *result.recipe.blur);
        result.snapshots.emplace_back("blur", cur);
    }
    if (recipe.present[kRain]) {
        if (!result.recipe.rain) throw std::invalid_argument("rain flag set without parameters");
        auto [rained, coverage] = apply_rain(cur, *result.recipe.rain, rng.fork(2));
        cur = std::move(rained);
        result.recipe.rain->coverage = coverage;
        result.snapshots.emplace_back("rain", cur);
    }
    if (recipe.present[kNoise]) {
        if (!result.recipe.noise) throw std::invalid_argument("noise flag set without parameters");
        auto [noisy, sigma_bar] = apply_noise(cur, *result.recipe.noise, rng.fork(3));
        cur = std::move(noisy);
        result.recipe.noise->sigma_bar = sigma_bar;
        result.snapshots.emplace_back("noise", cur);
    }

    result.recipe.severity = severity_scores(result.recipe);
    result.degraded = std::move(cur);
    return result;
}

} // namespace rnr
