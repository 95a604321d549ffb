#pragma once

#include <array>
#include <string>

#include "rnr/degrade.hpp"
#include "rnr/image.hpp"

namespace rnr {

/// A degradation is reported present when its severity exceeds this.
inline constexpr double kPresenceThreshold = 20.0;

struct FogEstimate {
    std::array<double, 3> atmospheric_light = {1.0, 1.0, 1.0};
    double t_mean = 1.0;
};

struct BlurEstimate {
    double direction = 0.0;        // radians in [0, pi)
    double effective_length = 0.0; // px
};

struct RainEstimate {
    double coverage = 0.0;
    double slant = 0.0; // radians from vertical
};

struct NoiseEstimate {
    double sigma = 0.0; // normalized intensity units
};

/// Structured diagnostic record: presence, severity, parameter estimates,
/// and an optional opaque clean-scene description (never generated here;
/// carried through for callers that have one).
struct DiagnosticReport {
    std::array<bool, 4> present = {false, false, false, false};
    std::array<double, 4> severity = {1.0, 1.0, 1.0, 1.0};
    FogEstimate fog;
    BlurEstimate blur;
    RainEstimate rain;
    NoiseEstimate noise;
    std::string scene_description; // empty = absent, otherwise <= 30 words
};

/// Throws std::invalid_argument if the description exceeds 30 words or
/// mentions degradation vocabulary (fog, blur, rain, noise, ...).
void validate_scene_description(const std::string& text);

/// Dark-channel fog estimate: atmospheric light from the brightest 0.1% of
/// dark-channel pixels, t(x) = 1 - min-filtered min-channel(I/A), 15x15
/// window. Returns (A, t_mean, severity).
struct FogDiagnosis {
    FogEstimate estimate;
    double severity = 1.0;
};
FogDiagnosis estimate_fog(const Image& img);

/// MAD of the Laplacian-filtered luma, scaled by the MAD-to-sigma and
/// Laplacian-norm constants.
struct NoiseDiagnosis {
    NoiseEstimate estimate;
    double severity = 1.0;
};
NoiseDiagnosis estimate_noise(const Image& img);

/// Structure-tensor anisotropy: blur direction is the minor-energy
/// eigenvector angle; length is read off a frozen ratio-to-length
/// calibration table.
struct BlurDiagnosis {
    BlurEstimate estimate;
    double severity = 1.0;
};
BlurDiagnosis estimate_blur(const Image& img);

/// Oriented high-pass bank over 8 slant angles; the winning orientation's
/// thresholded response fraction is the coverage estimate.
struct RainDiagnosis {
    RainEstimate estimate;
    double severity = 1.0;
};
RainDiagnosis estimate_rain(const Image& img);

/// Runs all four estimators and assembles the report. Pure and
/// deterministic; requires min(height, width) >= 32.
DiagnosticReport diagnose(const Image& img);

/// Fixed text template: schema tag, four "Yes/No (score)" lines, a
/// parameter block, and an optional clean-scene line. Bijective with
/// parse_report on the template grammar.
std::string render_report(const DiagnosticReport& report);

/// Exact inverse of render_report. Throws std::invalid_argument naming the
/// offending line number and the expected pattern.
DiagnosticReport parse_report(const std::string& text);

} // namespace rnr
