#include "rnr/diagnose.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <numeric>
#include <sstream>
#include <stdexcept>
#include <string_view>
#include <vector>

#include "num_text.hpp"
#include "rnr/kernels.hpp"
#include "rnr/metrics.hpp"

namespace rnr {

namespace {

constexpr int kDarkChannelRadius = 7; // 15x15 window
constexpr double kMadToSigma = 1.4826;
// L2 norm of the 3x3 Laplacian [0 1 0; 1 -4 1; 0 1 0].
const double kLaplacianNorm = std::sqrt(20.0);
// Luma of iid per-channel noise has std |(0.299,0.587,0.114)| * sigma;
// dividing by this recovers the per-channel sigma the generator reports.
const double kLumaNoiseNorm = std::sqrt(0.299 * 0.299 + 0.587 * 0.587 + 0.114 * 0.114);
constexpr int kRainMedianRadius = 2;
constexpr double kRainResponseThreshold = 0.05;
constexpr double kRainBankLength = 9.0;
constexpr double kShakeRadius = 16.0; // r_max used by the shake severity mapping

double median_of(std::vector<float>& v) {
    if (v.empty()) return 0.0;
    const std::size_t n = v.size();
    std::nth_element(v.begin(), v.begin() + n / 2, v.end());
    double hi = v[n / 2];
    if (n % 2 == 1) return hi;
    std::nth_element(v.begin(), v.begin() + n / 2 - 1, v.begin() + n / 2);
    return (hi + v[n / 2 - 1]) / 2.0;
}

void require_size(const Image& img, int min_side, const char* who) {
    if (img.height < min_side || img.width < min_side)
        throw std::invalid_argument(std::string(who) + " needs at least " + std::to_string(min_side) +
                                    "x" + std::to_string(min_side) + " pixels");
}

// Frozen sweep of generator shake kernels: structure-tensor eigenvalue
// ratio (minor/major) of the blurred test texture vs the kernel's effective
// length. Interpolated linearly, clamped at the ends.
struct RatioLengthEntry {
    double ratio;
    double length;
};
constexpr RatioLengthEntry kBlurCalibration[] = {
    {1.000, 0.0}, {0.905, 0.0}, {0.777, 0.5}, {0.681, 1.0}, {0.589, 1.5}, {0.520, 2.2},
    {0.490, 3.0}, {0.460, 3.7}, {0.430, 5.0}, {0.409, 5.7}, {0.351, 7.0}, {0.305, 8.0},
    {0.258, 8.5}, {0.215, 9.2}, {0.100, 12.0}, {0.050, 14.0},
};

double ratio_to_length(double ratio) {
    const int n = static_cast<int>(std::size(kBlurCalibration));
    if (ratio >= kBlurCalibration[0].ratio) return kBlurCalibration[0].length;
    if (ratio <= kBlurCalibration[n - 1].ratio) return kBlurCalibration[n - 1].length;
    for (int i = 1; i < n; ++i) {
        if (ratio >= kBlurCalibration[i].ratio) {
            const auto& a = kBlurCalibration[i - 1];
            const auto& b = kBlurCalibration[i];
            const double f = (a.ratio - ratio) / (a.ratio - b.ratio);
            return a.length + f * (b.length - a.length);
        }
    }
    return kBlurCalibration[n - 1].length;
}

using numtext::fmt_double;

double parse_double(std::string_view s, int line_no, const char* what) {
    double v = 0.0;
    const char* first = s.data();
    const char* last = s.data() + s.size();
    auto [p, ec] = std::from_chars(first, last, v);
    if (ec != std::errc() || p != last)
        throw std::invalid_argument("report line " + std::to_string(line_no) + ": expected " + what +
                                    ", got '" + std::string(s) + "'");
    return v;
}

const char* kSeverityLabels[4] = {"Fog degradation", "Motion blur", "Rain streaks", "Gaussian noise"};

const char* kDegradationWords[] = {
    "fog",   "foggy", "haze",     "hazy",     "blur",        "blurry",  "blurred",
    "rain",  "rainy", "noise",    "noisy",    "grain",       "grainy",  "artifact",
    "artifacts",      "degraded", "degradation", "low contrast", "smudge", "streaks",
};

bool contains_word(const std::string& lower, std::string_view word) {
    std::size_t pos = 0;
    auto is_word_char = [](char c) { return (c >= 'a' && c <= 'z') || (c >= '0' && c <= '9'); };
    while ((pos = lower.find(word, pos)) != std::string::npos) {
        const bool left_ok = pos == 0 || !is_word_char(lower[pos - 1]);
        const std::size_t end = pos + word.size();
        const bool right_ok = end >= lower.size() || !is_word_char(lower[end]);
        if (left_ok && right_ok) return true;
        ++pos;
    }
    return false;
}

} // namespace

void validate_scene_description(const std::string& text) {
    if (text.empty()) return;
    int words = 0;
    std::istringstream iss(text);
    std::string tok;
    while (iss >> tok) ++words;
    if (words > 30)
        throw std::invalid_argument("scene description exceeds 30 words (" + std::to_string(words) + ")");

    std::string lower(text);
    std::transform(lower.begin(), lower.end(), lower.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    for (const char* w : kDegradationWords)
        if (contains_word(lower, w))
            throw std::invalid_argument(std::string("scene description mentions degradation term '") + w +
                                        "'");
}

FogDiagnosis estimate_fog(const Image& img) {
    require_size(img, 16, "estimate_fog");
    const int h = img.height, w = img.width;

    Plane min_channel(h, w);
#pragma omp parallel for schedule(static)
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x)
            min_channel.at(y, x) = std::min({img.at(y, x, 0), img.at(y, x, 1), img.at(y, x, 2)});
    const Plane dark = min_filter(min_channel, kDarkChannelRadius);

    // Atmospheric light: mean image color over the brightest 0.1% of
    // dark-channel pixels. Ties break on pixel index so the estimate is
    // deterministic.
    const std::size_t n = dark.v.size();
    const std::size_t top = std::max<std::size_t>(1, n / 1000);
    std::vector<std::uint32_t> order(n);
    std::iota(order.begin(), order.end(), 0u);
    std::partial_sort(order.begin(), order.begin() + top, order.end(), [&](std::uint32_t a, std::uint32_t b) {
        if (dark.v[a] != dark.v[b]) return dark.v[a] > dark.v[b];
        return a < b;
    });

    FogDiagnosis d;
    double acc[3] = {0.0, 0.0, 0.0};
    for (std::size_t i = 0; i < top; ++i) {
        const float* p = &img.data[static_cast<std::size_t>(order[i]) * 3];
        for (int c = 0; c < 3; ++c) acc[c] += p[c];
    }
    for (int c = 0; c < 3; ++c)
        d.estimate.atmospheric_light[c] = std::min(1.0, std::max(1e-3, acc[c] / static_cast<double>(top)));

    Plane ratio(h, w);
#pragma omp parallel for schedule(static)
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            double m = 1.0;
            for (int c = 0; c < 3; ++c)
                m = std::min(m, img.at(y, x, c) / d.estimate.atmospheric_light[c]);
            ratio.at(y, x) = static_cast<float>(std::max(0.0, m));
        }
    const Plane dark_ratio = min_filter(ratio, kDarkChannelRadius);

    std::vector<double> row_sum(h, 0.0);
#pragma omp parallel for schedule(static)
    for (int y = 0; y < h; ++y) {
        double acc_t = 0.0;
        for (int x = 0; x < w; ++x)
            acc_t += std::min(1.0, std::max(0.05, 1.0 - static_cast<double>(dark_ratio.at(y, x))));
        row_sum[y] = acc_t;
    }
    double total = 0.0;
    for (double s : row_sum) total += s;
    d.estimate.t_mean = std::min(1.0, std::max(0.05, total / (static_cast<double>(h) * w)));
    d.severity = clamp_severity(fog_severity_raw(d.estimate.t_mean));
    return d;
}

NoiseDiagnosis estimate_noise(const Image& img) {
    require_size(img, 16, "estimate_noise");
    const Plane y = luma(img);
    const int h = y.height, w = y.width;

    std::vector<float> lap;
    lap.reserve(static_cast<std::size_t>(h - 2) * (w - 2));
    for (int r = 1; r < h - 1; ++r)
        for (int c = 1; c < w - 1; ++c)
            lap.push_back(y.at(r - 1, c) + y.at(r + 1, c) + y.at(r, c - 1) + y.at(r, c + 1) -
                          4.0f * y.at(r, c));

    const double med = median_of(lap);
    for (float& v : lap) v = std::abs(v - static_cast<float>(med));
    const double mad = median_of(lap);

    NoiseDiagnosis d;
    d.estimate.sigma = kMadToSigma * mad / (kLaplacianNorm * kLumaNoiseNorm);
    d.severity = clamp_severity(noise_severity_raw(d.estimate.sigma));
    return d;
}

BlurDiagnosis estimate_blur(const Image& img) {
    require_size(img, 32, "estimate_blur");
    const Plane y = luma(img);
    const int h = y.height, w = y.width;

    std::vector<double> row_xx(h, 0.0), row_xy(h, 0.0), row_yy(h, 0.0);
#pragma omp parallel for schedule(static)
    for (int r = 1; r < h - 1; ++r) {
        double xx = 0.0, xy = 0.0, yy = 0.0;
        for (int c = 1; c < w - 1; ++c) {
            const double gx = 0.5 * (y.at(r, c + 1) - y.at(r, c - 1));
            const double gy = 0.5 * (y.at(r + 1, c) - y.at(r - 1, c));
            xx += gx * gx;
            xy += gx * gy;
            yy += gy * gy;
        }
        row_xx[r] = xx;
        row_xy[r] = xy;
        row_yy[r] = yy;
    }
    double jxx = 0.0, jxy = 0.0, jyy = 0.0;
    for (int r = 0; r < h; ++r) {
        jxx += row_xx[r];
        jxy += row_xy[r];
        jyy += row_yy[r];
    }

    BlurDiagnosis d;
    if (jxx + jyy < 1e-12) {
        // No gradients at all: no evidence of blur.
        d.severity = 1.0;
        return d;
    }
    const Sym2Eigen e = eigen_sym2(jxx, jxy, jyy);
    const double ratio = e.lambda_major > 0.0 ? std::max(0.0, e.lambda_minor / e.lambda_major) : 1.0;
    d.estimate.direction = e.angle_minor;
    d.estimate.effective_length = ratio_to_length(ratio);
    d.severity = clamp_severity(shake_severity_raw(d.estimate.effective_length, kShakeRadius));
    return d;
}

RainDiagnosis estimate_rain(const Image& img) {
    require_size(img, 32, "estimate_rain");
    const Plane y = luma(img);
    // Median top-hat: thin bright streaks survive, region edges and smooth
    // texture cancel out.
    const Plane background = median_filter(y, kRainMedianRadius);
    const int h = y.height, w = y.width;

    Plane detail(h, w);
#pragma omp parallel for schedule(static)
    for (int i = 0; i < h; ++i)
        for (int j = 0; j < w; ++j)
            detail.at(i, j) = std::max(0.0f, y.at(i, j) - background.at(i, j));

    // The aligned orientation concentrates streak detail into high peaks;
    // misaligned ones smear it thin. Pick the winner by response energy,
    // then read coverage off the winner's thresholded support.
    RainDiagnosis d;
    double best_energy = -1.0, best_slant = 0.0;
    Plane best_response;
    for (int i = 0; i < 8; ++i) {
        const double slant = (-70.0 + 20.0 * i) * 3.14159265358979323846 / 180.0;
        const BlurKernel line = line_kernel(slant, kRainBankLength, 1.0);
        Plane response = convolve2d(detail, line.weights, line.side);
        double energy = 0.0;
        for (float v : response.v) energy += static_cast<double>(v) * v;
        if (energy > best_energy) {
            best_energy = energy;
            best_slant = slant;
            best_response = std::move(response);
        }
    }

    long long hits = 0;
#pragma omp parallel for schedule(static) reduction(+ : hits)
    for (int r = 0; r < h; ++r)
        for (int c = 0; c < w; ++c)
            if (best_response.at(r, c) > kRainResponseThreshold) ++hits;
    const double coverage = static_cast<double>(hits) / (static_cast<double>(h) * w);

    d.estimate.coverage = coverage;
    d.estimate.slant = best_slant;
    d.severity = clamp_severity(rain_severity_raw(coverage));
    return d;
}

DiagnosticReport diagnose(const Image& img) {
    require_size(img, 32, "diagnose");

    const FogDiagnosis fog = estimate_fog(img);
    const BlurDiagnosis blur = estimate_blur(img);
    const RainDiagnosis rain = estimate_rain(img);
    const NoiseDiagnosis noise = estimate_noise(img);

    DiagnosticReport report;
    report.fog = fog.estimate;
    report.blur = blur.estimate;
    report.rain = rain.estimate;
    report.noise = noise.estimate;
    report.severity = {fog.severity, blur.severity, rain.severity, noise.severity};
    for (int i = 0; i < kNumDegradations; ++i)
        report.present[i] = report.severity[i] > kPresenceThreshold;
    return report;
}

std::string render_report(const DiagnosticReport& report) {
    std::string out = "# diagnostic-report v1\n";
    for (int i = 0; i < kNumDegradations; ++i) {
        out += kSeverityLabels[i];
        out += ": ";
        out += report.present[i] ? "Yes" : "No";
        out += " (" + fmt_double(report.severity[i]) + ")\n";
    }
    out += "Parameters:\n";
    out += "  fog.atmospheric_light = " + fmt_double(report.fog.atmospheric_light[0]) + " " +
           fmt_double(report.fog.atmospheric_light[1]) + " " + fmt_double(report.fog.atmospheric_light[2]) +
           "\n";
    out += "  fog.transmission_mean = " + fmt_double(report.fog.t_mean) + "\n";
    out += "  blur.direction_rad = " + fmt_double(report.blur.direction) + "\n";
    out += "  blur.effective_length_px = " + fmt_double(report.blur.effective_length) + "\n";
    out += "  rain.coverage = " + fmt_double(report.rain.coverage) + "\n";
    out += "  rain.slant_rad = " + fmt_double(report.rain.slant) + "\n";
    out += "  noise.sigma = " + fmt_double(report.noise.sigma) + "\n";
    if (!report.scene_description.empty()) out += "Clean scene: " + report.scene_description + "\n";
    return out;
}

namespace {

std::vector<std::string> split_lines(const std::string& text) {
    std::vector<std::string> lines;
    std::string cur;
    for (char c : text) {
        if (c == '\n') {
            lines.push_back(cur);
            cur.clear();
        } else {
            cur += c;
        }
    }
    if (!cur.empty()) lines.push_back(cur);
    return lines;
}

[[noreturn]] void parse_fail(int line_no, const std::string& expected) {
    throw std::invalid_argument("report line " + std::to_string(line_no) + ": expected " + expected);
}

double parse_param_line(const std::vector<std::string>& lines, std::size_t idx, const char* key) {
    const int line_no = static_cast<int>(idx) + 1;
    if (idx >= lines.size()) parse_fail(line_no, std::string("'  ") + key + " = <value>'");
    const std::string prefix = std::string("  ") + key + " = ";
    if (lines[idx].rfind(prefix, 0) != 0) parse_fail(line_no, std::string("'  ") + key + " = <value>'");
    return parse_double(std::string_view(lines[idx]).substr(prefix.size()), line_no, "a number");
}

} // namespace

DiagnosticReport parse_report(const std::string& text) {
    const std::vector<std::string> lines = split_lines(text);
    if (lines.empty() || lines[0] != "# diagnostic-report v1") {
        const std::string found = lines.empty() ? "" : lines[0];
        throw std::invalid_argument("report line 1: expected '# diagnostic-report v1', got '" + found + "'");
    }

    DiagnosticReport report;
    for (int i = 0; i < kNumDegradations; ++i) {
        const std::size_t idx = 1 + i;
        const int line_no = static_cast<int>(idx) + 1;
        const std::string pattern = std::string("'") + kSeverityLabels[i] + ": Yes|No (<score>)'";
        if (idx >= lines.size()) parse_fail(line_no, pattern);
        const std::string& line = lines[idx];
        const std::string prefix = std::string(kSeverityLabels[i]) + ": ";
        if (line.rfind(prefix, 0) != 0) parse_fail(line_no, pattern);
        std::string_view rest = std::string_view(line).substr(prefix.size());
        if (rest.rfind("Yes (", 0) == 0) {
            report.present[i] = true;
            rest.remove_prefix(5);
        } else if (rest.rfind("No (", 0) == 0) {
            report.present[i] = false;
            rest.remove_prefix(4);
        } else {
            parse_fail(line_no, pattern);
        }
        if (rest.empty() || rest.back() != ')') parse_fail(line_no, pattern);
        rest.remove_suffix(1);
        report.severity[i] = parse_double(rest, line_no, "a severity score");
        if (report.severity[i] < 1.0 || report.severity[i] > 100.0)
            throw std::invalid_argument("report line " + std::to_string(line_no) +
                                        ": severity out of [1,100]");
    }

    if (lines.size() <= 5 || lines[5] != "Parameters:") parse_fail(6, "'Parameters:'");

    report.fog.t_mean = 0.0; // overwritten below; silence default
    {
        const std::string prefix = "  fog.atmospheric_light = ";
        if (lines.size() <= 6 || lines[6].rfind(prefix, 0) != 0)
            parse_fail(7, "'  fog.atmospheric_light = <r> <g> <b>'");
        std::istringstream iss(lines[6].substr(prefix.size()));
        std::string a, b, c, extra;
        if (!(iss >> a >> b >> c) || (iss >> extra))
            parse_fail(7, "'  fog.atmospheric_light = <r> <g> <b>'");
        report.fog.atmospheric_light = {parse_double(a, 7, "a number"), parse_double(b, 7, "a number"),
                                        parse_double(c, 7, "a number")};
    }
    report.fog.t_mean = parse_param_line(lines, 7, "fog.transmission_mean");
    report.blur.direction = parse_param_line(lines, 8, "blur.direction_rad");
    report.blur.effective_length = parse_param_line(lines, 9, "blur.effective_length_px");
    report.rain.coverage = parse_param_line(lines, 10, "rain.coverage");
    report.rain.slant = parse_param_line(lines, 11, "rain.slant_rad");
    report.noise.sigma = parse_param_line(lines, 12, "noise.sigma");

    if (lines.size() > 13) {
        const std::string prefix = "Clean scene: ";
        if (lines[13].rfind(prefix, 0) != 0) parse_fail(14, "'Clean scene: <description>' or end of report");
        report.scene_description = lines[13].substr(prefix.size());
        validate_scene_description(report.scene_description);
        if (lines.size() > 14) parse_fail(15, "end of report");
    }
    return report;
}

} // namespace rnr
