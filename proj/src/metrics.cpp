#include "rnr/metrics.hpp"

#include <cmath>
#include <stdexcept>
#include <vector>

#include "rnr/kernels.hpp"

namespace rnr {

namespace {

void check_shapes(const Image& a, const Image& b) {
    if (!a.same_shape(b))
        throw std::invalid_argument("image shape mismatch: " + std::to_string(a.height) + "x" +
                                    std::to_string(a.width) + " vs " + std::to_string(b.height) + "x" +
                                    std::to_string(b.width));
}

constexpr int kSsimWindow = 11;
constexpr double kSsimSigma = 1.5;
constexpr double kSsimC1 = 0.01 * 0.01;
constexpr double kSsimC2 = 0.03 * 0.03;

std::vector<double> ssim_window_weights() {
    std::vector<double> w(static_cast<std::size_t>(kSsimWindow) * kSsimWindow);
    const int r = kSsimWindow / 2;
    double sum = 0.0;
    for (int y = -r; y <= r; ++y)
        for (int x = -r; x <= r; ++x) {
            const double g = std::exp(-0.5 * (x * x + y * y) / (kSsimSigma * kSsimSigma));
            w[static_cast<std::size_t>(y + r) * kSsimWindow + (x + r)] = g;
            sum += g;
        }
    for (double& x : w) x /= sum;
    return w;
}

double ssim_at(const Plane& ya, const Plane& yb, const std::vector<double>& w, int y0, int x0) {
    double mu_a = 0.0, mu_b = 0.0;
    for (int ky = 0; ky < kSsimWindow; ++ky)
        for (int kx = 0; kx < kSsimWindow; ++kx) {
            const double wk = w[static_cast<std::size_t>(ky) * kSsimWindow + kx];
            mu_a += wk * ya.at(y0 + ky, x0 + kx);
            mu_b += wk * yb.at(y0 + ky, x0 + kx);
        }
    double var_a = 0.0, var_b = 0.0, cov = 0.0;
    for (int ky = 0; ky < kSsimWindow; ++ky)
        for (int kx = 0; kx < kSsimWindow; ++kx) {
            const double wk = w[static_cast<std::size_t>(ky) * kSsimWindow + kx];
            const double da = ya.at(y0 + ky, x0 + kx) - mu_a;
            const double db = yb.at(y0 + ky, x0 + kx) - mu_b;
            var_a += wk * da * da;
            var_b += wk * db * db;
            cov += wk * da * db;
        }
    return ((2.0 * mu_a * mu_b + kSsimC1) * (2.0 * cov + kSsimC2)) /
           ((mu_a * mu_a + mu_b * mu_b + kSsimC1) * (var_a + var_b + kSsimC2));
}

template <bool Parallel>
double ssim_impl(const Image& a, const Image& b) {
    check_shapes(a, b);
    if (a.height < kSsimWindow || a.width < kSsimWindow)
        throw std::invalid_argument("image smaller than the 11x11 SSIM window");

    static const std::vector<double> w = ssim_window_weights();
    const Plane ya = luma(a), yb = luma(b);
    const int ny = a.height - kSsimWindow + 1;
    const int nx = a.width - kSsimWindow + 1;

    // Row-partial sums keep the reduction order independent of the thread
    // count, so results are bit-identical for any --jobs setting.
    std::vector<double> row_sum(ny, 0.0);
#pragma omp parallel for schedule(static) if (Parallel)
    for (int y = 0; y < ny; ++y) {
        double acc = 0.0;
        for (int x = 0; x < nx; ++x) acc += ssim_at(ya, yb, w, y, x);
        row_sum[y] = acc;
    }
    double total = 0.0;
    for (double s : row_sum) total += s;
    return total / (static_cast<double>(ny) * nx);
}

} // namespace

double mse(const Image& a, const Image& b) {
    check_shapes(a, b);
    const int h = a.height;
    std::vector<double> row_sum(h, 0.0);
#pragma omp parallel for schedule(static)
    for (int y = 0; y < h; ++y) {
        double acc = 0.0;
        const std::size_t base = static_cast<std::size_t>(y) * a.width * 3;
        for (std::size_t i = base; i < base + static_cast<std::size_t>(a.width) * 3; ++i) {
            const double d = static_cast<double>(a.data[i]) - static_cast<double>(b.data[i]);
            acc += d * d;
        }
        row_sum[y] = acc;
    }
    double total = 0.0;
    for (double s : row_sum) total += s;
    return total / (static_cast<double>(a.pixel_count()) * 3.0);
}

double psnr(const Image& a, const Image& b) {
    const double e = mse(a, b);
    if (e < 1e-12) return kPsnrCapDb;
    return 10.0 * std::log10(1.0 / e);
}

double ssim(const Image& a, const Image& b) { return ssim_impl<true>(a, b); }

namespace serial {
double ssim(const Image& a, const Image& b) { return ssim_impl<false>(a, b); }
} // namespace serial

} // namespace rnr
