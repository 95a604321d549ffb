#include "rnr/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace rnr {

namespace {

inline int clamp_index(int i, int n) { return i < 0 ? 0 : (i >= n ? n - 1 : i); }

void check_kernel(const std::vector<double>& weights, int side) {
    if (side < 1 || side % 2 == 0)
        throw std::invalid_argument("kernel side must be odd and positive, got " + std::to_string(side));
    if (weights.size() != static_cast<std::size_t>(side) * side)
        throw std::invalid_argument("kernel weight count does not match side*side");
    double sum = 0.0;
    for (double w : weights) sum += w;
    if (std::abs(sum - 1.0) > 1e-9)
        throw std::invalid_argument("kernel weights must sum to 1 (got " + std::to_string(sum) + ")");
}

template <bool Parallel>
Image convolve2d_impl(const Image& img, const BlurKernel& kernel) {
    check_kernel(kernel.weights, kernel.side);
    const int h = img.height, w = img.width, r = kernel.side / 2;
    Image out(h, w);
#pragma omp parallel for schedule(static) if (Parallel)
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            double acc[3] = {0.0, 0.0, 0.0};
            for (int ky = -r; ky <= r; ++ky) {
                const int sy = clamp_index(y + ky, h);
                for (int kx = -r; kx <= r; ++kx) {
                    const int sx = clamp_index(x + kx, w);
                    const double kw = kernel.at(ky + r, kx + r);
                    const float* p = &img.data[(static_cast<std::size_t>(sy) * w + sx) * 3];
                    acc[0] += kw * p[0];
                    acc[1] += kw * p[1];
                    acc[2] += kw * p[2];
                }
            }
            float* q = &out.data[(static_cast<std::size_t>(y) * w + x) * 3];
            for (int c = 0; c < 3; ++c)
                q[c] = static_cast<float>(std::min(1.0, std::max(0.0, acc[c])));
        }
    }
    return out;
}

// Truncated Gaussian with the tail value exp(-4.5) subtracted, so taps
// enter the support at exactly zero and the kernel is continuous in sigma.
std::vector<double> gaussian_taps(double sigma, int& radius) {
    radius = std::max(1, static_cast<int>(std::ceil(3.0 * sigma)));
    const double tail = std::exp(-4.5);
    std::vector<double> taps(2 * radius + 1);
    double sum = 0.0;
    for (int i = -radius; i <= radius; ++i) {
        taps[i + radius] = std::max(0.0, std::exp(-0.5 * (i / sigma) * (i / sigma)) - tail);
        sum += taps[i + radius];
    }
    for (double& t : taps) t /= sum;
    return taps;
}

template <bool Parallel>
Plane gaussian_blur_plane(const Plane& plane, double sigma) {
    if (sigma <= 0.0) return plane;
    int r = 0;
    const std::vector<double> taps = gaussian_taps(sigma, r);
    const int h = plane.height, w = plane.width;

    Plane tmp(h, w), out(h, w);
#pragma omp parallel for schedule(static) if (Parallel)
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            double acc = 0.0;
            for (int k = -r; k <= r; ++k) acc += taps[k + r] * plane.at(y, clamp_index(x + k, w));
            tmp.at(y, x) = static_cast<float>(acc);
        }
#pragma omp parallel for schedule(static) if (Parallel)
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            double acc = 0.0;
            for (int k = -r; k <= r; ++k) acc += taps[k + r] * tmp.at(clamp_index(y + k, h), x);
            out.at(y, x) = static_cast<float>(acc);
        }
    return out;
}

template <bool Parallel>
Plane min_filter_impl(const Plane& plane, int radius) {
    if (radius < 1) return plane;
    const int h = plane.height, w = plane.width;
    Plane out(h, w);
#pragma omp parallel for schedule(static) if (Parallel)
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            float m = plane.at(y, x);
            for (int ky = -radius; ky <= radius; ++ky) {
                const int sy = clamp_index(y + ky, h);
                for (int kx = -radius; kx <= radius; ++kx)
                    m = std::min(m, plane.at(sy, clamp_index(x + kx, w)));
            }
            out.at(y, x) = m;
        }
    return out;
}

} // namespace

void bilinear_splat(std::vector<double>& grid, int side, double x, double y, double w, bool* clipped) {
    if (x < 0.0 || y < 0.0 || x > side - 1.0 || y > side - 1.0) {
        if (clipped) *clipped = true;
        x = std::min(std::max(x, 0.0), side - 1.0);
        y = std::min(std::max(y, 0.0), side - 1.0);
    }
    const int ix = std::min(static_cast<int>(x), side >= 2 ? side - 2 : 0);
    const int iy = std::min(static_cast<int>(y), side >= 2 ? side - 2 : 0);
    const double fx = x - ix, fy = y - iy;
    auto add = [&](int gx, int gy, double v) {
        if (gx >= 0 && gx < side && gy >= 0 && gy < side)
            grid[static_cast<std::size_t>(gy) * side + gx] += v;
    };
    add(ix, iy, w * (1.0 - fx) * (1.0 - fy));
    add(ix + 1, iy, w * fx * (1.0 - fy));
    add(ix, iy + 1, w * (1.0 - fx) * fy);
    add(ix + 1, iy + 1, w * fx * fy);
}

BlurKernel line_kernel(double slant, double length, double width) {
    BlurKernel k;
    const double half_len = std::max(0.0, (length - 1.0) / 2.0);
    const double half_width = std::max(0.0, (width - 1.0) / 2.0);
    const int r = static_cast<int>(std::ceil(half_len + half_width)) + 1;
    k.side = 2 * r + 1;
    k.weights.assign(static_cast<std::size_t>(k.side) * k.side, 0.0);
    k.r_max = r;

    const double dx = std::sin(slant), dy = std::cos(slant);
    const double px = std::cos(slant), py = -std::sin(slant);
    const double step = 0.25;
    for (double t = -half_len; t <= half_len + 1e-9; t += step)
        for (double u = -half_width; u <= half_width + 1e-9; u += step) {
            bilinear_splat(k.weights, k.side, r + t * dx + u * px, r + t * dy + u * py, 1.0, nullptr);
            if (half_width <= 0.0) break;
        }

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

Sym2Eigen eigen_sym2(double xx, double xy, double yy) {
    Sym2Eigen e;
    const double tr = xx + yy;
    const double det = xx * yy - xy * xy;
    const double disc = std::sqrt(std::max(0.0, tr * tr / 4.0 - det));
    e.lambda_major = tr / 2.0 + disc;
    e.lambda_minor = tr / 2.0 - disc;

    // Eigenvector of the major eigenvalue; fall back to the axes when the
    // matrix is (near) isotropic.
    double vx, vy;
    if (std::abs(xy) > 1e-300) {
        vx = e.lambda_major - yy;
        vy = xy;
    } else if (xx >= yy) {
        vx = 1.0;
        vy = 0.0;
    } else {
        vx = 0.0;
        vy = 1.0;
    }
    auto wrap = [](double a) {
        const double pi = 3.14159265358979323846;
        a = std::fmod(a, pi);
        return a < 0 ? a + pi : a;
    };
    e.angle_major = wrap(std::atan2(vy, vx));
    e.angle_minor = wrap(e.angle_major + 1.57079632679489661923);
    return e;
}

KernelStats compute_kernel_stats(const std::vector<double>& weights, int side) {
    KernelStats s;
    double cx = 0.0, cy = 0.0, sum = 0.0;
    for (int y = 0; y < side; ++y)
        for (int x = 0; x < side; ++x) {
            const double w = weights[static_cast<std::size_t>(y) * side + x];
            cx += w * x;
            cy += w * y;
            sum += w;
        }
    if (sum <= 0.0) return s;
    cx /= sum;
    cy /= sum;

    double mxx = 0.0, mxy = 0.0, myy = 0.0, energy2 = 0.0;
    for (int y = 0; y < side; ++y)
        for (int x = 0; x < side; ++x) {
            const double w = weights[static_cast<std::size_t>(y) * side + x] / sum;
            const double dx = x - cx, dy = y - cy;
            mxx += w * dx * dx;
            mxy += w * dx * dy;
            myy += w * dy * dy;
            energy2 += weights[static_cast<std::size_t>(y) * side + x] *
                       weights[static_cast<std::size_t>(y) * side + x];
        }

    const Sym2Eigen e = eigen_sym2(mxx, mxy, myy);
    s.direction = e.angle_major;
    s.effective_length = std::sqrt(std::max(0.0, e.lambda_major));
    s.energy = std::sqrt(energy2);
    s.r_rms = std::sqrt(std::max(0.0, mxx + myy));
    return s;
}

Image convolve2d(const Image& img, const BlurKernel& kernel) { return convolve2d_impl<true>(img, kernel); }

Plane convolve2d(const Plane& plane, const std::vector<double>& weights, int side) {
    check_kernel(weights, side);
    const int h = plane.height, w = plane.width, r = side / 2;
    Plane out(h, w);
#pragma omp parallel for schedule(static)
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            double acc = 0.0;
            for (int ky = -r; ky <= r; ++ky) {
                const int sy = clamp_index(y + ky, h);
                for (int kx = -r; kx <= r; ++kx)
                    acc += weights[static_cast<std::size_t>(ky + r) * side + (kx + r)] *
                           plane.at(sy, clamp_index(x + kx, w));
            }
            out.at(y, x) = static_cast<float>(acc);
        }
    return out;
}

Image gaussian_blur(const Image& img, double sigma) {
    if (sigma <= 0.0) return img;
    int r = 0;
    const std::vector<double> taps = gaussian_taps(sigma, r);
    const int h = img.height, w = img.width;

    Image tmp(h, w), out(h, w);
#pragma omp parallel for schedule(static)
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x)
            for (int c = 0; c < 3; ++c) {
                double acc = 0.0;
                for (int k = -r; k <= r; ++k) acc += taps[k + r] * img.at(y, clamp_index(x + k, w), c);
                tmp.at(y, x, c) = static_cast<float>(acc);
            }
#pragma omp parallel for schedule(static)
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x)
            for (int c = 0; c < 3; ++c) {
                double acc = 0.0;
                for (int k = -r; k <= r; ++k) acc += taps[k + r] * tmp.at(clamp_index(y + k, h), x, c);
                out.at(y, x, c) = static_cast<float>(acc);
            }
    return out;
}

Plane gaussian_blur(const Plane& plane, double sigma) { return gaussian_blur_plane<true>(plane, sigma); }

Plane min_filter(const Plane& plane, int radius) { return min_filter_impl<true>(plane, radius); }

Plane median_filter(const Plane& plane, int radius) {
    if (radius < 1) return plane;
    const int h = plane.height, w = plane.width;
    const int win = 2 * radius + 1;
    Plane out(h, w);
#pragma omp parallel for schedule(static)
    for (int y = 0; y < h; ++y) {
        std::vector<float> window(static_cast<std::size_t>(win) * win);
        for (int x = 0; x < w; ++x) {
            std::size_t n = 0;
            for (int ky = -radius; ky <= radius; ++ky) {
                const int sy = clamp_index(y + ky, h);
                for (int kx = -radius; kx <= radius; ++kx)
                    window[n++] = plane.at(sy, clamp_index(x + kx, w));
            }
            std::nth_element(window.begin(), window.begin() + n / 2, window.begin() + n);
            out.at(y, x) = window[n / 2];
        }
    }
    return out;
}

namespace serial {

Image convolve2d(const Image& img, const BlurKernel& kernel) { return convolve2d_impl<false>(img, kernel); }

Plane gaussian_blur(const Plane& plane, double sigma) { return gaussian_blur_plane<false>(plane, sigma); }

Plane min_filter(const Plane& plane, int radius) { return min_filter_impl<false>(plane, radius); }

} // namespace serial

} // namespace rnr
