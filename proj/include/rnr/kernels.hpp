#pragma once

#include <vector>

#include "rnr/image.hpp"

namespace rnr {

/// Normalized 2D convolution kernel with statistics derived from its own
/// weights. `weights` is an odd `side` x `side` grid, nonnegative, summing
/// to 1. Angles are measured in the (x, y) pixel plane with x to the right
/// and y downward; `direction` lies in [0, pi).
struct BlurKernel {
    int side = 1;
    std::vector<double> weights = {1.0};

    double direction = 0.0;        // radians, principal axis of the weight mass
    double effective_length = 0.0; // sqrt of the largest second-moment eigenvalue, px
    double energy = 1.0;           // L2 norm of the weights
    double r_rms = 0.0;            // weighted RMS distance from the centroid, px
    double r_max = 0.0;            // canvas radius the kernel was rasterized on, px
    bool clipped = false;          // trajectory fell outside the canvas

    double at(int ky, int kx) const { return weights[static_cast<std::size_t>(ky) * side + kx]; }
};

struct KernelStats {
    double direction = 0.0;
    double effective_length = 0.0;
    double energy = 0.0;
    double r_rms = 0.0;
};

/// Eigen-decomposition of the symmetric 2x2 matrix [[xx, xy], [xy, yy]].
/// angle_major/angle_minor are the eigenvector angles in [0, pi).
struct Sym2Eigen {
    double lambda_major = 0.0;
    double lambda_minor = 0.0;
    double angle_major = 0.0;
    double angle_minor = 0.0;
};
Sym2Eigen eigen_sym2(double xx, double xy, double yy);

/// Direction, effective length, energy and RMS radius of a weight grid,
/// recomputed from scratch. make_shake_kernel stores exactly these values.
KernelStats compute_kernel_stats(const std::vector<double>& weights, int side);

/// Deposits `w` at the continuous grid position (x, y) with bilinear
/// weights, clamping positions that fall outside and reporting the clip.
void bilinear_splat(std::vector<double>& grid, int side, double x, double y, double w, bool* clipped);

/// Thin line segment rasterized as a normalized kernel. `slant` is measured
/// from the vertical axis (0 = vertical streak), length and width in px.
/// Used to elongate rain seeds and as the rain estimator's matched filter.
BlurKernel line_kernel(double slant, double length, double width);

/// 2D convolution with edge replication; output clamped to [0,1].
/// Rejects kernels with even side or weights not summing to 1 within 1e-9.
Image convolve2d(const Image& img, const BlurKernel& kernel);

Plane convolve2d(const Plane& plane, const std::vector<double>& weights, int side);

/// Separable Gaussian blur, edge replication, radius ceil(3*sigma).
/// sigma <= 0 returns the input unchanged.
Image gaussian_blur(const Image& img, double sigma);
Plane gaussian_blur(const Plane& plane, double sigma);

/// Grayscale erosion with a (2r+1)x(2r+1) square window, edge replication.
Plane min_filter(const Plane& plane, int radius);

/// Median over a (2r+1)x(2r+1) square window, edge replication.
Plane median_filter(const Plane& plane, int radius);

/// Serial reference implementations. Kept for correctness tests against the
/// parallel kernels above and for the benchmark target.
namespace serial {
Image convolve2d(const Image& img, const BlurKernel& kernel);
Plane gaussian_blur(const Plane& plane, double sigma);
Plane min_filter(const Plane& plane, int radius);
} // namespace serial

} // namespace rnr
