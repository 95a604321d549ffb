#pragma once

#include "rnr/image.hpp"

namespace rnr {

/// Mean squared error over all pixels and channels, in [0,1] intensity space.
double mse(const Image& a, const Image& b);

/// 10*log10(1/MSE) with MAX = 1.0. Returns the 99.0 dB cap when MSE < 1e-12.
/// Throws std::invalid_argument on shape mismatch.
double psnr(const Image& a, const Image& b);

inline constexpr double kPsnrCapDb = 99.0;

/// Mean SSIM over sliding 11x11 windows on the luma channel. Gaussian window
/// sigma 1.5, C1 = 0.01^2, C2 = 0.03^2. Requires min(height, width) >= 11.
double ssim(const Image& a, const Image& b);

namespace serial {
double ssim(const Image& a, const Image& b);
} // namespace serial

} // namespace rnr
