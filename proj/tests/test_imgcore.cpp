#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <filesystem>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "rnr/degrade.hpp"
#include "rnr/image.hpp"
#include "rnr/kernels.hpp"
#include "rnr/metrics.hpp"
#include "rnr/rng.hpp"
#include "support/synthetic.hpp"

using namespace rnr;

namespace {

Image random_image(Rng rng, int h, int w) {
    Image img(h, w);
    for (float& v : img.data) v = static_cast<float>(rng.uniform());
    return img;
}

BlurKernel box3_horizontal() {
    BlurKernel k;
    k.side = 3;
    k.weights = {0, 0, 0, 1.0 / 3, 1.0 / 3, 1.0 / 3, 0, 0, 0};
    return k;
}

} // namespace

TEST_CASE("identity kernel is a pixel-exact identity") {
    const Image img = random_image(Rng(1), 20, 31);
    const Image out = convolve2d(img, BlurKernel{});
    CHECK(out.data == img.data);
}

TEST_CASE("normalized kernels preserve constant signals") {
    const Image img(16, 16, 0.5f);
    const Image out = convolve2d(img, make_shake_kernel(Rng(3)));
    for (float v : out.data) CHECK(v == doctest::Approx(0.5).epsilon(1e-6));
}

TEST_CASE("horizontal box kernel spreads an impulse into three 1/3 pixels") {
    Image img(3, 3, 0.0f);
    for (int c = 0; c < 3; ++c) img.at(1, 1, c) = 1.0f;
    const Image out = convolve2d(img, box3_horizontal());
    for (int x = 0; x < 3; ++x)
        CHECK(out.at(1, x, 0) == doctest::Approx(1.0 / 3).epsilon(1e-7));
    CHECK(out.at(0, 0, 0) == 0.0f);
    CHECK(out.at(2, 2, 0) == 0.0f);
}

TEST_CASE("convolve2d rejects malformed kernels") {
    const Image img(8, 8, 0.3f);
    BlurKernel even;
    even.side = 2;
    even.weights = {0.25, 0.25, 0.25, 0.25};
    CHECK_THROWS_AS(convolve2d(img, even), std::invalid_argument);

    BlurKernel unnormalized;
    unnormalized.side = 3;
    unnormalized.weights.assign(9, 0.2);
    CHECK_THROWS_AS(convolve2d(img, unnormalized), std::invalid_argument);
}

TEST_CASE("convolution preserves the mean of an interior-supported image") {
    Image img(64, 64, 0.0f);
    for (int y = 24; y < 40; ++y)
        for (int x = 24; x < 40; ++x)
            for (int c = 0; c < 3; ++c) img.at(y, x, c) = 0.8f;

    ShakeConfig cfg;
    cfg.canvas_radius = 8; // support stays clear of the borders
    const Image out = convolve2d(img, make_shake_kernel(Rng(4), cfg));

    auto mean = [](const Image& im) {
        double s = 0.0;
        for (float v : im.data) s += v;
        return s / im.data.size();
    };
    CHECK(mean(out) == doctest::Approx(mean(img)).epsilon(1e-6));
}

TEST_CASE("psnr formula and cap") {
    const Image a(10, 10, 0.25f);

    CHECK(psnr(a, a) == kPsnrCapDb);

    Image b = a;
    for (float& v : b.data) v += 0.1f; // MSE 0.01
    CHECK(psnr(a, b) == doctest::Approx(20.0).epsilon(1e-5));
    CHECK(psnr(b, a) == psnr(a, b));

    Image c = a;
    const float d = static_cast<float>(std::sqrt(0.001));
    for (float& v : c.data) v += d; // MSE 0.001
    CHECK(psnr(a, c) == doctest::Approx(30.0).epsilon(1e-5));

    CHECK_THROWS_AS(psnr(a, Image(10, 11, 0.0f)), std::invalid_argument);
}

TEST_CASE("ssim self-similarity, constant separation, symmetry") {
    const Image a = random_image(Rng(5), 32, 32);
    CHECK(ssim(a, a) == doctest::Approx(1.0).epsilon(1e-12));

    const Image zeros(16, 16, 0.0f), ones(16, 16, 1.0f);
    CHECK(ssim(zeros, ones) < 0.01);

    const Image b = random_image(Rng(6), 32, 32);
    CHECK(std::abs(ssim(a, b) - ssim(b, a)) < 1e-9);

    CHECK_THROWS_AS(ssim(Image(10, 10, 0.5f), Image(10, 10, 0.5f)), std::invalid_argument);
}

TEST_CASE("ssim golden value on fixed noise fields") {
    const Image a = random_image(Rng(1234, 1), 48, 48);
    const Image b = random_image(Rng(1234, 2), 48, 48);
    // Frozen from a reference run; regression anchor only.
    CHECK(ssim(a, b) == doctest::Approx(0.042902104887837085).epsilon(1e-9));
}

TEST_CASE("parallel kernels match serial references bit for bit") {
    const Image a = random_image(Rng(7), 40, 56);
    const Image b = random_image(Rng(8), 40, 56);
    const BlurKernel kernel = make_shake_kernel(Rng(9));

    CHECK(convolve2d(a, kernel).data == serial::convolve2d(a, kernel).data);
    CHECK(ssim(a, b) == serial::ssim(a, b));
    const Plane ya = luma(a);
    CHECK(gaussian_blur(ya, 1.7).v == serial::gaussian_blur(ya, 1.7).v);
    CHECK(min_filter(ya, 5).v == serial::min_filter(ya, 5).v);

#ifdef _OPENMP
    const int saved = omp_get_max_threads();
    omp_set_num_threads(1);
    const Image one_thread = convolve2d(a, kernel);
    const double ssim_one = ssim(a, b);
    omp_set_num_threads(saved);
    CHECK(one_thread.data == convolve2d(a, kernel).data);
    CHECK(ssim_one == ssim(a, b));
#endif
}

TEST_CASE("png round trip is 8-bit exact") {
    const std::string path = (std::filesystem::temp_directory_path() / "rnr_png_test.png").string();

    Image img = random_image(Rng(10), 23, 17);
    // Values already on the 8-bit lattice survive exactly.
    for (std::size_t i = 0; i < img.data.size(); ++i)
        img.data[i] = static_cast<float>(std::lround(img.data[i] * 255.0f)) / 255.0f;

    write_png(path, img);
    const Image back = read_png(path);
    REQUIRE(back.same_shape(img));
    for (std::size_t i = 0; i < img.data.size(); ++i)
        CHECK(back.data[i] == doctest::Approx(img.data[i]).epsilon(1e-6));

    std::filesystem::remove(path);
    CHECK_THROWS_AS(read_png(path), std::runtime_error);
}

TEST_CASE("luma uses the Rec.601 weights") {
    Image img(1, 1);
    img.at(0, 0, 0) = 1.0f;
    img.at(0, 0, 1) = 0.5f;
    img.at(0, 0, 2) = 0.25f;
    const Plane y = luma(img);
    CHECK(y.at(0, 0) == doctest::Approx(0.299 + 0.587 * 0.5 + 0.114 * 0.25).epsilon(1e-6));
}
