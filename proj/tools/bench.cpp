// Benchmark: parallel kernels against their serial reference
// implementations. Also verifies the two paths agree bit for bit.

#include <chrono>
#include <cstdio>
#include <cstring>
#include <string>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "rnr/degrade.hpp"
#include "rnr/kernels.hpp"
#include "rnr/metrics.hpp"
#include "rnr/rng.hpp"

using clock_type = std::chrono::steady_clock;

namespace {

rnr::Image random_image(rnr::Rng rng, int h, int w) {
    rnr::Image img(h, w);
    for (float& v : img.data) v = static_cast<float>(rng.uniform());
    return img;
}

template <typename F>
double time_ms(F&& f, int reps) {
    const auto t0 = clock_type::now();
    for (int i = 0; i < reps; ++i) f();
    const auto t1 = clock_type::now();
    return std::chrono::duration<double, std::milli>(t1 - t0).count() / reps;
}

bool images_equal(const rnr::Image& a, const rnr::Image& b) {
    return a.data == b.data;
}

} // namespace

int main(int argc, char** argv) {
    const bool quick = argc > 1 && std::strcmp(argv[1], "--quick") == 0;
    const int size = quick ? 96 : 512;
    const int reps = quick ? 1 : 5;

#ifdef _OPENMP
    std::printf("threads: %d\n", omp_get_max_threads());
#else
    std::printf("threads: 1 (OpenMP disabled)\n");
#endif
    std::printf("image: %dx%d, %d rep(s)\n\n", size, size, reps);
    std::printf("%-22s %12s %12s %9s %6s\n", "kernel", "serial ms", "parallel ms", "speedup", "equal");

    rnr::Rng rng(42);
    const rnr::Image img = random_image(rng.fork(0), size, size);
    const rnr::Image img2 = random_image(rng.fork(1), size, size);

    bool all_equal = true;
    auto report = [&](const char* name, double ts, double tp, bool equal) {
        std::printf("%-22s %12.3f %12.3f %8.2fx %6s\n", name, ts, tp, ts / tp, equal ? "yes" : "NO");
        all_equal = all_equal && equal;
    };

    {
        const rnr::BlurKernel kernel = rnr::make_shake_kernel(rng.fork(2));
        rnr::Image out_s, out_p;
        const double ts = time_ms([&] { out_s = rnr::serial::convolve2d(img, kernel); }, reps);
        const double tp = time_ms([&] { out_p = rnr::convolve2d(img, kernel); }, reps);
        report("convolve2d (shake)", ts, tp, images_equal(out_s, out_p));
    }
    {
        const rnr::Plane plane = rnr::luma(img);
        rnr::Plane out_s, out_p;
        const double ts = time_ms([&] { out_s = rnr::serial::gaussian_blur(plane, 2.5); }, reps);
        const double tp = time_ms([&] { out_p = rnr::gaussian_blur(plane, 2.5); }, reps);
        report("gaussian_blur", ts, tp, out_s.v == out_p.v);
    }
    {
        const rnr::Plane plane = rnr::luma(img);
        rnr::Plane out_s, out_p;
        const double ts = time_ms([&] { out_s = rnr::serial::min_filter(plane, 7); }, reps);
        const double tp = time_ms([&] { out_p = rnr::min_filter(plane, 7); }, reps);
        report("min_filter r=7", ts, tp, out_s.v == out_p.v);
    }
    {
        double s_s = 0.0, s_p = 0.0;
        const double ts = time_ms([&] { s_s = rnr::serial::ssim(img, img2); }, reps);
        const double tp = time_ms([&] { s_p = rnr::ssim(img, img2); }, reps);
        report("ssim", ts, tp, s_s == s_p);
    }

    if (!all_equal) {
        std::printf("\nFAIL: parallel and serial kernels disagree\n");
        return 1;
    }
    std::printf("\nok: parallel kernels match serial references bit for bit\n");
    return 0;
}
