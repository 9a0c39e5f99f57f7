// Timing comparison between the OpenMP kernels and the serial reference
// implementations: reductions, pointwise updates, and stencil derivatives.

#include <chrono>
#include <cstdio>
#include <random>

#include "mkgm/calculus.hpp"
#include "mkgm/harness.hpp"
#include "mkgm/norms.hpp"

using namespace mkgm;
using clk = std::chrono::steady_clock;

namespace {

double seconds(clk::time_point a, clk::time_point b) {
    return std::chrono::duration<double>(b - a).count();
}

template <class Fn>
double time_best_of(int reps, Fn&& fn) {
    double best = 1e300;
    for (int r = 0; r < reps; ++r) {
        auto t0 = clk::now();
        fn();
        best = std::min(best, seconds(t0, clk::now()));
    }
    return best;
}

}  // namespace

int main(int argc, char** argv) {
    int n = argc > 1 ? std::atoi(argv[1]) : 96;
    GridPtr g = make_grid({n, n, n}, {1.0, 1.0, 1.0});
    std::mt19937_64 rng(7);
    ScalarField f = random_smooth_scalar(g, rng, 3, 1.0);
    ScalarField out(g);
    const std::size_t cells = g->cells();
    std::printf("grid %d^3 (%zu cells)\n", n, cells);
    std::printf("%-28s %12s %12s %8s\n", "kernel", "omp [ms]", "serial [ms]", "speedup");

    volatile double sink = 0.0;

    double t_sum = time_best_of(5, [&] { sink = chunked_sum(cells, [&](std::size_t i) { return f[i] * f[i]; }); });
    double t_sum_ref = time_best_of(5, [&] { sink = ref::sum(cells, [&](std::size_t i) { return f[i] * f[i]; }); });
    std::printf("%-28s %12.3f %12.3f %8.2f\n", "sum of squares", 1e3 * t_sum, 1e3 * t_sum_ref,
                t_sum_ref / t_sum);

    double t_max = time_best_of(5, [&] { sink = chunked_max(cells, [&](std::size_t i) { return std::abs(f[i]); }); });
    double t_max_ref = time_best_of(5, [&] { sink = ref::max(cells, [&](std::size_t i) { return std::abs(f[i]); }); });
    std::printf("%-28s %12.3f %12.3f %8.2f\n", "max abs", 1e3 * t_max, 1e3 * t_max_ref,
                t_max_ref / t_max);

    double t_axpy = time_best_of(5, [&] {
        parallel_for(cells, [&](std::size_t i) { out[i] = 2.0 * f[i] + out[i]; });
    });
    double t_axpy_ref = time_best_of(5, [&] {
        ref::for_each(cells, [&](std::size_t i) { out[i] = 2.0 * f[i] + out[i]; });
    });
    std::printf("%-28s %12.3f %12.3f %8.2f\n", "axpy", 1e3 * t_axpy, 1e3 * t_axpy_ref,
                t_axpy_ref / t_axpy);

    double t_d2 = time_best_of(5, [&] { out = derivative(f, 0, Backend::fd2); });
    std::printf("%-28s %12.3f %12s\n", "fd2 derivative (omp)", 1e3 * t_d2, "-");
    double t_d4 = time_best_of(5, [&] { out = derivative(f, 0, Backend::fd4); });
    std::printf("%-28s %12.3f %12s\n", "fd4 derivative (omp)", 1e3 * t_d4, "-");
    double t_sp = time_best_of(5, [&] { out = derivative(f, 0, Backend::spectral); });
    std::printf("%-28s %12.3f %12s\n", "spectral derivative", 1e3 * t_sp, "-");

    (void)sink;
    return 0;
}
