#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <vector>

#ifdef _OPENMP
#include <omp.h>
#endif

// Data-parallel kernels. Reductions use a fixed chunk decomposition so the
// summation order is identical for any thread count; mkgm::ref holds plain
// serial implementations used as the reference in tests and benchmarks.
namespace mkgm {

inline constexpr std::size_t kReduceChunk = 4096;

// Pointwise map over [0, n): body(i) must be independent per index.
template <class Body>
inline void parallel_for(std::size_t n, Body&& body) {
#pragma omp parallel for schedule(static)
    for (long long i = 0; i < (long long)n; ++i) body((std::size_t)i);
}

// Deterministic sum of term(i) over [0, n): chunk partials combined in order.
template <class Term>
inline double chunked_sum(std::size_t n, Term&& term) {
    const std::size_t nchunks = (n + kReduceChunk - 1) / kReduceChunk;
    std::vector<double> partial(nchunks, 0.0);
#pragma omp parallel for schedule(static)
    for (long long c = 0; c < (long long)nchunks; ++c) {
        const std::size_t lo = (std::size_t)c * kReduceChunk;
        const std::size_t hi = std::min(lo + kReduceChunk, n);
        double s = 0.0;
        for (std::size_t i = lo; i < hi; ++i) s += term(i);
        partial[(std::size_t)c] = s;
    }
    double total = 0.0;
    for (double p : partial) total += p;
    return total;
}

template <class Term>
inline double chunked_max(std::size_t n, Term&& term) {
    const std::size_t nchunks = (n + kReduceChunk - 1) / kReduceChunk;
    std::vector<double> partial(nchunks, 0.0);
#pragma omp parallel for schedule(static)
    for (long long c = 0; c < (long long)nchunks; ++c) {
        const std::size_t lo = (std::size_t)c * kReduceChunk;
        const std::size_t hi = std::min(lo + kReduceChunk, n);
        double m = 0.0;
        for (std::size_t i = lo; i < hi; ++i) m = std::max(m, term(i));
        partial[(std::size_t)c] = m;
    }
    double total = 0.0;
    for (double p : partial) total = std::max(total, p);
    return total;
}

namespace ref {

// Serial reference kernels (plain left-to-right accumulation).
template <class Term>
inline double sum(std::size_t n, Term&& term) {
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) s += term(i);
    return s;
}

template <class Term>
inline double max(std::size_t n, Term&& term) {
    double m = 0.0;
    for (std::size_t i = 0; i < n; ++i) m = std::max(m, term(i));
    return m;
}

template <class Body>
inline void for_each(std::size_t n, Body&& body) {
    for (std::size_t i = 0; i < n; ++i) body(i);
}

}  // namespace ref

}  // namespace mkgm
