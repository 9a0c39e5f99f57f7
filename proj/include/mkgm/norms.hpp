#pragma once

#include <cmath>

#include "mkgm/field.hpp"

// Uniform midpoint quadrature: every functional below is (sum of cell values)
// times the cell volume, so inequalities between discrete functionals hold
// exactly at quadrature level.
namespace mkgm {

enum class NormKind { L1, L2, Linf };

inline double integral(const ScalarField& f) {
    return chunked_sum(f.size(), [&](std::size_t i) { return f[i]; }) * f.grid().cell_volume();
}

inline double mean(const ScalarField& f) { return integral(f) / f.grid().volume(); }

inline double norm(const ScalarField& f, NormKind k) {
    switch (k) {
        case NormKind::L1:
            return chunked_sum(f.size(), [&](std::size_t i) { return std::abs(f[i]); }) * f.grid().cell_volume();
        case NormKind::L2:
            return std::sqrt(chunked_sum(f.size(), [&](std::size_t i) { return f[i] * f[i]; }) *
                             f.grid().cell_volume());
        default:
            return chunked_max(f.size(), [&](std::size_t i) { return std::abs(f[i]); });
    }
}

inline double norm(const ComplexField& f, NormKind k) {
    switch (k) {
        case NormKind::L1:
            return chunked_sum(f.size(), [&](std::size_t i) { return std::abs(f[i]); }) * f.grid().cell_volume();
        case NormKind::L2:
            return std::sqrt(chunked_sum(f.size(), [&](std::size_t i) { return std::norm(f[i]); }) *
                             f.grid().cell_volume());
        default:
            return chunked_max(f.size(), [&](std::size_t i) { return std::abs(f[i]); });
    }
}

inline double norm(const VectorField3& v, NormKind k) {
    switch (k) {
        case NormKind::L1:
            return chunked_sum(v.size(), [&](std::size_t i) {
                       return std::sqrt(v[0][i] * v[0][i] + v[1][i] * v[1][i] + v[2][i] * v[2][i]);
                   }) * v.grid().cell_volume();
        case NormKind::L2:
            return std::sqrt(chunked_sum(v.size(), [&](std::size_t i) {
                                 return v[0][i] * v[0][i] + v[1][i] * v[1][i] + v[2][i] * v[2][i];
                             }) * v.grid().cell_volume());
        default:
            return chunked_max(v.size(), [&](std::size_t i) {
                return std::sqrt(v[0][i] * v[0][i] + v[1][i] * v[1][i] + v[2][i] * v[2][i]);
            });
    }
}

inline double inner(const ScalarField& f, const ScalarField& g) {
    require_same_grid(f.grid(), g.grid(), "inner");
    return chunked_sum(f.size(), [&](std::size_t i) { return f[i] * g[i]; }) * f.grid().cell_volume();
}

inline double inner(const VectorField3& v, const VectorField3& w) {
    require_same_grid(v.grid(), w.grid(), "inner");
    return chunked_sum(v.size(), [&](std::size_t i) {
               return v[0][i] * w[0][i] + v[1][i] * w[1][i] + v[2][i] * w[2][i];
           }) * v.grid().cell_volume();
}

}  // namespace mkgm
