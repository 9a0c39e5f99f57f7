#pragma once

#include <array>
#include <cmath>
#include <complex>
#include <vector>

#include "mkgm/grid.hpp"
#include "mkgm/kernels.hpp"

namespace mkgm {

using cplx = std::complex<double>;

template <class T>
class FieldT {
public:
    FieldT() = default;
    explicit FieldT(GridPtr g, T init = T{}) : grid_(std::move(g)), v_(grid_->cells(), init) {}

    const Grid& grid() const { return *grid_; }
    GridPtr grid_ptr() const { return grid_; }
    std::size_t size() const { return v_.size(); }

    T& operator[](std::size_t i) { return v_[i]; }
    const T& operator[](std::size_t i) const { return v_[i]; }
    T& at(int ix, int iy, int iz) { return v_[grid_->idx(ix, iy, iz)]; }
    const T& at(int ix, int iy, int iz) const { return v_[grid_->idx(ix, iy, iz)]; }

    T* data() { return v_.data(); }
    const T* data() const { return v_.data(); }

    void fill(T x) { parallel_for(size(), [&](std::size_t i) { v_[i] = x; }); }

private:
    GridPtr grid_;
    std::vector<T> v_;
};

using ScalarField = FieldT<double>;
using ComplexField = FieldT<cplx>;

struct VectorField3 {
    std::array<ScalarField, 3> c;

    VectorField3() = default;
    explicit VectorField3(GridPtr g) : c{ScalarField(g), ScalarField(g), ScalarField(g)} {}

    const Grid& grid() const { return c[0].grid(); }
    GridPtr grid_ptr() const { return c[0].grid_ptr(); }
    std::size_t size() const { return c[0].size(); }
    ScalarField& operator[](int a) { return c[a]; }
    const ScalarField& operator[](int a) const { return c[a]; }
    void fill(double x) { for (auto& f : c) f.fill(x); }
};

enum class IndexPos { lower, upper };  // covariant / contravariant

// Real four-vector field; metric signature (-,+,+,+), c = 1.
struct FourVectorField {
    ScalarField t;
    VectorField3 x;
    IndexPos pos = IndexPos::lower;

    FourVectorField() = default;
    FourVectorField(GridPtr g, IndexPos p) : t(g), x(g), pos(p) {}
    const Grid& grid() const { return t.grid(); }
    std::size_t size() const { return t.size(); }
    double comp(int a, std::size_t i) const { return a == 0 ? t[i] : x[a - 1][i]; }
    void set(int a, std::size_t i, double v) {
        if (a == 0) t[i] = v; else x[a - 1][i] = v;
    }
};

// Complex four-component field (covariant components of e.g. a modulated
// covariant derivative).
struct ComplexFourField {
    std::array<ComplexField, 4> c;
    IndexPos pos = IndexPos::lower;

    ComplexFourField() = default;
    ComplexFourField(GridPtr g, IndexPos p)
        : c{ComplexField(g), ComplexField(g), ComplexField(g), ComplexField(g)}, pos(p) {}
    const Grid& grid() const { return c[0].grid(); }
    std::size_t size() const { return c[0].size(); }
};

// Flip the index position: time component negates, space components unchanged.
inline FourVectorField raise_lower(const FourVectorField& v) {
    FourVectorField out(v.t.grid_ptr(), v.pos == IndexPos::lower ? IndexPos::upper : IndexPos::lower);
    parallel_for(v.size(), [&](std::size_t i) {
        out.t[i] = -v.t[i];
        for (int a = 0; a < 3; ++a) out.x[a][i] = v.x[a][i];
    });
    return out;
}

inline ComplexFourField raise_lower(const ComplexFourField& v) {
    ComplexFourField out(v.c[0].grid_ptr(), v.pos == IndexPos::lower ? IndexPos::upper : IndexPos::lower);
    parallel_for(v.size(), [&](std::size_t i) {
        out.c[0][i] = -v.c[0][i];
        for (int a = 1; a < 4; ++a) out.c[a][i] = v.c[a][i];
    });
    return out;
}

// Minkowski contraction v^a w_a at one cell, both arguments given in covariant
// components: -v0*w0 + v.w
inline double mink_dot(const FourVectorField& v, const FourVectorField& w, std::size_t i) {
    double s = -v.t[i] * w.t[i];
    for (int a = 0; a < 3; ++a) s += v.x[a][i] * w.x[a][i];
    return s;
}

inline bool all_finite(const ScalarField& f) {
    return chunked_sum(f.size(), [&](std::size_t i) { return std::isfinite(f[i]) ? 0.0 : 1.0; }) == 0.0;
}
inline bool all_finite(const ComplexField& f) {
    return chunked_sum(f.size(), [&](std::size_t i) {
               return (std::isfinite(f[i].real()) && std::isfinite(f[i].imag())) ? 0.0 : 1.0;
           }) == 0.0;
}
inline bool all_finite(const VectorField3& f) {
    return all_finite(f[0]) && all_finite(f[1]) && all_finite(f[2]);
}

}  // namespace mkgm
