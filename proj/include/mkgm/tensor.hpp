#pragma once

#include <array>

#include "mkgm/calculus.hpp"
#include "mkgm/field.hpp"

namespace mkgm {

// Antisymmetric rank-2 field stored as the (E, B) pair. Component convention:
//   F_{0i} = E_i,  F_{ij} = -eps_{ijk} B_k
// i.e. the covariant matrix
//   [  0   E1   E2   E3 ]
//   [ -E1   0  -B3   B2 ]
//   [ -E2  B3    0  -B1 ]
//   [ -E3 -B2   B1    0 ]
struct FaradayField {
    VectorField3 E;
    VectorField3 B;

    FaradayField() = default;
    explicit FaradayField(GridPtr g) : E(g), B(g) {}
    FaradayField(VectorField3 e, VectorField3 b) : E(std::move(e)), B(std::move(b)) {
        require_same_grid(E.grid(), B.grid(), "FaradayField");
    }
    const Grid& grid() const { return E.grid(); }
    std::size_t size() const { return E.size(); }

    // covariant component F_{ab} at one cell
    double lower(int a, int b, std::size_t i) const {
        if (a == b) return 0.0;
        if (a == 0) return E[b - 1][i];
        if (b == 0) return -E[a - 1][i];
        // spatial block: F_{ij} = -eps_{ijk} B_k
        int k = 3 - (a - 1) - (b - 1);  // the remaining spatial index (0-based)
        double sign = ((a - 1) == (k + 1) % 3) ? 1.0 : -1.0;  // eps_{ijk}
        return -sign * B[k][i];
    }
    // contravariant F^{ab}: raising each index flips sign once per 0-index
    double upper(int a, int b, std::size_t i) const {
        double s = lower(a, b, i);
        if (a == 0) s = -s;
        if (b == 0) s = -s;
        return s;
    }
};

inline FaradayField faraday_pack(const VectorField3& E, const VectorField3& B) {
    require_same_grid(E.grid(), B.grid(), "faraday_pack");
    return FaradayField(E, B);
}

// F_{mu nu} F^{mu nu} = 2|B|^2 - 2|E|^2 cellwise.
ScalarField faraday_scalar(const FaradayField& F);

// Symmetric 4x4 per cell; 10 independent components in the order
// 00, 01, 02, 03, 11, 12, 13, 22, 23, 33 (covariant indices).
struct StressTensorField {
    std::array<ScalarField, 10> c;

    StressTensorField() = default;
    explicit StressTensorField(GridPtr g) {
        for (auto& f : c) f = ScalarField(g);
    }
    const Grid& grid() const { return c[0].grid(); }
    std::size_t size() const { return c[0].size(); }

    static int slot(int a, int b) {
        if (a > b) std::swap(a, b);
        static constexpr int off[4] = {0, 4, 7, 9};
        return off[a] + (b - a);
    }
    double& at(int a, int b, std::size_t i) { return c[slot(a, b)][i]; }
    double at(int a, int b, std::size_t i) const { return c[slot(a, b)][i]; }
};

// Electromagnetic part F_{a mu} G_b^{ mu} - (1/4) g_ab F_{mu nu} G^{mu nu},
// symmetrized in (F, G). With F == G this is the EM stress tensor.
void add_em_stress(StressTensorField& T, const FaradayField& F, const FaradayField& G,
                   double weight);

// M(F,G)_{ab} = F_{a mu} G_b^{ mu} at one cell (not symmetric in general).
inline double fg_contract(const FaradayField& F, const FaradayField& G, int a, int b,
                          std::size_t i) {
    double s = 0.0;
    for (int mu = 0; mu < 4; ++mu) {
        double gm = (mu == 0) ? -1.0 : 1.0;  // raise mu on G
        s += F.lower(a, mu, i) * gm * G.lower(b, mu, i);
    }
    return s;
}

// F_{mu nu} G^{mu nu} = 2(B.B' - E.E') at one cell.
inline double ff_scalar(const FaradayField& F, const FaradayField& G, std::size_t i) {
    double bb = F.B[0][i] * G.B[0][i] + F.B[1][i] * G.B[1][i] + F.B[2][i] * G.B[2][i];
    double ee = F.E[0][i] * G.E[0][i] + F.E[1][i] * G.E[1][i] + F.E[2][i] * G.E[2][i];
    return 2.0 * (bb - ee);
}

// Temporal-gauge transform of the semiclassical pair: Phi' = e^{-i chi} Phi,
// A' = A + eps * grad(chi). Leaves |Phi|, the current, and curl A invariant.
struct GaugePair {
    ComplexField phi;
    VectorField3 A;
};
GaugePair gauge_transform(const ComplexField& phi, const VectorField3& A, const ScalarField& chi,
                          double eps, Backend b);

}  // namespace mkgm
