#include "mkgm/tensor.hpp"

#include <cmath>

namespace mkgm {

ScalarField faraday_scalar(const FaradayField& F) {
    ScalarField out(F.E.grid_ptr());
    parallel_for(F.size(), [&](std::size_t i) { out[i] = ff_scalar(F, F, i); });
    return out;
}

void add_em_stress(StressTensorField& T, const FaradayField& F, const FaradayField& G,
                   double weight) {
    parallel_for(T.size(), [&](std::size_t i) {
        const double S = ff_scalar(F, G, i);
        for (int a = 0; a < 4; ++a) {
            for (int b = a; b < 4; ++b) {
                double m = 0.5 * (fg_contract(F, G, a, b, i) + fg_contract(G, F, a, b, i));
                double gab = (a == b) ? (a == 0 ? -1.0 : 1.0) : 0.0;
                T.at(a, b, i) += weight * (m - 0.25 * gab * S);
            }
        }
    });
}

GaugePair gauge_transform(const ComplexField& phi, const VectorField3& A, const ScalarField& chi,
                          double eps, Backend b) {
    require_same_grid(phi.grid(), A.grid(), "gauge_transform");
    require_same_grid(phi.grid(), chi.grid(), "gauge_transform");
    GaugePair out{ComplexField(phi.grid_ptr()), VectorField3(A.grid_ptr())};
    VectorField3 gchi = gradient(chi, b);
    parallel_for(phi.size(), [&](std::size_t i) {
        const cplx rot(std::cos(chi[i]), -std::sin(chi[i]));
        out.phi[i] = rot * phi[i];
        for (int a = 0; a < 3; ++a) out.A[a][i] = A[a][i] + eps * gchi[a][i];
    });
    return out;
}

}  // namespace mkgm
