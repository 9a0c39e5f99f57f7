#pragma once

#include <string>

#include "mkgm/field.hpp"

namespace mkgm {

// Derivative backends. All are exact-periodic; spectral differentiates
// resolved Fourier modes to roundoff, fd2/fd4 are centered stencils of the
// stated order. Poisson/Helmholtz below use the matching symbols so the
// advertised residual identities hold per backend.
enum class Backend { spectral, fd2, fd4 };

Backend backend_from_string(const std::string& s);
std::string to_string(Backend b);

ScalarField derivative(const ScalarField& f, int axis, Backend b);
ComplexField derivative(const ComplexField& f, int axis, Backend b);

VectorField3 gradient(const ScalarField& f, Backend b);
ScalarField divergence(const VectorField3& v, Backend b);
VectorField3 curl(const VectorField3& v, Backend b);
ScalarField laplacian(const ScalarField& f, Backend b);
ComplexField laplacian(const ComplexField& f, Backend b);

// Solves laplacian(phi) = s for zero-mean s; returns zero-mean phi.
// Rejects sources whose mean exceeds 1e-10 relative to max|s|.
ScalarField poisson_solve(const ScalarField& s, Backend b);

// Same, but inverts the composed div(grad(.)) symbol of the backend, so that
// divergence(gradient(phi), b) = s to roundoff on modes the symbol resolves.
ScalarField poisson_solve_graddiv(const ScalarField& s, Backend b);

struct HelmholtzParts {
    VectorField3 curl_free;
    VectorField3 div_free;
};

// Projector split. The zero-frequency (and symbol-null) modes are assigned to
// the divergence-free part.
HelmholtzParts helmholtz_decompose(const VectorField3& v, Backend b);

// Exact flow of the semi-discrete vacuum Maxwell pair
//   dE/dt = curl B, dB/dt = -curl E
// over time dt, diagonalized with the backend's first-derivative symbols.
void maxwell_rotate(VectorField3& E, VectorField3& B, double dt, Backend b);

// Separable exponential low-pass: mode (k1,k2,k3) is scaled by
// prod_a exp(-gamma * (|k_a|/k_nyq_a)^order).
void spectral_filter(ScalarField& f, double gamma, int order);

}  // namespace mkgm
