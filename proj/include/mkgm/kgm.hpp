#pragma once

#include <optional>
#include <utility>
#include <vector>

#include "mkgm/calculus.hpp"
#include "mkgm/field.hpp"
#include "mkgm/tensor.hpp"

namespace mkgm {

// Semiclassical matter+gauge state in temporal gauge (A^0 = 0).
// pi = eps * d_t phi is the conjugate momentum; B is derived as -curl A.
struct KgmState {
    GridPtr grid;
    ComplexField phi;
    ComplexField pi;
    VectorField3 A;
    VectorField3 E;
    double eps = 1.0;
    double t = 0.0;
};

struct KgmOptions {
    Backend backend = Backend::spectral;
    bool evolve_em = true;   // gauge coupling switch
    double c_cfl = 0.5;
    double c_osc = 0.2;
    bool check_finite = true;
};

struct KgmObservables {
    ScalarField rho;      // |phi|^2
    FourVectorField J;    // covariant components
    double energy = 0.0;
    double charge = 0.0;  // integral of J^0
    double gauss_residual = 0.0;
};

struct KgmInitReport {
    KgmState state;
    double gauss_residual = 0.0;
};

// Derived magnetic field of the temporal-gauge potential.
VectorField3 kgm_magnetic(const KgmState& s, Backend b);

// Covariant derivative components: D_0 phi = pi, D_i phi = eps d_i phi + i A_i phi.
ComplexFourField kgm_covariant_derivative(const KgmState& s, Backend b);

KgmInitReport kgm_init(ComplexField phi0, ComplexField pi0, VectorField3 A0, VectorField3 E0,
                       double eps, Backend b);

// One leapfrog (velocity-Verlet) step: half kicks of (pi, E), full drift of
// (phi, A), half kicks again. Enforces dt <= c_cfl*min(dx) and dt <= c_osc*eps.
void kgm_step(KgmState& s, double dt, const KgmOptions& opts);

struct KgmTrajectory {
    std::vector<KgmState> snaps;
    double dt = 0.0;   // solver step
    int stride = 1;    // steps between snapshots
    double dt_out() const { return dt * stride; }
};

KgmTrajectory kgm_evolve(KgmState s, double T, double dt, const KgmOptions& opts, int stride);

KgmObservables kgm_observables(const KgmState& s, Backend b);

// Stress-energy tensor of the state (covariant components).
StressTensorField kgm_stress_energy(const KgmState& s, Backend b);

enum class GradientMode { algebraic, discrete };

struct SplitResiduals {
    ScalarField r1;       // Minkowski-contracted identity
    ScalarField r2;       // component-sum identity
    double rel_r1 = 0.0;  // Linf residual over Linf term scale
    double rel_r2 = 0.0;
};

// Residuals of the two momentum/density splitting identities. In algebraic
// mode the root-density gradient uses Re(conj(phi) D phi)/|phi| so the
// identities are pointwise-exact; cells with rho below rho_floor_rel*max(rho)
// are masked. Throws if every cell is masked.
SplitResiduals split_identity_residuals(const KgmState& s, Backend b,
                                        double rho_floor_rel = 1e-12);

// Discrete-gradient mode: root-density differentiated by the backend in space
// and by centered differencing of the (prev, next) pair in time; evaluated on
// the middle state.
SplitResiduals split_identity_residuals_discrete(const KgmState& prev, const KgmState& mid,
                                                 const KgmState& next, Backend b,
                                                 double rho_floor_rel = 1e-12);

// d_a T^a_b of a uniformly spaced stress-tensor triple, evaluated at the
// middle snapshot (centered time differences).
FourVectorField stress_divergence_residual(const StressTensorField& prev,
                                           const StressTensorField& mid,
                                           const StressTensorField& next, double dt, Backend b);

}  // namespace mkgm
