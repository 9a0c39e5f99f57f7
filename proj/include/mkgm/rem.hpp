#pragma once

#include <array>
#include <vector>

#include "mkgm/calculus.hpp"
#include "mkgm/field.hpp"
#include "mkgm/tensor.hpp"

namespace mkgm {

// Pressureless charged fluid + Maxwell. u holds the spatial velocity
// components (U_i = U^i); U^0 = sqrt(1+|u|^2) is derived, never evolved, so
// the normalization U^a U_a = -1 holds by construction.
struct RemState {
    GridPtr grid;
    VectorField3 u;
    ScalarField rho;
    VectorField3 E;
    VectorField3 B;
    double t = 0.0;
};

enum class RemIntegrator { strang_heun, rk4 };
enum class RemTransport { spectral_advective, upwind };

struct RemOptions {
    Backend backend = Backend::spectral;
    RemIntegrator integrator = RemIntegrator::strang_heun;
    RemTransport transport = RemTransport::spectral_advective;
    double c_cfl = 0.5;
    double shock_threshold = 0.5;  // abort when max|grad u| * min(dx) exceeds this
    double filter_strength = 1.0;  // exponential filter rate per unit time at Nyquist
    int filter_order = 16;
    bool check_finite = true;
};

struct RemObservables {
    FourVectorField J;  // rho * U, covariant
    double energy = 0.0;
    double charge = 0.0;
    double gauss_residual = 0.0;
    double divB_residual = 0.0;
    double normalization_residual = 0.0;
    double max_grad_u = 0.0;
};

struct RemInitReport {
    RemState state;
    double gauss_residual = 0.0;
    double divB_residual = 0.0;
};

struct RemShockAbort : std::runtime_error {
    double t;
    std::size_t cell;
    RemShockAbort(const std::string& msg, double t_, std::size_t cell_)
        : std::runtime_error(msg), t(t_), cell(cell_) {}
};

ScalarField rem_u0(const RemState& s);                 // sqrt(1+|u|^2)
FourVectorField rem_current(const RemState& s);        // rho*U covariant

RemInitReport rem_init(VectorField3 u0, ScalarField rho0, VectorField3 E0, VectorField3 B0,
                       Backend b);

void rem_step(RemState& s, double dt, const RemOptions& opts);

struct RemTrajectory {
    std::vector<RemState> snaps;
    double dt = 0.0;
    int stride = 1;
    double dt_out() const { return dt * stride; }
};

RemTrajectory rem_evolve(RemState s, double T, double dt, const RemOptions& opts, int stride);

RemObservables rem_observables(const RemState& s, Backend b);

StressTensorField rem_stress_energy(const RemState& s);

// Density at the final snapshot time reconstructed along flow lines
// (backward RK4 characteristics with trilinear interpolation of U and of the
// four-divergence of U).
ScalarField characteristics_density(const RemTrajectory& traj, Backend b);

// L2 residual of box F_{ab} = d_a J_b - d_b J_a on the middle snapshot.
double wave_residual(const RemTrajectory& traj, Backend b);

// Cellwise eigenvalues of M^{ij} = delta^{ij} - u^i u^j / (U^0)^2, sorted
// descending; equals (1, 1, 1/(U^0)^2) for every state.
std::array<ScalarField, 3> elliptic_spectrum(const RemState& s);

// Covariant residual of the momentum equation U^a d_a U_b - F_{ab} U^a at the
// middle snapshot of a trajectory (centered time differences).
FourVectorField rem_momentum_residual(const RemTrajectory& traj, std::size_t mid, Backend b);

double rem_max_grad_u(const RemState& s, Backend b);

}  // namespace mkgm
