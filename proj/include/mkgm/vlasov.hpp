#pragma once

#include <functional>
#include <string>
#include <vector>

#include "mkgm/rem.hpp"

namespace mkgm {

// Smooth test function on spacetime, vanishing at both time endpoints,
// given with closed-form derivative evaluators.
struct SpacetimeTestFn {
    std::string id;
    std::function<double(double, const std::array<double, 3>&)> f;
    std::function<double(double, const std::array<double, 3>&)> df_dt;
    std::array<std::function<double(double, const std::array<double, 3>&)>, 3> df_dx;
};

// Phase-space test function a(t, x, xi); the momentum slot takes the
// covariant four components and carries its own derivative evaluators.
struct PhaseTestFn {
    std::string id;
    using Args = std::array<double, 4>;
    std::function<double(double, const std::array<double, 3>&, const Args&)> f;
    std::function<double(double, const std::array<double, 3>&, const Args&)> df_dt;
    std::array<std::function<double(double, const std::array<double, 3>&, const Args&)>, 3> df_dx;
    std::array<std::function<double(double, const std::array<double, 3>&, const Args&)>, 4> df_dxi;
};

// Default banks: 8 entries per kind, tensor products of endpoint-vanishing
// time polynomials with single-mode trigonometric space factors and at most
// quadratic momentum dependence.
std::vector<SpacetimeTestFn> default_spacetime_bank(const Grid& g, double T);
std::vector<PhaseTestFn> default_phase_bank(const Grid& g, double T);

// Verifies each bank entry's derivative evaluators against central
// differences; returns the max mismatch.
double bank_derivative_check(const Grid& g, double T);

// | int (d_a F^{ab}) phi - int U^b rho phi | per b, max over b; trapezoid in
// time, midpoint quadrature in space, charge component mean-adjusted.
double weak_maxwell_residual(const RemTrajectory& traj, const SpacetimeTestFn& phi, Backend b);

// | int rho [ U^a (d_a a)(t,x,U) + F_{ab} U^a (da/dxi_b)(t,x,U) ] dx dt |
double weak_vlasov_residual(const RemTrajectory& traj, const PhaseTestFn& a, Backend b);

struct MomentsRow {
    double t = 0.0;
    FourVectorField J;
    ScalarField rho;
};

// Momentum and density of the monokinetic measure; bitwise equal to the
// fluid current and density.
std::vector<MomentsRow> moments(const RemTrajectory& traj);

// max over the density support of |xi^a xi_a + 1|.
double mass_shell_residual(const RemTrajectory& traj, double rho_floor_rel = 1e-12);

}  // namespace mkgm
