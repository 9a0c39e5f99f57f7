#pragma once

#include <vector>

#include "mkgm/kgm.hpp"
#include "mkgm/rem.hpp"

namespace mkgm {

// Modulated comparison fields between a semiclassical state and a fluid
// state on the same grid at the same time:
//   xi_a   = (D_a - i U_a) phi            (covariant, complex)
//   Ecal   = E_kgm - E_rem,  Bcal = B_kgm - B_rem
//   h      = quadratic (xi, Ecal, Bcal) stress block
//   I      = linear remainder with h + I = T_kgm - T_rem
struct ModulatedFields {
    ComplexFourField xi;
    VectorField3 Ecal;
    VectorField3 Bcal;
    StressTensorField h;
    StressTensorField I;
    double eps = 0.0;
    double t = 0.0;
};

ModulatedFields modulated_fields(const KgmState& kgm, const RemState& rem, Backend b,
                                 double time_tol = 1e-9);

struct KineticEmSplit {
    double K0 = 0.0;  // 1/2 int |xi|^2
    double P0 = 0.0;  // 1/2 int |Ecal|^2 + |Bcal|^2
    double H0() const { return K0 + P0; }
};

KineticEmSplit kinetic_em_split(const ModulatedFields& mf);

// Time-like future-directed vector field with uniform bounds:
// |X| <= 1/nu, X^0 >= nu, -X^a X_a >= nu cellwise. Contravariant components.
struct AcceptableVectorField {
    FourVectorField X;
    double nu = 1.0;
};

// Validates the three bounds cellwise; throws on violation.
AcceptableVectorField make_acceptable(FourVectorField X_upper, double nu);

AcceptableVectorField time_axis_field(GridPtr g);  // X = d_t, nu = 1

// H_X = int h_{a0} X^a. With X = d_t the integrand is the h_00 component.
double modulated_energy(const ModulatedFields& mf, const AcceptableVectorField& X);

// H_U with X = the fluid four-velocity of the rem state.
double modulated_energy_u(const ModulatedFields& mf, const RemState& rem);

struct H00Forms {
    double form1 = 0.0;  // division-free: 1/2|xi|^2 + EM
    double form2 = 0.0;  // eps^2|grad sqrt(rho)|^2/2 + |J - rho U|^2/(2 rho) + EM
    double gap_rel = 0.0;
    double mid_term = 0.0;  // int |J - rho U|^2 / (2 rho), masked
};

H00Forms h00_forms(const KgmState& kgm, const RemState& rem, Backend b,
                   double rho_floor_rel = 1e-12);

struct SandwichResult {
    double c1 = 0.0;
    double c2 = 0.0;
    bool holds = false;
    double H0 = 0.0;
    double HX = 0.0;
};

// Constructive constants c1 = min(X^0 - |X_space|), c2 = max(X^0 + |X_space|);
// checks c1*H0 <= H_X <= c2*H0 on the given fields.
SandwichResult sandwich(const ModulatedFields& mf, const AcceptableVectorField& X);

struct ObservableDistances {
    double J_L1 = 0.0;       // sum over 4 covariant components
    double F_L2 = 0.0;       // via (Ecal, Bcal); F_L2^2 == 2*P0 at quadrature level
    double rho_L1 = 0.0;
    double sqrtrho_L2 = 0.0;
};

// Also verifies the exact summand inequality F_L2^2 <= 2*H0.
ObservableDistances observable_distances(const KgmState& kgm, const RemState& rem, Backend b);

struct ModulatedEnergyReport {
    double t = 0.0;
    double H0 = 0.0, HU = 0.0, K0 = 0.0, P0 = 0.0;
    ObservableDistances dist;
    double sandwich_c1 = 0.0, sandwich_c2 = 0.0;
    bool sandwich_holds = false;
};

ModulatedEnergyReport modulated_report(const KgmState& kgm, const RemState& rem, Backend b);

struct BudgetRow {
    double t = 0.0;
    double dHU_dt = 0.0;
    double H1 = 0.0;
    double H21 = 0.0;
    double H22 = 0.0;
    double G = 0.0;
    double closure_gap = 0.0;
    double H1_bound = 0.0;  // sup|grad U| * C_h * H_U / c1
    double HU = 0.0;
};

// Budget of d/dt H_U on synchronized trajectories: H1 = -int h_ab grad^a U^b,
// H2 split into its quadratic part and the mass term, centered differencing
// of H_U at the output stride. Rows cover interior snapshots.
std::vector<BudgetRow> propagation_budget(const KgmTrajectory& kt, const RemTrajectory& rt,
                                          Backend b, double rho_floor_rel = 1e-12);

}  // namespace mkgm
