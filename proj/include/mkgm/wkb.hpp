#pragma once

#include <array>
#include <vector>

#include "mkgm/kgm.hpp"
#include "mkgm/modenergy.hpp"
#include "mkgm/rem.hpp"

namespace mkgm {

// Oscillatory ansatz e^{i omega/eps} Psi with its first-order jets in time.
// The phase is a linear part k.x (k snapped to (2 pi eps / L) Z per axis so
// the exponential is grid-periodic) plus a periodic correction; omega_t holds
// d_t omega = U_0 and omega_tt its time slope. Psi carries (Psi, d_t Psi,
// d_tt Psi) so residual evaluation needs no differencing of oscillatory data.
struct WkbAnsatz {
    GridPtr grid;
    std::array<long long, 3> k_winding{0, 0, 0};  // integer windings of k.x/eps per axis
    double eps = 0.0;
    ScalarField omega_corr;  // periodic spatial phase correction
    ScalarField omega_t;     // = U_0 = -U^0
    ScalarField omega_tt;
    ComplexField psi0, psi1, psi2;
    VectorField3 A, E, B;
    double eik_residual = 0.0;
    std::array<double, 3> snap_shift{0, 0, 0};  // k_snapped - k_target

    // physical wavevector component of the snapped linear phase
    double k_snapped(int a) const {
        return k_winding[a] * eps * 6.283185307179586476925286766559 / grid->box[a];
    }
};

struct EikonalPhase {
    ScalarField omega_corr;          // zero-mean periodic part
    std::array<double, 3> k_target;  // mean of u - A per axis (before snapping)
    double recovery_residual = 0.0;  // max |grad(omega_corr) - periodic part|
};

// Recovers omega with grad(omega) = u - A; the mean goes to the linear part,
// the periodic remainder must be a discrete gradient (curl below curl_tol
// relative), otherwise rejected.
EikonalPhase eikonal_phase(const VectorField3& u, const VectorField3& A, Backend b,
                           double curl_tol = 1e-8);

// Returns E whose divergence-free part equals that of E_guess and whose
// curl-free part solves div E = charge_upper - mean(charge_upper).
VectorField3 constraint_repair(const VectorField3& E_guess, const ScalarField& charge_upper,
                               Backend b);

// A with -curl A = B for a mean-free divergence-free B.
VectorField3 vector_potential_for(const VectorField3& B, Backend b);

struct PreparationRow {
    double eps = 0.0;
    double H0 = 0.0;
    double H0_over_eps2 = 0.0;
    double K0 = 0.0;
    double P0 = 0.0;
    double gauss_kgm = 0.0;
    double gauss_rem = 0.0;
    double sqrtrho_gap_L2 = 0.0;
    double eik_residual = 0.0;
    std::array<double, 3> snap_shift{0, 0, 0};
};

struct MatchedPair {
    RemState rem_data;
    std::vector<KgmState> kgm_family;       // one state per eps, descending
    std::vector<PreparationRow> report;
};

struct PairConfig {
    Backend backend = Backend::spectral;
    VectorField3 B0;        // optional divergence-free magnetic seed (empty = zero)
    bool has_B0 = false;
    double snap_tol = 1e-9; // report-only threshold on |k_snapped - k_target|
};

// Monokinetic matched data: one fluid state and a family of oscillatory
// matter states sharing its E and A exactly.
MatchedPair make_matched_pair(const VectorField3& u_profile, const ScalarField& rho_profile,
                              const std::vector<double>& eps_list, const PairConfig& cfg);

struct WkbResiduals {
    double maxwell_res = 0.0;  // L2 over the four components, charge part mean-adjusted
    double kg_res = 0.0;       // L2 of the matter-equation residual
};

// Residuals of the two field equations evaluated on e^{i omega/eps} Psi using
// the stored jets; oscillatory prefactors drop out of the norms.
WkbResiduals wkb_residual(const WkbAnsatz& ansatz, double eps, Backend b);

// Rest-frame ansatz (U = d_t) with a prescribed complex amplitude; satisfies
// the eikonal and transport equations exactly, E solves the adjusted
// divergence constraint. Used for residual rate studies.
WkbAnsatz rest_frame_ansatz(const ComplexField& psi, double eps, Backend b);

}  // namespace mkgm
