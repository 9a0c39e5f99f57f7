#include "mkgm/wkb.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

#include "mkgm/norms.hpp"

namespace mkgm {

namespace {
constexpr double kTwoPi = 6.283185307179586476925286766559;
}

EikonalPhase eikonal_phase(const VectorField3& u, const VectorField3& A, Backend b,
                           double curl_tol) {
    require_same_grid(u.grid(), A.grid(), "eikonal_phase");
    const GridPtr g = u.grid_ptr();
    VectorField3 w(g);
    parallel_for(w.size(), [&](std::size_t i) {
        for (int a = 0; a < 3; ++a) w[a][i] = u[a][i] - A[a][i];
    });
    EikonalPhase out;
    for (int a = 0; a < 3; ++a) {
        out.k_target[a] = mean(w[a]);
        parallel_for(w.size(), [&](std::size_t i) { w[a][i] -= out.k_target[a]; });
    }
    const double scale = std::max(norm(w, NormKind::Linf), 1.0);
    const double curl_inf = norm(curl(w, b), NormKind::Linf);
    if (curl_inf > curl_tol * scale) {
        std::ostringstream os;
        os << "eikonal_phase: velocity-potential input is not a discrete gradient (|curl|="
           << curl_inf << ")";
        throw std::invalid_argument(os.str());
    }
    ScalarField div_w = divergence(w, b);
    const double div_mean = mean(div_w);
    parallel_for(div_w.size(), [&](std::size_t i) { div_w[i] -= div_mean; });
    out.omega_corr = poisson_solve_graddiv(div_w, b);
    VectorField3 grad_w = gradient(out.omega_corr, b);
    out.recovery_residual = chunked_max(w.size(), [&](std::size_t i) {
        double m = 0.0;
        for (int a = 0; a < 3; ++a) m = std::max(m, std::abs(grad_w[a][i] - w[a][i]));
        return m;
    });
    return out;
}

VectorField3 constraint_repair(const VectorField3& E_guess, const ScalarField& charge_upper,
                               Backend b) {
    require_same_grid(E_guess.grid(), charge_upper.grid(), "constraint_repair");
    ScalarField src(charge_upper.grid_ptr());
    const double qbar = mean(charge_upper);
    parallel_for(src.size(), [&](std::size_t i) { src[i] = charge_upper[i] - qbar; });
    const double resid_mean = mean(src);  // recenter the subtraction roundoff
    parallel_for(src.size(), [&](std::size_t i) { src[i] -= resid_mean; });
    ScalarField phi = poisson_solve_graddiv(src, b);
    VectorField3 grad_phi = gradient(phi, b);
    HelmholtzParts parts = helmholtz_decompose(E_guess, b);
    VectorField3 out(E_guess.grid_ptr());
    parallel_for(out.size(), [&](std::size_t i) {
        for (int a = 0; a < 3; ++a) out[a][i] = parts.div_free[a][i] + grad_phi[a][i];
    });
    return out;
}

VectorField3 vector_potential_for(const VectorField3& B, Backend b) {
    const double scale = std::max(norm(B, NormKind::Linf), 1e-300);
    for (int a = 0; a < 3; ++a) {
        if (std::abs(mean(B[a])) > 1e-10 * scale)
            throw std::invalid_argument(
                "vector_potential_for: mean magnetic component has no periodic potential");
    }
    if (norm(divergence(B, b), NormKind::Linf) > 1e-8 * scale)
        throw std::invalid_argument("vector_potential_for: B is not divergence-free");
    // W_a solves div(grad W_a) = -B_a; then -curl(curl W) = B up to grad(div W)
    VectorField3 W(B.grid_ptr());
    for (int a = 0; a < 3; ++a) {
        ScalarField negB(B.grid_ptr());
        const double mb = mean(B[a]);
        parallel_for(negB.size(), [&](std::size_t i) { negB[i] = -(B[a][i] - mb); });
        W[a] = poisson_solve_graddiv(negB, b);
    }
    VectorField3 A = curl(W, b);
    parallel_for(A.size(), [&](std::size_t i) {
        for (int a = 0; a < 3; ++a) A[a][i] = -A[a][i];
    });
    return A;
}

namespace {

// Fluid-side time slopes at t=0: d_t u from the momentum equation, then
// d_t U^0 and d_t sqrt(rho) from normalization and transport.
struct FluidSlopes {
    VectorField3 du;
    ScalarField dU0;
    ScalarField dsqrt_rho;
};

FluidSlopes fluid_slopes(const VectorField3& u, const ScalarField& U0, const ScalarField& sqrho,
                         const VectorField3& E, const VectorField3& B, Backend b) {
    const GridPtr g = u.grid_ptr();
    FluidSlopes out{VectorField3(g), ScalarField(g), ScalarField(g)};
    for (int a = 0; a < 3; ++a) {
        ScalarField adv(g);
        for (int c = 0; c < 3; ++c) {
            ScalarField d = derivative(u[a], c, b);
            parallel_for(adv.size(), [&](std::size_t i) { adv[i] += u[c][i] * d[i] / U0[i]; });
        }
        parallel_for(out.du.size(), [&](std::size_t i) {
            double uxB = 0.0;
            switch (a) {
                case 0: uxB = u[1][i] * B[2][i] - u[2][i] * B[1][i]; break;
                case 1: uxB = u[2][i] * B[0][i] - u[0][i] * B[2][i]; break;
                default: uxB = u[0][i] * B[1][i] - u[1][i] * B[0][i]; break;
            }
            out.du[a][i] = -adv[i] + E[a][i] + uxB / U0[i];
        });
    }
    parallel_for(out.dU0.size(), [&](std::size_t i) {
        out.dU0[i] = (u[0][i] * out.du[0][i] + u[1][i] * out.du[1][i] + u[2][i] * out.du[2][i]) /
                     U0[i];
    });
    VectorField3 grad_sq = gradient(sqrho, b);
    ScalarField divu = divergence(u, b);
    parallel_for(out.dsqrt_rho.size(), [&](std::size_t i) {
        double adv = u[0][i] * grad_sq[0][i] + u[1][i] * grad_sq[1][i] + u[2][i] * grad_sq[2][i];
        out.dsqrt_rho[i] = -(2.0 * adv + (out.dU0[i] + divu[i]) * sqrho[i]) / (2.0 * U0[i]);
    });
    return out;
}

ScalarField linear_phase(const Grid& g, const std::array<long long, 3>& winding) {
    ScalarField th(std::make_shared<const Grid>(g));
    const int n1 = g.n[1], n2 = g.n[2];
    parallel_for(g.cells(), [&](std::size_t i) {
        int iz = int(i % n2);
        int iy = int((i / n2) % n1);
        int ix = int(i / (std::size_t(n1) * n2));
        th[i] = kTwoPi * (winding[0] * (ix + 0.5) / g.n[0] + winding[1] * (iy + 0.5) / g.n[1] +
                          winding[2] * (iz + 0.5) / g.n[2]);
    });
    return th;
}

}  // namespace

MatchedPair make_matched_pair(const VectorField3& u_profile, const ScalarField& rho_profile,
                              const std::vector<double>& eps_list, const PairConfig& cfg) {
    require_same_grid(u_profile.grid(), rho_profile.grid(), "make_matched_pair");
    if (eps_list.empty()) throw std::invalid_argument("make_matched_pair: empty eps list");
    for (std::size_t i = 0; i < eps_list.size(); ++i) {
        if (!(eps_list[i] > 0.0)) throw std::invalid_argument("make_matched_pair: eps <= 0");
        if (i > 0 && !(eps_list[i] < eps_list[i - 1]))
            throw std::invalid_argument("make_matched_pair: eps list must be strictly decreasing");
    }
    const GridPtr g = u_profile.grid_ptr();
    const Backend b = cfg.backend;

    VectorField3 B0 = cfg.has_B0 ? cfg.B0 : VectorField3(g);
    VectorField3 A0 = cfg.has_B0 ? vector_potential_for(B0, b) : VectorField3(g);

    ScalarField U0(g);
    parallel_for(U0.size(), [&](std::size_t i) {
        U0[i] = std::sqrt(1.0 + u_profile[0][i] * u_profile[0][i] +
                          u_profile[1][i] * u_profile[1][i] + u_profile[2][i] * u_profile[2][i]);
    });
    ScalarField charge(g);
    parallel_for(charge.size(), [&](std::size_t i) { charge[i] = U0[i] * rho_profile[i]; });
    VectorField3 E = constraint_repair(VectorField3(g), charge, b);

    MatchedPair pair;
    RemInitReport rem_rep = rem_init(u_profile, rho_profile, E, B0, b);
    pair.rem_data = std::move(rem_rep.state);

    EikonalPhase phase = eikonal_phase(u_profile, A0, b);
    ScalarField sqrho(g);
    parallel_for(sqrho.size(), [&](std::size_t i) {
        sqrho[i] = std::sqrt(std::max(rho_profile[i], 0.0));
    });
    VectorField3 grad_corr = gradient(phase.omega_corr, b);

    for (double eps : eps_list) {
        std::array<long long, 3> winding{0, 0, 0};
        std::array<double, 3> shift{0, 0, 0};
        for (int a = 0; a < 3; ++a) {
            if (g->n[a] > 1)
                winding[a] = std::llround(phase.k_target[a] * g->box[a] / (kTwoPi * eps));
            double k_snap = winding[a] * eps * kTwoPi / g->box[a];
            shift[a] = k_snap - phase.k_target[a];
        }
        // effective transported velocity after snapping
        VectorField3 u_eff(g);
        parallel_for(u_eff.size(), [&](std::size_t i) {
            for (int a = 0; a < 3; ++a) u_eff[a][i] = u_profile[a][i] + shift[a];
        });
        ScalarField U0_eff(g);
        parallel_for(U0_eff.size(), [&](std::size_t i) {
            U0_eff[i] = std::sqrt(1.0 + u_eff[0][i] * u_eff[0][i] + u_eff[1][i] * u_eff[1][i] +
                                  u_eff[2][i] * u_eff[2][i]);
        });
        FluidSlopes slopes = fluid_slopes(u_eff, U0_eff, sqrho, E, B0, b);

        // eikonal check against the snapped phase gradient
        const double eik_res = chunked_max(U0_eff.size(), [&](std::size_t i) {
            double gg = 0.0;
            for (int a = 0; a < 3; ++a) {
                double k_snap = winding[a] * eps * kTwoPi / g->box[a];
                double ga = k_snap + grad_corr[a][i] + A0[a][i];
                gg += ga * ga;
            }
            return std::abs(-U0_eff[i] * U0_eff[i] + gg + 1.0);
        });
        if (eik_res > 1e-8) {
            std::ostringstream os;
            os << "make_matched_pair: eikonal residual " << eik_res << " exceeds 1e-8 at eps="
               << eps;
            throw std::runtime_error(os.str());
        }

        ScalarField theta = linear_phase(*g, winding);
        parallel_for(theta.size(), [&](std::size_t i) { theta[i] += phase.omega_corr[i] / eps; });

        ComplexField phi0(g), pi0(g);
        parallel_for(phi0.size(), [&](std::size_t i) {
            const cplx osc(std::cos(theta[i]), std::sin(theta[i]));
            phi0[i] = osc * sqrho[i];
            pi0[i] = osc * (cplx(0.0, -U0_eff[i]) * sqrho[i] + eps * slopes.dsqrt_rho[i]);
        });
        KgmInitReport krep = kgm_init(std::move(phi0), std::move(pi0), A0, E, eps, b);

        PreparationRow row;
        row.eps = eps;
        row.snap_shift = shift;
        row.eik_residual = eik_res;
        row.gauss_kgm = krep.gauss_residual;
        row.gauss_rem = rem_rep.gauss_residual;
        ModulatedFields mf = modulated_fields(krep.state, pair.rem_data, b);
        KineticEmSplit split = kinetic_em_split(mf);
        row.K0 = split.K0;
        row.P0 = split.P0;
        row.H0 = split.H0();
        row.H0_over_eps2 = row.H0 / (eps * eps);
        row.sqrtrho_gap_L2 = std::sqrt(g->cell_volume() *
            chunked_sum(sqrho.size(), [&](std::size_t i) {
                double d = std::abs(krep.state.phi[i]) - std::sqrt(std::max(pair.rem_data.rho[i], 0.0));
                return d * d;
            }));
        pair.report.push_back(row);
        pair.kgm_family.push_back(std::move(krep.state));
    }
    return pair;
}

WkbResiduals wkb_residual(const WkbAnsatz& an, double eps, Backend b) {
    const GridPtr g = an.grid;
    // spatial phase-gradient components g_a = k_a + d_a omega_corr + A_a
    VectorField3 gv = gradient(an.omega_corr, b);
    std::array<double, 3> ks{an.k_snapped(0), an.k_snapped(1), an.k_snapped(2)};
    parallel_for(gv.size(), [&](std::size_t i) {
        for (int a = 0; a < 3; ++a) gv[a][i] += ks[a] + an.A[a][i];
    });
    ScalarField div_g = divergence(gv, b);

    // matter equation: -(eik + 1) Psi + i eps (2 V.grad Psi + div V Psi) + eps^2 box Psi
    std::array<ComplexField, 3> dpsi;
    for (int a = 0; a < 3; ++a) dpsi[a] = derivative(an.psi0, a, b);
    ComplexField lap_psi = laplacian(an.psi0, b);
    ComplexField bracket(g);
    parallel_for(bracket.size(), [&](std::size_t i) {
        double eik = -an.omega_t[i] * an.omega_t[i];
        for (int a = 0; a < 3; ++a) eik += gv[a][i] * gv[a][i];
        cplx transport = -an.omega_t[i] * an.psi1[i];
        for (int a = 0; a < 3; ++a) transport += gv[a][i] * dpsi[a][i];
        double divV = -an.omega_tt[i] + div_g[i];
        cplx boxpsi = -an.psi2[i] + lap_psi[i];
        bracket[i] = -(eik + 1.0) * an.psi0[i] +
                     cplx(0.0, eps) * (2.0 * transport + divV * an.psi0[i]) +
                     eps * eps * boxpsi;
    });
    WkbResiduals out;
    out.kg_res = norm(bracket, NormKind::L2);

    // field equation, time-frozen EM extension:
    //   beta=0: div E - (J^0 - <J^0>)
    //   beta=i: (curl B)_i - J_i
    ScalarField J0_upper(g);
    std::array<ScalarField, 3> Jsp;
    for (auto& f : Jsp) f = ScalarField(g);
    parallel_for(J0_upper.size(), [&](std::size_t i) {
        double rho = std::norm(an.psi0[i]);
        double J_0 = an.omega_t[i] * rho +
                     eps * std::imag(std::conj(an.psi0[i]) * an.psi1[i]);
        J0_upper[i] = -J_0;
        for (int a = 0; a < 3; ++a)
            Jsp[a][i] = gv[a][i] * rho + eps * std::imag(std::conj(an.psi0[i]) * dpsi[a][i]);
    });
    ScalarField divE = divergence(an.E, b);
    const double jbar = mean(J0_upper);
    ScalarField r0(g);
    parallel_for(r0.size(), [&](std::size_t i) { r0[i] = divE[i] - (J0_upper[i] - jbar); });
    double acc = 0.0;
    double l0 = norm(r0, NormKind::L2);
    acc += l0 * l0;
    VectorField3 cb = curl(an.B, b);
    for (int a = 0; a < 3; ++a) {
        ScalarField ra(g);
        parallel_for(ra.size(), [&](std::size_t i) { ra[i] = cb[a][i] - Jsp[a][i]; });
        double la = norm(ra, NormKind::L2);
        acc += la * la;
    }
    out.maxwell_res = std::sqrt(acc);
    return out;
}

WkbAnsatz rest_frame_ansatz(const ComplexField& psi, double eps, Backend b) {
    const GridPtr g = psi.grid_ptr();
    WkbAnsatz an;
    an.grid = g;
    an.eps = eps;
    an.omega_corr = ScalarField(g);
    an.omega_t = ScalarField(g);
    an.omega_t.fill(-1.0);
    an.omega_tt = ScalarField(g);
    an.psi0 = psi;
    an.psi1 = ComplexField(g);
    an.psi2 = ComplexField(g);
    an.A = VectorField3(g);
    an.B = VectorField3(g);
    ScalarField charge(g);
    parallel_for(charge.size(), [&](std::size_t i) { charge[i] = std::norm(psi[i]); });
    an.E = constraint_repair(VectorField3(g), charge, b);
    an.eik_residual = 0.0;
    return an;
}

}  // namespace mkgm
