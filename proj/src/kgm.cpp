#include "mkgm/kgm.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

#include "mkgm/norms.hpp"

namespace mkgm {

namespace {

// (eps grad + iA) applied to a complex field, one spatial component.
ComplexField covariant_component(const ComplexField& phi, const VectorField3& A, double eps,
                                 int a, Backend b) {
    ComplexField out = derivative(phi, a, b);
    parallel_for(out.size(), [&](std::size_t i) {
        out[i] = eps * out[i] + cplx(0.0, 1.0) * A[a][i] * phi[i];
    });
    return out;
}

// L phi = (eps grad + iA).(eps grad + iA) phi, composed from first-derivative
// applications so the discrete operator stays anti-Hermitian squared.
ComplexField gauge_laplacian(const ComplexField& phi, const VectorField3& A, double eps,
                             Backend b) {
    ComplexField acc(phi.grid_ptr());
    acc.fill(cplx(0.0, 0.0));
    for (int a = 0; a < 3; ++a) {
        ComplexField g = covariant_component(phi, A, eps, a, b);
        ComplexField dg = derivative(g, a, b);
        parallel_for(acc.size(), [&](std::size_t i) {
            acc[i] += eps * dg[i] + cplx(0.0, 1.0) * A[a][i] * g[i];
        });
    }
    return acc;
}

// Spatial current J_i = -Im(phi conj(D_i phi)).
VectorField3 spatial_current(const ComplexField& phi, const VectorField3& A, double eps,
                             Backend b) {
    VectorField3 J(phi.grid_ptr());
    for (int a = 0; a < 3; ++a) {
        ComplexField d = covariant_component(phi, A, eps, a, b);
        parallel_for(J.size(), [&](std::size_t i) {
            J[a][i] = -std::imag(phi[i] * std::conj(d[i]));
        });
    }
    return J;
}

double gauss_residual_l2(const VectorField3& E, const ScalarField& charge_upper, Backend b) {
    ScalarField div = divergence(E, b);
    const double qbar = mean(charge_upper);
    ScalarField res(E.grid_ptr());
    parallel_for(res.size(), [&](std::size_t i) { res[i] = div[i] - (charge_upper[i] - qbar); });
    return norm(res, NormKind::L2);
}

}  // namespace

VectorField3 kgm_magnetic(const KgmState& s, Backend b) {
    VectorField3 B = curl(s.A, b);
    parallel_for(B.size(), [&](std::size_t i) {
        for (int a = 0; a < 3; ++a) B[a][i] = -B[a][i];
    });
    return B;
}

ComplexFourField kgm_covariant_derivative(const KgmState& s, Backend b) {
    ComplexFourField D(s.grid, IndexPos::lower);
    D.c[0] = s.pi;
    for (int a = 0; a < 3; ++a) D.c[a + 1] = covariant_component(s.phi, s.A, s.eps, a, b);
    return D;
}

KgmInitReport kgm_init(ComplexField phi0, ComplexField pi0, VectorField3 A0, VectorField3 E0,
                       double eps, Backend b) {
    require_same_grid(phi0.grid(), pi0.grid(), "kgm_init");
    require_same_grid(phi0.grid(), A0.grid(), "kgm_init");
    require_same_grid(phi0.grid(), E0.grid(), "kgm_init");
    if (!(eps > 0.0)) throw std::invalid_argument("kgm_init: eps must be positive");
    if (!all_finite(phi0) || !all_finite(pi0) || !all_finite(A0) || !all_finite(E0))
        throw std::invalid_argument("kgm_init: nonfinite input field");
    KgmInitReport rep;
    rep.state = KgmState{phi0.grid_ptr(), std::move(phi0), std::move(pi0), std::move(A0),
                         std::move(E0), eps, 0.0};
    ScalarField j0(rep.state.grid);
    parallel_for(j0.size(), [&](std::size_t i) {
        j0[i] = std::imag(rep.state.phi[i] * std::conj(rep.state.pi[i]));
    });
    rep.gauss_residual = gauss_residual_l2(rep.state.E, j0, b);
    return rep;
}

void kgm_step(KgmState& s, double dt, const KgmOptions& opts) {
    const double dmin = s.grid->min_dx();
    if (std::isfinite(dmin) && dt > opts.c_cfl * dmin * (1.0 + 1e-12)) {
        std::ostringstream os;
        os << "kgm_step: dt=" << dt << " violates dt <= " << opts.c_cfl << "*min(dx)=" <<
            opts.c_cfl * dmin;
        throw std::invalid_argument(os.str());
    }
    if (dt > opts.c_osc * s.eps * (1.0 + 1e-12)) {
        std::ostringstream os;
        os << "kgm_step: dt=" << dt << " violates dt <= " << opts.c_osc << "*eps=" <<
            opts.c_osc * s.eps;
        throw std::invalid_argument(os.str());
    }
    const Backend b = opts.backend;
    const double eps = s.eps;

    auto kick = [&](double h) {
        ComplexField L = gauge_laplacian(s.phi, s.A, eps, b);
        parallel_for(s.pi.size(), [&](std::size_t i) {
            s.pi[i] += (h / eps) * (L[i] - s.phi[i]);
        });
        if (opts.evolve_em) {
            VectorField3 B = kgm_magnetic(s, b);
            VectorField3 cb = curl(B, b);
            VectorField3 J = spatial_current(s.phi, s.A, eps, b);
            parallel_for(s.E.size(), [&](std::size_t i) {
                for (int a = 0; a < 3; ++a) s.E[a][i] += h * (cb[a][i] - J[a][i]);
            });
        }
    };

    kick(0.5 * dt);
    parallel_for(s.phi.size(), [&](std::size_t i) { s.phi[i] += (dt / eps) * s.pi[i]; });
    if (opts.evolve_em) {
        parallel_for(s.A.size(), [&](std::size_t i) {
            for (int a = 0; a < 3; ++a) s.A[a][i] += dt * s.E[a][i];
        });
    }
    kick(0.5 * dt);
    s.t += dt;
}

KgmTrajectory kgm_evolve(KgmState s, double T, double dt, const KgmOptions& opts, int stride) {
    if (stride < 1) throw std::invalid_argument("kgm_evolve: stride must be >= 1");
    const long long nsteps = (long long)std::llround(T / dt);
    if (nsteps < 1 || std::abs(nsteps * dt - T) > 1e-9 * std::max(1.0, T))
        throw std::invalid_argument("kgm_evolve: T must be an integer number of steps");
    KgmTrajectory traj;
    traj.dt = dt;
    traj.stride = stride;
    traj.snaps.push_back(s);
    for (long long k = 0; k < nsteps; ++k) {
        kgm_step(s, dt, opts);
        if (opts.check_finite && !(all_finite(s.phi) && all_finite(s.pi) && all_finite(s.A) &&
                                   all_finite(s.E))) {
            std::ostringstream os;
            os << "kgm_evolve: nonfinite values at step " << (k + 1) << " (t=" << s.t << ")";
            throw std::runtime_error(os.str());
        }
        if ((k + 1) % stride == 0 || k + 1 == nsteps) traj.snaps.push_back(s);
    }
    return traj;
}

KgmObservables kgm_observables(const KgmState& s, Backend b) {
    KgmObservables obs{ScalarField(s.grid), FourVectorField(s.grid, IndexPos::lower)};
    ComplexFourField D = kgm_covariant_derivative(s, b);
    parallel_for(obs.rho.size(), [&](std::size_t i) {
        obs.rho[i] = std::norm(s.phi[i]);
        obs.J.t[i] = -std::imag(s.phi[i] * std::conj(D.c[0][i]));
        for (int a = 0; a < 3; ++a)
            obs.J.x[a][i] = -std::imag(s.phi[i] * std::conj(D.c[a + 1][i]));
    });
    VectorField3 B = kgm_magnetic(s, b);
    const double vol = s.grid->cell_volume();
    obs.energy = chunked_sum(obs.rho.size(), [&](std::size_t i) {
        double kin = 0.0;
        for (int a = 0; a < 4; ++a) kin += std::norm(D.c[a][i]);
        double em = 0.0;
        for (int a = 0; a < 3; ++a) em += s.E[a][i] * s.E[a][i] + B[a][i] * B[a][i];
        return 0.5 * (kin + obs.rho[i] + em);
    }) * vol;
    ScalarField j0(s.grid);
    parallel_for(j0.size(), [&](std::size_t i) { j0[i] = -obs.J.t[i]; });
    obs.charge = integral(j0);
    obs.gauss_residual = gauss_residual_l2(s.E, j0, b);
    return obs;
}

StressTensorField kgm_stress_energy(const KgmState& s, Backend b) {
    StressTensorField T(s.grid);
    ComplexFourField D = kgm_covariant_derivative(s, b);
    parallel_for(T.size(), [&](std::size_t i) {
        // Minkowski contraction conj(D_g phi) D^g phi (real)
        double trace = -std::norm(D.c[0][i]);
        for (int a = 1; a < 4; ++a) trace += std::norm(D.c[a][i]);
        const double rho = std::norm(s.phi[i]);
        for (int a = 0; a < 4; ++a) {
            for (int c = a; c < 4; ++c) {
                double kin = std::real(D.c[a][i] * std::conj(D.c[c][i]));
                double gac = (a == c) ? (a == 0 ? -1.0 : 1.0) : 0.0;
                T.at(a, c, i) = kin - 0.5 * gac * (trace + rho);
            }
        }
    });
    FaradayField F = faraday_pack(s.E, kgm_magnetic(s, b));
    add_em_stress(T, F, F, 1.0);
    return T;
}

namespace {

SplitResiduals split_residuals_impl(const KgmState& s, const ComplexFourField& D,
                                    const std::array<const ScalarField*, 4>& w,
                                    double rho_floor_rel) {
    SplitResiduals out{ScalarField(s.grid), ScalarField(s.grid)};
    ScalarField rho(s.grid);
    parallel_for(rho.size(), [&](std::size_t i) { rho[i] = std::norm(s.phi[i]); });
    const double rho_max = norm(rho, NormKind::Linf);
    const double floor = rho_floor_rel * rho_max;
    double nkept = rho_max > 0.0 ? chunked_sum(rho.size(), [&](std::size_t i) {
        return rho[i] > floor ? 1.0 : 0.0;
    }) : 0.0;
    if (nkept == 0.0) throw std::runtime_error("split_identity_residuals: all cells below rho floor");

    ScalarField scale1(s.grid), scale2(s.grid);
    parallel_for(rho.size(), [&](std::size_t i) {
        if (rho[i] <= floor) {
            out.r1[i] = out.r2[i] = scale1[i] = scale2[i] = 0.0;
            return;
        }
        double J[4], Dm[4], W[4];
        for (int a = 0; a < 4; ++a) {
            J[a] = -std::imag(s.phi[i] * std::conj(D.c[a][i]));
            Dm[a] = std::norm(D.c[a][i]);
            W[a] = (*w[a])[i];
        }
        auto mink = [](const double* v, const double* u) {
            return -v[0] * u[0] + v[1] * u[1] + v[2] * u[2] + v[3] * u[3];
        };
        auto eucl = [](const double* v, const double* u) {
            return v[0] * u[0] + v[1] * u[1] + v[2] * u[2] + v[3] * u[3];
        };
        const double jj_m = mink(J, J) / rho[i];
        const double ww_m = -W[0] * W[0] + W[1] * W[1] + W[2] * W[2] + W[3] * W[3];
        const double dd_m = -Dm[0] + Dm[1] + Dm[2] + Dm[3];
        out.r1[i] = jj_m + ww_m - dd_m;
        scale1[i] = std::max({std::abs(jj_m), std::abs(ww_m), std::abs(dd_m)});

        const double jj_e = eucl(J, J) / rho[i];
        const double ww_e = W[0] * W[0] + W[1] * W[1] + W[2] * W[2] + W[3] * W[3];
        const double dd_e = Dm[0] + Dm[1] + Dm[2] + Dm[3];
        out.r2[i] = jj_e + ww_e - dd_e;
        scale2[i] = std::max({jj_e, ww_e, dd_e});
    });
    const double s1 = std::max(norm(scale1, NormKind::Linf), 1e-300);
    const double s2 = std::max(norm(scale2, NormKind::Linf), 1e-300);
    out.rel_r1 = norm(out.r1, NormKind::Linf) / s1;
    out.rel_r2 = norm(out.r2, NormKind::Linf) / s2;
    return out;
}

}  // namespace

SplitResiduals split_identity_residuals(const KgmState& s, Backend b, double rho_floor_rel) {
    ComplexFourField D = kgm_covariant_derivative(s, b);
    // eps * d_a sqrt(rho) = Re(conj(phi) D_a phi)/|phi|, pointwise-exact
    std::array<ScalarField, 4> w;
    for (int a = 0; a < 4; ++a) {
        w[a] = ScalarField(s.grid);
        parallel_for(w[a].size(), [&](std::size_t i) {
            double m = std::abs(s.phi[i]);
            w[a][i] = m > 0.0 ? std::real(std::conj(s.phi[i]) * D.c[a][i]) / m : 0.0;
        });
    }
    return split_residuals_impl(s, D, {&w[0], &w[1], &w[2], &w[3]}, rho_floor_rel);
}

SplitResiduals split_identity_residuals_discrete(const KgmState& prev, const KgmState& mid,
                                                 const KgmState& next, Backend b,
                                                 double rho_floor_rel) {
    ComplexFourField D = kgm_covariant_derivative(mid, b);
    auto sqrt_rho = [](const KgmState& st) {
        ScalarField r(st.grid);
        parallel_for(r.size(), [&](std::size_t i) { r[i] = std::abs(st.phi[i]); });
        return r;
    };
    ScalarField rp = sqrt_rho(prev), rm = sqrt_rho(mid), rn = sqrt_rho(next);
    const double dt = 0.5 * (next.t - prev.t);
    std::array<ScalarField, 4> w;
    w[0] = ScalarField(mid.grid);
    parallel_for(w[0].size(), [&](std::size_t i) {
        w[0][i] = mid.eps * (rn[i] - rp[i]) / (2.0 * dt);
    });
    for (int a = 0; a < 3; ++a) {
        ScalarField d = derivative(rm, a, b);
        w[a + 1] = ScalarField(mid.grid);
        parallel_for(w[a + 1].size(), [&](std::size_t i) { w[a + 1][i] = mid.eps * d[i]; });
    }
    return split_residuals_impl(mid, D, {&w[0], &w[1], &w[2], &w[3]}, rho_floor_rel);
}

FourVectorField stress_divergence_residual(const StressTensorField& prev,
                                           const StressTensorField& mid,
                                           const StressTensorField& next, double dt, Backend b) {
    FourVectorField out(mid.c[0].grid_ptr(), IndexPos::lower);
    // d_a T^a_b = -d_t T_{0b} + sum_i d_i T_{ib}
    for (int beta = 0; beta < 4; ++beta) {
        ScalarField acc(mid.c[0].grid_ptr());
        parallel_for(acc.size(), [&](std::size_t i) {
            acc[i] = -(next.at(0, beta, i) - prev.at(0, beta, i)) / (2.0 * dt);
        });
        for (int a = 0; a < 3; ++a) {
            ScalarField d = derivative(mid.c[StressTensorField::slot(a + 1, beta)], a, b);
            parallel_for(acc.size(), [&](std::size_t i) { acc[i] += d[i]; });
        }
        if (beta == 0) out.t = acc; else out.x[beta - 1] = acc;
    }
    return out;
}

}  // namespace mkgm
