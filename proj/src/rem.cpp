#include "mkgm/rem.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

#include "mkgm/norms.hpp"

namespace mkgm {

namespace {

struct MatterFields {
    VectorField3 u;
    ScalarField dens;  // rho (advective path) or q = U0*rho (upwind path)
    VectorField3 E;
};

ScalarField u0_of(const VectorField3& u) {
    ScalarField g(u.grid_ptr());
    parallel_for(g.size(), [&](std::size_t i) {
        g[i] = std::sqrt(1.0 + u[0][i] * u[0][i] + u[1][i] * u[1][i] + u[2][i] * u[2][i]);
    });
    return g;
}

// Donor-cell divergence of the flux v*q along all axes.
ScalarField upwind_flux_div(const VectorField3& v, const ScalarField& q) {
    const Grid& g = q.grid();
    ScalarField out(q.grid_ptr());
    const int n1 = g.n[1], n2 = g.n[2];
    const std::array<std::size_t, 3> stride{std::size_t(n1) * n2, std::size_t(n2), 1};
    parallel_for(g.cells(), [&](std::size_t i) {
        int iz = int(i % n2);
        int iy = int((i / n2) % n1);
        int ix = int(i / (std::size_t(n1) * n2));
        const std::array<int, 3> idx{ix, iy, iz};
        double acc = 0.0;
        for (int a = 0; a < 3; ++a) {
            const int N = g.n[a];
            if (N == 1) continue;
            const double h = g.dx(a);
            auto cell = [&](int off) {
                int j = Grid::wrap(idx[a] + off, N);
                return i + (std::size_t(j) - idx[a]) * stride[a];
            };
            auto face_flux = [&](std::size_t lo, std::size_t hi) {
                double vf = 0.5 * (v[a][lo] + v[a][hi]);
                return vf > 0.0 ? vf * q[lo] : vf * q[hi];
            };
            double fp = face_flux(i, cell(1));
            double fm = face_flux(cell(-1), i);
            acc += (fp - fm) / h;
        }
        out[i] = acc;
    });
    return out;
}

// Upwind advective derivative sum_a v_a d_a f.
ScalarField upwind_advect(const VectorField3& v, const ScalarField& f) {
    const Grid& g = f.grid();
    ScalarField out(f.grid_ptr());
    const int n1 = g.n[1], n2 = g.n[2];
    const std::array<std::size_t, 3> stride{std::size_t(n1) * n2, std::size_t(n2), 1};
    parallel_for(g.cells(), [&](std::size_t i) {
        int iz = int(i % n2);
        int iy = int((i / n2) % n1);
        int ix = int(i / (std::size_t(n1) * n2));
        const std::array<int, 3> idx{ix, iy, iz};
        double acc = 0.0;
        for (int a = 0; a < 3; ++a) {
            const int N = g.n[a];
            if (N == 1) continue;
            const double h = g.dx(a);
            auto cell = [&](int off) {
                int j = Grid::wrap(idx[a] + off, N);
                return i + (std::size_t(j) - idx[a]) * stride[a];
            };
            double va = v[a][i];
            double df = va > 0.0 ? (f[i] - f[cell(-1)]) / h : (f[cell(1)] - f[i]) / h;
            acc += va * df;
        }
        out[i] = acc;
    });
    return out;
}

// Time derivative of the matter block. include_curls adds the vacuum Maxwell
// terms (rk4 path); the Strang path integrates those exactly elsewhere.
MatterFields matter_rhs(const MatterFields& m, const VectorField3& B, const RemOptions& opts,
                        bool include_curls, VectorField3* dB) {
    const GridPtr g = m.dens.grid_ptr();
    MatterFields d{VectorField3(g), ScalarField(g), VectorField3(g)};
    ScalarField U0 = u0_of(m.u);

    const bool upwind = opts.transport == RemTransport::upwind;
    VectorField3 v(g);  // coordinate velocity u/U0
    parallel_for(v.size(), [&](std::size_t i) {
        for (int a = 0; a < 3; ++a) v[a][i] = m.u[a][i] / U0[i];
    });

    // velocity: du_i = -v.grad(u_i) + (E_i U0 + (u x B)_i)/U0
    std::array<ScalarField, 3> adv;
    if (upwind) {
        for (int a = 0; a < 3; ++a) adv[a] = upwind_advect(v, m.u[a]);
    } else {
        for (int a = 0; a < 3; ++a) {
            adv[a] = ScalarField(g);
            for (int c = 0; c < 3; ++c) {
                ScalarField dc = derivative(m.u[a], c, opts.backend);
                parallel_for(adv[a].size(), [&](std::size_t i) { adv[a][i] += v[c][i] * dc[i]; });
            }
        }
    }
    parallel_for(d.u.size(), [&](std::size_t i) {
        double uxB[3] = {m.u[1][i] * B[2][i] - m.u[2][i] * B[1][i],
                         m.u[2][i] * B[0][i] - m.u[0][i] * B[2][i],
                         m.u[0][i] * B[1][i] - m.u[1][i] * B[0][i]};
        for (int a = 0; a < 3; ++a)
            d.u[a][i] = -adv[a][i] + m.E[a][i] + uxB[a] / U0[i];
    });

    if (upwind) {
        // flux form on q = U0*rho
        d.dens = upwind_flux_div(v, m.dens);
        parallel_for(d.dens.size(), [&](std::size_t i) { d.dens[i] = -d.dens[i]; });
    } else {
        // advective form on rho: drho = -(div(u rho) + rho dU0)/U0
        VectorField3 flux(g);
        parallel_for(flux.size(), [&](std::size_t i) {
            for (int a = 0; a < 3; ++a) flux[a][i] = m.u[a][i] * m.dens[i];
        });
        ScalarField divf = divergence(flux, opts.backend);
        parallel_for(d.dens.size(), [&](std::size_t i) {
            double du0 = (m.u[0][i] * d.u[0][i] + m.u[1][i] * d.u[1][i] + m.u[2][i] * d.u[2][i]) /
                         U0[i];
            d.dens[i] = -(divf[i] + m.dens[i] * du0) / U0[i];
        });
    }

    // dE = -u rho (+ curl B on the unsplit path)
    ScalarField rho(g);
    if (upwind) {
        parallel_for(rho.size(), [&](std::size_t i) { rho[i] = m.dens[i] / U0[i]; });
    } else {
        rho = m.dens;
    }
    parallel_for(d.E.size(), [&](std::size_t i) {
        for (int a = 0; a < 3; ++a) d.E[a][i] = -m.u[a][i] * rho[i];
    });
    if (include_curls) {
        VectorField3 cb = curl(B, opts.backend);
        VectorField3 ce = curl(m.E, opts.backend);
        parallel_for(d.E.size(), [&](std::size_t i) {
            for (int a = 0; a < 3; ++a) {
                d.E[a][i] += cb[a][i];
                (*dB)[a][i] = -ce[a][i];
            }
        });
    }
    return d;
}

void axpy(MatterFields& y, double a, const MatterFields& x) {
    parallel_for(y.dens.size(), [&](std::size_t i) {
        y.dens[i] += a * x.dens[i];
        for (int c = 0; c < 3; ++c) {
            y.u[c][i] += a * x.u[c][i];
            y.E[c][i] += a * x.E[c][i];
        }
    });
}

ScalarField grad_u_mag2(const VectorField3& u, Backend b) {
    ScalarField mag(u.grid_ptr());
    for (int a = 0; a < 3; ++a)
        for (int c = 0; c < 3; ++c) {
            ScalarField d = derivative(u[a], c, b);
            parallel_for(mag.size(), [&](std::size_t i) { mag[i] += d[i] * d[i]; });
        }
    return mag;
}

double max_grad_u_impl(const VectorField3& u, Backend b, std::size_t* argmax = nullptr) {
    ScalarField mag = grad_u_mag2(u, b);
    if (argmax) {
        std::size_t best = 0;
        for (std::size_t i = 1; i < mag.size(); ++i)
            if (mag[i] > mag[best]) best = i;
        *argmax = best;
        return std::sqrt(mag[best]);
    }
    return std::sqrt(chunked_max(mag.size(), [&](std::size_t i) { return mag[i]; }));
}

}  // namespace

ScalarField rem_u0(const RemState& s) { return u0_of(s.u); }

FourVectorField rem_current(const RemState& s) {
    FourVectorField J(s.grid, IndexPos::lower);
    ScalarField U0 = u0_of(s.u);
    parallel_for(J.size(), [&](std::size_t i) {
        J.t[i] = -U0[i] * s.rho[i];  // U_0 = -U^0
        for (int a = 0; a < 3; ++a) J.x[a][i] = s.u[a][i] * s.rho[i];
    });
    return J;
}

RemInitReport rem_init(VectorField3 u0, ScalarField rho0, VectorField3 E0, VectorField3 B0,
                       Backend b) {
    require_same_grid(u0.grid(), rho0.grid(), "rem_init");
    require_same_grid(u0.grid(), E0.grid(), "rem_init");
    require_same_grid(u0.grid(), B0.grid(), "rem_init");
    if (!all_finite(u0) || !all_finite(rho0) || !all_finite(E0) || !all_finite(B0))
        throw std::invalid_argument("rem_init: nonfinite input field");
    const double rmax = std::max(norm(rho0, NormKind::Linf), 1.0);
    const double rmin = -chunked_max(rho0.size(), [&](std::size_t i) {
        return rho0[i] < 0.0 ? -rho0[i] : 0.0;
    });
    if (rmin < -1e-12 * rmax)
        throw std::invalid_argument("rem_init: rho0 negative beyond roundoff");
    RemInitReport rep;
    rep.state = RemState{u0.grid_ptr(), std::move(u0), std::move(rho0), std::move(E0),
                         std::move(B0), 0.0};
    RemObservables obs = rem_observables(rep.state, b);
    rep.gauss_residual = obs.gauss_residual;
    rep.divB_residual = obs.divB_residual;
    return rep;
}

double rem_max_grad_u(const RemState& s, Backend b) {
    Backend bm = b == Backend::spectral ? b : Backend::fd2;
    return max_grad_u_impl(s.u, bm);
}

void rem_step(RemState& s, double dt, const RemOptions& opts) {
    const double dmin = s.grid->min_dx();
    if (std::isfinite(dmin) && dt > opts.c_cfl * dmin * (1.0 + 1e-12)) {
        std::ostringstream os;
        os << "rem_step: dt=" << dt << " violates dt <= " << opts.c_cfl << "*min(dx)";
        throw std::invalid_argument(os.str());
    }
    {
        Backend bm = opts.backend == Backend::spectral ? opts.backend : Backend::fd2;
        std::size_t where = 0;
        const double mg = max_grad_u_impl(s.u, bm, &where);
        if (std::isfinite(dmin) && mg * dmin > opts.shock_threshold) {
            std::ostringstream os;
            os << "rem_step: shock monitor tripped at t=" << s.t << ", cell " << where
               << " (max|grad u|*dx=" << mg * dmin << ")";
            throw RemShockAbort(os.str(), s.t, where);
        }
    }

    const bool split = opts.integrator == RemIntegrator::strang_heun;
    const bool upwind = opts.transport == RemTransport::upwind;
    ScalarField U0 = u0_of(s.u);

    MatterFields y{s.u, ScalarField(s.grid), s.E};
    if (upwind) {
        parallel_for(y.dens.size(), [&](std::size_t i) { y.dens[i] = U0[i] * s.rho[i]; });
    } else {
        y.dens = s.rho;
    }

    if (split) {
        maxwell_rotate(s.E, s.B, 0.5 * dt, opts.backend);
        y.E = s.E;
        // Heun = SSP-RK2: convex combination of two Euler steps
        MatterFields k1 = matter_rhs(y, s.B, opts, false, nullptr);
        MatterFields y1 = y;
        axpy(y1, dt, k1);
        MatterFields k2 = matter_rhs(y1, s.B, opts, false, nullptr);
        axpy(y, 0.5 * dt, k1);
        axpy(y, 0.5 * dt, k2);
        s.u = y.u;
        s.E = y.E;
        maxwell_rotate(s.E, s.B, 0.5 * dt, opts.backend);
    } else {
        // classical RK4 on the full unsplit system
        VectorField3 B0 = s.B;
        auto full_rhs = [&](const MatterFields& m, const VectorField3& B, VectorField3& dB) {
            return matter_rhs(m, B, opts, true, &dB);
        };
        VectorField3 dB1(s.grid), dB2(s.grid), dB3(s.grid), dB4(s.grid);
        MatterFields k1 = full_rhs(y, B0, dB1);
        MatterFields y2 = y;
        axpy(y2, 0.5 * dt, k1);
        VectorField3 Bk2(s.grid);
        parallel_for(Bk2.size(), [&](std::size_t i) {
            for (int a = 0; a < 3; ++a) Bk2[a][i] = B0[a][i] + 0.5 * dt * dB1[a][i];
        });
        MatterFields k2 = full_rhs(y2, Bk2, dB2);
        MatterFields y3 = y;
        axpy(y3, 0.5 * dt, k2);
        VectorField3 Bk3(s.grid);
        parallel_for(Bk3.size(), [&](std::size_t i) {
            for (int a = 0; a < 3; ++a) Bk3[a][i] = B0[a][i] + 0.5 * dt * dB2[a][i];
        });
        MatterFields k3 = full_rhs(y3, Bk3, dB3);
        MatterFields y4 = y;
        axpy(y4, dt, k3);
        VectorField3 Bk4(s.grid);
        parallel_for(Bk4.size(), [&](std::size_t i) {
            for (int a = 0; a < 3; ++a) Bk4[a][i] = B0[a][i] + dt * dB3[a][i];
        });
        MatterFields k4 = full_rhs(y4, Bk4, dB4);
        axpy(y, dt / 6.0, k1);
        axpy(y, dt / 3.0, k2);
        axpy(y, dt / 3.0, k3);
        axpy(y, dt / 6.0, k4);
        parallel_for(s.B.size(), [&](std::size_t i) {
            for (int a = 0; a < 3; ++a)
                s.B[a][i] = B0[a][i] + dt * (dB1[a][i] / 6.0 + dB2[a][i] / 3.0 +
                                             dB3[a][i] / 3.0 + dB4[a][i] / 6.0);
        });
        s.u = y.u;
        s.E = y.E;
    }

    if (upwind) {
        ScalarField U0n = u0_of(s.u);
        parallel_for(s.rho.size(), [&](std::size_t i) { s.rho[i] = y.dens[i] / U0n[i]; });
    } else {
        s.rho = y.dens;
    }

    if (opts.backend == Backend::spectral && opts.filter_strength > 0.0 && !upwind) {
        const double gamma = opts.filter_strength * dt;
        spectral_filter(s.rho, gamma, opts.filter_order);
        for (int a = 0; a < 3; ++a) spectral_filter(s.u[a], gamma, opts.filter_order);
    }
    s.t += dt;
}

RemTrajectory rem_evolve(RemState s, double T, double dt, const RemOptions& opts, int stride) {
    if (stride < 1) throw std::invalid_argument("rem_evolve: stride must be >= 1");
    const long long nsteps = (long long)std::llround(T / dt);
    if (nsteps < 1 || std::abs(nsteps * dt - T) > 1e-9 * std::max(1.0, T))
        throw std::invalid_argument("rem_evolve: T must be an integer number of steps");
    RemTrajectory traj;
    traj.dt = dt;
    traj.stride = stride;
    traj.snaps.push_back(s);
    for (long long k = 0; k < nsteps; ++k) {
        rem_step(s, dt, opts);
        if (opts.check_finite &&
            !(all_finite(s.u) && all_finite(s.rho) && all_finite(s.E) && all_finite(s.B))) {
            std::ostringstream os;
            os << "rem_evolve: nonfinite values at step " << (k + 1) << " (t=" << s.t << ")";
            throw std::runtime_error(os.str());
        }
        if ((k + 1) % stride == 0 || k + 1 == nsteps) traj.snaps.push_back(s);
    }
    return traj;
}

RemObservables rem_observables(const RemState& s, Backend b) {
    RemObservables obs{rem_current(s)};
    ScalarField U0 = u0_of(s.u);
    const double vol = s.grid->cell_volume();
    obs.energy = chunked_sum(s.rho.size(), [&](std::size_t i) {
        double em = 0.0;
        for (int a = 0; a < 3; ++a) em += s.E[a][i] * s.E[a][i] + s.B[a][i] * s.B[a][i];
        return s.rho[i] * U0[i] * U0[i] + 0.5 * em;
    }) * vol;
    ScalarField q(s.grid);
    parallel_for(q.size(), [&](std::size_t i) { q[i] = U0[i] * s.rho[i]; });
    obs.charge = integral(q);

    ScalarField divE = divergence(s.E, b);
    const double qbar = mean(q);
    ScalarField gres(s.grid);
    parallel_for(gres.size(), [&](std::size_t i) { gres[i] = divE[i] - (q[i] - qbar); });
    obs.gauss_residual = norm(gres, NormKind::L2);
    obs.divB_residual = norm(divergence(s.B, b), NormKind::L2);
    obs.normalization_residual = chunked_max(s.rho.size(), [&](std::size_t i) {
        double uu = s.u[0][i] * s.u[0][i] + s.u[1][i] * s.u[1][i] + s.u[2][i] * s.u[2][i];
        return std::abs(-U0[i] * U0[i] + uu + 1.0);
    });
    obs.max_grad_u = rem_max_grad_u(s, b);
    return obs;
}

StressTensorField rem_stress_energy(const RemState& s) {
    StressTensorField T(s.grid);
    ScalarField U0 = u0_of(s.u);
    parallel_for(T.size(), [&](std::size_t i) {
        double Ul[4] = {-U0[i], s.u[0][i], s.u[1][i], s.u[2][i]};
        for (int a = 0; a < 4; ++a)
            for (int c = a; c < 4; ++c) T.at(a, c, i) = s.rho[i] * Ul[a] * Ul[c];
    });
    FaradayField F = faraday_pack(s.E, s.B);
    add_em_stress(T, F, F, 1.0);
    return T;
}

namespace {

// Trilinear periodic interpolation at physical point p.
double interp3(const ScalarField& f, const std::array<double, 3>& p) {
    const Grid& g = f.grid();
    double w[3][2];
    int base[3];
    for (int a = 0; a < 3; ++a) {
        if (g.n[a] == 1) {
            base[a] = 0;
            w[a][0] = 1.0;
            w[a][1] = 0.0;
            continue;
        }
        double x = p[a] / g.dx(a) - 0.5;  // cell-center coordinates
        double fl = std::floor(x);
        base[a] = int(fl);
        w[a][1] = x - fl;
        w[a][0] = 1.0 - w[a][1];
    }
    double acc = 0.0;
    for (int dx0 = 0; dx0 < 2; ++dx0)
        for (int dx1 = 0; dx1 < 2; ++dx1)
            for (int dx2 = 0; dx2 < 2; ++dx2) {
                double wt = w[0][dx0] * w[1][dx1] * w[2][dx2];
                if (wt == 0.0) continue;
                int i0 = Grid::wrap(base[0] + dx0, g.n[0]);
                int i1 = Grid::wrap(base[1] + dx1, g.n[1]);
                int i2 = Grid::wrap(base[2] + dx2, g.n[2]);
                acc += wt * f[g.idx(i0, i1, i2)];
            }
    return acc;
}

}  // namespace

ScalarField characteristics_density(const RemTrajectory& traj, Backend b) {
    const auto& snaps = traj.snaps;
    if (snaps.size() < 2)
        throw std::invalid_argument("characteristics_density: need at least two snapshots");
    const Grid& g = *snaps.front().grid;
    const double dt = traj.dt_out();
    const std::size_t ns = snaps.size();

    // Per-snapshot coordinate velocity and (four-divergence of U)/U0.
    std::vector<VectorField3> v(ns);
    std::vector<ScalarField> decay(ns);
    std::vector<ScalarField> U0s(ns);
    for (std::size_t k = 0; k < ns; ++k) U0s[k] = u0_of(snaps[k].u);
    for (std::size_t k = 0; k < ns; ++k) {
        v[k] = VectorField3(snaps[k].rho.grid_ptr());
        double maxv = 0.0;
        parallel_for(v[k].size(), [&](std::size_t i) {
            for (int a = 0; a < 3; ++a) v[k][a][i] = snaps[k].u[a][i] / U0s[k][i];
        });
        maxv = chunked_max(v[k].size(), [&](std::size_t i) {
            return std::sqrt(v[k][0][i] * v[k][0][i] + v[k][1][i] * v[k][1][i] +
                             v[k][2][i] * v[k][2][i]);
        });
        if (maxv >= 1.0)
            throw std::runtime_error("characteristics_density: |u|/U0 reached light speed");
        ScalarField du0(snaps[k].rho.grid_ptr());
        if (ns >= 2) {
            const ScalarField& lo = U0s[k == 0 ? 0 : k - 1];
            const ScalarField& hi = U0s[k + 1 == ns ? ns - 1 : k + 1];
            double denom = (k == 0 || k + 1 == ns) ? dt : 2.0 * dt;
            parallel_for(du0.size(), [&](std::size_t i) { du0[i] = (hi[i] - lo[i]) / denom; });
        }
        ScalarField divu = divergence(snaps[k].u, b);
        decay[k] = ScalarField(snaps[k].rho.grid_ptr());
        parallel_for(decay[k].size(), [&](std::size_t i) {
            decay[k][i] = (du0[i] + divu[i]) / U0s[k][i];
        });
    }

    auto sample = [&](const std::vector<ScalarField>& fld, double tau,
                      const std::array<double, 3>& p) {
        // tau in units of dt_out from the start
        double c = std::min(std::max(tau, 0.0), double(ns - 1));
        std::size_t k0 = std::min(std::size_t(c), ns - 2);
        double w1 = c - k0;
        return (1.0 - w1) * interp3(fld[k0], p) + w1 * interp3(fld[k0 + 1], p);
    };
    auto sample_v = [&](double tau, const std::array<double, 3>& p) {
        std::array<double, 3> out;
        double c = std::min(std::max(tau, 0.0), double(ns - 1));
        std::size_t k0 = std::min(std::size_t(c), ns - 2);
        double w1 = c - k0;
        for (int a = 0; a < 3; ++a)
            out[a] = (1.0 - w1) * interp3(v[k0][a], p) + w1 * interp3(v[k0 + 1][a], p);
        return out;
    };
    std::vector<ScalarField> decay_series = decay;

    ScalarField out(snaps.front().rho.grid_ptr());
    const int n1 = g.n[1], n2 = g.n[2];
    parallel_for(g.cells(), [&](std::size_t i) {
        int iz = int(i % n2);
        int iy = int((i / n2) % n1);
        int ix = int(i / (std::size_t(n1) * n2));
        std::array<double, 3> p{g.coord(0, ix), g.coord(1, iy), g.coord(2, iz)};
        double I = 0.0;
        // integrate backward from tau = ns-1 to 0, RK4 on the joint (p, I) system
        for (std::size_t k = ns - 1; k > 0; --k) {
            double tau = double(k);
            auto f = [&](double tq, const std::array<double, 3>& pq) {
                auto vv = sample_v(tq, pq);
                return std::array<double, 4>{-vv[0], -vv[1], -vv[2],
                                             -sample(decay_series, tq, pq)};
            };
            auto step = [&](const std::array<double, 3>& pq, const std::array<double, 4>& kk,
                            double h) {
                return std::array<double, 3>{pq[0] + h * kk[0], pq[1] + h * kk[1],
                                             pq[2] + h * kk[2]};
            };
            auto k1 = f(tau, p);
            auto k2 = f(tau - 0.5, step(p, k1, 0.5 * dt));
            auto k3 = f(tau - 0.5, step(p, k2, 0.5 * dt));
            auto k4 = f(tau - 1.0, step(p, k3, dt));
            for (int a = 0; a < 3; ++a)
                p[a] += dt / 6.0 * (k1[a] + 2.0 * k2[a] + 2.0 * k3[a] + k4[a]);
            I += dt / 6.0 * (k1[3] + 2.0 * k2[3] + 2.0 * k3[3] + k4[3]);
        }
        // I accumulated the backward integral of -decay; forward integral is -I
        out[i] = interp3(snaps.front().rho, p) * std::exp(I);
    });
    return out;
}

double wave_residual(const RemTrajectory& traj, Backend b) {
    const auto& sn = traj.snaps;
    if (sn.size() < 3) throw std::invalid_argument("wave_residual: need >= 3 snapshots");
    const std::size_t m = sn.size() / 2;
    const double dt = traj.dt_out();
    for (std::size_t k = 0; k < sn.size(); ++k)
        if (std::abs(sn[k].t - (sn[0].t + double(k) * dt)) > 1e-9)
            throw std::invalid_argument("wave_residual: snapshots not uniformly spaced");
    const RemState& mid = sn[m];
    FourVectorField Jm = rem_current(mid), Jp = rem_current(sn[m + 1]), Jq = rem_current(sn[m - 1]);

    auto box_of = [&](auto get) {
        // -d_tt F + lap F for one component selected by get(state)
        ScalarField fm = get(sn[m]);
        ScalarField lap = laplacian(fm, b);
        ScalarField fp = get(sn[m + 1]), fq = get(sn[m - 1]);
        ScalarField out(fm.grid_ptr());
        parallel_for(out.size(), [&](std::size_t i) {
            double dtt = (fp[i] - 2.0 * fm[i] + fq[i]) / (dt * dt);
            out[i] = -dtt + lap[i];
        });
        return out;
    };

    double sum2 = 0.0;
    // electric components: box E_i = d_t J_i - d_i J_0
    for (int a = 0; a < 3; ++a) {
        ScalarField lhs = box_of([a](const RemState& s) { return s.E[a]; });
        ScalarField dJ0 = derivative(Jm.t, a, b);
        ScalarField res(mid.grid);
        parallel_for(res.size(), [&](std::size_t i) {
            double dtJ = (Jp.x[a][i] - Jq.x[a][i]) / (2.0 * dt);
            res[i] = lhs[i] - (dtJ - dJ0[i]);
        });
        double l2 = norm(res, NormKind::L2);
        sum2 += l2 * l2;
    }
    // magnetic components: for cyclic (i,j,k), F_{ij} = -B_k, so
    // -box B_k = d_i J_j - d_j J_i
    for (int k = 0; k < 3; ++k) {
        int i1 = (k + 1) % 3, j1 = (k + 2) % 3;
        ScalarField lhs = box_of([k](const RemState& s) { return s.B[k]; });
        ScalarField didj = derivative(Jm.x[j1], i1, b);
        ScalarField djdi = derivative(Jm.x[i1], j1, b);
        ScalarField res(mid.grid);
        parallel_for(res.size(), [&](std::size_t i) {
            res[i] = -lhs[i] - (didj[i] - djdi[i]);
        });
        double l2 = norm(res, NormKind::L2);
        sum2 += l2 * l2;
    }
    return std::sqrt(sum2);
}

namespace {

std::array<double, 3> sym3_eigenvalues(double a00, double a01, double a02, double a11, double a12,
                                       double a22) {
    double A[3][3] = {{a00, a01, a02}, {a01, a11, a12}, {a02, a12, a22}};
    for (int sweep = 0; sweep < 64; ++sweep) {
        double off = std::abs(A[0][1]) + std::abs(A[0][2]) + std::abs(A[1][2]);
        double diag = std::abs(A[0][0]) + std::abs(A[1][1]) + std::abs(A[2][2]);
        if (off <= 1e-16 * std::max(diag, 1e-300)) break;
        for (int p = 0; p < 2; ++p)
            for (int q = p + 1; q < 3; ++q) {
                if (A[p][q] == 0.0) continue;
                double theta = 0.5 * std::atan2(2.0 * A[p][q], A[q][q] - A[p][p]);
                double c = std::cos(theta), s = std::sin(theta);
                double app = c * c * A[p][p] - 2.0 * s * c * A[p][q] + s * s * A[q][q];
                double aqq = s * s * A[p][p] + 2.0 * s * c * A[p][q] + c * c * A[q][q];
                int r = 3 - p - q;
                double arp = c * A[r][p] - s * A[r][q];
                double arq = s * A[r][p] + c * A[r][q];
                A[p][p] = app;
                A[q][q] = aqq;
                A[p][q] = A[q][p] = 0.0;
                A[r][p] = A[p][r] = arp;
                A[r][q] = A[q][r] = arq;
            }
    }
    std::array<double, 3> ev{A[0][0], A[1][1], A[2][2]};
    std::sort(ev.begin(), ev.end(), std::greater<double>());
    return ev;
}

}  // namespace

std::array<ScalarField, 3> elliptic_spectrum(const RemState& s) {
    std::array<ScalarField, 3> out{ScalarField(s.grid), ScalarField(s.grid), ScalarField(s.grid)};
    ScalarField U0 = u0_of(s.u);
    parallel_for(s.rho.size(), [&](std::size_t i) {
        double f = 1.0 / (U0[i] * U0[i]);
        double u0v = s.u[0][i], u1v = s.u[1][i], u2v = s.u[2][i];
        auto ev = sym3_eigenvalues(1.0 - u0v * u0v * f, -u0v * u1v * f, -u0v * u2v * f,
                                   1.0 - u1v * u1v * f, -u1v * u2v * f, 1.0 - u2v * u2v * f);
        for (int a = 0; a < 3; ++a) out[a][i] = ev[a];
    });
    return out;
}

FourVectorField rem_momentum_residual(const RemTrajectory& traj, std::size_t mid, Backend b) {
    const auto& sn = traj.snaps;
    if (mid == 0 || mid + 1 >= sn.size())
        throw std::invalid_argument("rem_momentum_residual: mid must be interior");
    const RemState& s = sn[mid];
    const double dt = traj.dt_out();
    ScalarField U0m = u0_of(s.u), U0p = u0_of(sn[mid + 1].u), U0q = u0_of(sn[mid - 1].u);
    FourVectorField out(s.grid, IndexPos::lower);

    // residual_b = U^0 d_t U_b + u.grad U_b - F_{ab} U^a
    // beta = 0: U_0 = -U^0
    {
        ScalarField acc(s.grid);
        parallel_for(acc.size(), [&](std::size_t i) {
            acc[i] = U0m[i] * (-(U0p[i] - U0q[i]) / (2.0 * dt));
        });
        for (int c = 0; c < 3; ++c) {
            ScalarField d(s.grid);
            parallel_for(d.size(), [&](std::size_t i) { d[i] = -U0m[i]; });
            ScalarField dd = derivative(d, c, b);
            parallel_for(acc.size(), [&](std::size_t i) { acc[i] += s.u[c][i] * dd[i]; });
        }
        parallel_for(acc.size(), [&](std::size_t i) {
            double f = 0.0;  // F_{a0} U^a = F_{i0} U^i = -E_i u_i
            for (int c = 0; c < 3; ++c) f += -s.E[c][i] * s.u[c][i];
            acc[i] -= f;
        });
        out.t = acc;
    }
    for (int a = 0; a < 3; ++a) {
        ScalarField acc(s.grid);
        parallel_for(acc.size(), [&](std::size_t i) {
            acc[i] = U0m[i] * (sn[mid + 1].u[a][i] - sn[mid - 1].u[a][i]) / (2.0 * dt);
        });
        for (int c = 0; c < 3; ++c) {
            ScalarField dd = derivative(s.u[a], c, b);
            parallel_for(acc.size(), [&](std::size_t i) { acc[i] += s.u[c][i] * dd[i]; });
        }
        parallel_for(acc.size(), [&](std::size_t i) {
            double uxB = 0.0;
            switch (a) {
                case 0: uxB = s.u[1][i] * s.B[2][i] - s.u[2][i] * s.B[1][i]; break;
                case 1: uxB = s.u[2][i] * s.B[0][i] - s.u[0][i] * s.B[2][i]; break;
                default: uxB = s.u[0][i] * s.B[1][i] - s.u[1][i] * s.B[0][i]; break;
            }
            acc[i] -= s.E[a][i] * U0m[i] + uxB;
        });
        out.x[a] = acc;
    }
    return out;
}

}  // namespace mkgm
