#include "mkgm/modenergy.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

#include "mkgm/norms.hpp"

namespace mkgm {

namespace {

void add_kinetic_block(StressTensorField& T, const ComplexFourField& xi) {
    parallel_for(T.size(), [&](std::size_t i) {
        double trace = -std::norm(xi.c[0][i]);
        for (int a = 1; a < 4; ++a) trace += std::norm(xi.c[a][i]);
        for (int a = 0; a < 4; ++a)
            for (int c = a; c < 4; ++c) {
                double gac = (a == c) ? (a == 0 ? -1.0 : 1.0) : 0.0;
                T.at(a, c, i) += std::real(xi.c[a][i] * std::conj(xi.c[c][i])) - 0.5 * gac * trace;
            }
    });
}

}  // namespace

ModulatedFields modulated_fields(const KgmState& kgm, const RemState& rem, Backend b,
                                 double time_tol) {
    require_same_grid(*kgm.grid, *rem.grid, "modulated_fields");
    if (std::abs(kgm.t - rem.t) > time_tol) {
        std::ostringstream os;
        os << "modulated_fields: state times differ (" << kgm.t << " vs " << rem.t << ")";
        throw std::invalid_argument(os.str());
    }
    ModulatedFields mf{ComplexFourField(kgm.grid, IndexPos::lower), VectorField3(kgm.grid),
                       VectorField3(kgm.grid), StressTensorField(kgm.grid),
                       StressTensorField(kgm.grid), kgm.eps, kgm.t};

    ComplexFourField D = kgm_covariant_derivative(kgm, b);
    ScalarField U0 = rem_u0(rem);
    parallel_for(mf.xi.size(), [&](std::size_t i) {
        const cplx iu(0.0, 1.0);
        mf.xi.c[0][i] = D.c[0][i] - iu * (-U0[i]) * kgm.phi[i];
        for (int a = 0; a < 3; ++a)
            mf.xi.c[a + 1][i] = D.c[a + 1][i] - iu * rem.u[a][i] * kgm.phi[i];
    });
    VectorField3 Bkgm = kgm_magnetic(kgm, b);
    parallel_for(mf.Ecal.size(), [&](std::size_t i) {
        for (int a = 0; a < 3; ++a) {
            mf.Ecal[a][i] = kgm.E[a][i] - rem.E[a][i];
            mf.Bcal[a][i] = Bkgm[a][i] - rem.B[a][i];
        }
    });

    // h: quadratic block
    add_kinetic_block(mf.h, mf.xi);
    FaradayField Xi = faraday_pack(mf.Ecal, mf.Bcal);
    add_em_stress(mf.h, Xi, Xi, 1.0);

    // I: linear remainder
    parallel_for(mf.I.size(), [&](std::size_t i) {
        double Ul[4] = {-U0[i], rem.u[0][i], rem.u[1][i], rem.u[2][i]};
        double Uu[4] = {U0[i], rem.u[0][i], rem.u[1][i], rem.u[2][i]};
        double rho_eps = std::norm(kgm.phi[i]);
        double a4[4];
        for (int a = 0; a < 4; ++a) {
            double Ja = -std::imag(kgm.phi[i] * std::conj(D.c[a][i]));
            a4[a] = Ja - Ul[a] * rho_eps;
        }
        double aU = 0.0;  // (J - U rho_eps)_g U^g
        for (int a = 0; a < 4; ++a) aU += a4[a] * Uu[a];
        for (int a = 0; a < 4; ++a)
            for (int c = a; c < 4; ++c) {
                double gac = (a == c) ? (a == 0 ? -1.0 : 1.0) : 0.0;
                mf.I.at(a, c, i) = -Ul[a] * Ul[c] * (rem.rho[i] - rho_eps) + Ul[a] * a4[c] +
                                   Ul[c] * a4[a] - gac * aU;
            }
    });
    FaradayField Frem = faraday_pack(rem.E, rem.B);
    add_em_stress(mf.I, Frem, Xi, 2.0);
    return mf;
}

KineticEmSplit kinetic_em_split(const ModulatedFields& mf) {
    const double vol = mf.Ecal.grid().cell_volume();
    KineticEmSplit s;
    s.K0 = 0.5 * vol * chunked_sum(mf.xi.size(), [&](std::size_t i) {
        double acc = 0.0;
        for (int a = 0; a < 4; ++a) acc += std::norm(mf.xi.c[a][i]);
        return acc;
    });
    s.P0 = 0.5 * vol * chunked_sum(mf.Ecal.size(), [&](std::size_t i) {
        double acc = 0.0;
        for (int a = 0; a < 3; ++a)
            acc += mf.Ecal[a][i] * mf.Ecal[a][i] + mf.Bcal[a][i] * mf.Bcal[a][i];
        return acc;
    });
    return s;
}

AcceptableVectorField make_acceptable(FourVectorField X_upper, double nu) {
    if (!(nu > 0.0)) throw std::invalid_argument("make_acceptable: nu must be positive");
    if (X_upper.pos != IndexPos::upper)
        throw std::invalid_argument("make_acceptable: X must be contravariant");
    const double tol = 1e-12;
    double bad = chunked_sum(X_upper.size(), [&](std::size_t i) {
        double x0 = X_upper.t[i];
        double xs2 = 0.0;
        for (int a = 0; a < 3; ++a) xs2 += X_upper.x[a][i] * X_upper.x[a][i];
        double norm4 = std::sqrt(x0 * x0 + xs2);
        double mink = x0 * x0 - xs2;  // -X^a X_a
        bool ok = norm4 <= 1.0 / nu + tol && x0 >= nu - tol && mink >= nu - tol;
        return ok ? 0.0 : 1.0;
    });
    if (bad != 0.0)
        throw std::invalid_argument("make_acceptable: field violates the acceptability bounds");
    return AcceptableVectorField{std::move(X_upper), nu};
}

AcceptableVectorField time_axis_field(GridPtr g) {
    FourVectorField X(g, IndexPos::upper);
    X.t.fill(1.0);
    return AcceptableVectorField{std::move(X), 1.0};
}

double modulated_energy(const ModulatedFields& mf, const AcceptableVectorField& X) {
    require_same_grid(mf.Ecal.grid(), X.X.grid(), "modulated_energy");
    const double vol = mf.Ecal.grid().cell_volume();
    return vol * chunked_sum(mf.h.size(), [&](std::size_t i) {
        double acc = mf.h.at(0, 0, i) * X.X.t[i];
        for (int a = 1; a < 4; ++a) acc += mf.h.at(a, 0, i) * X.X.x[a - 1][i];
        return acc;
    });
}

double modulated_energy_u(const ModulatedFields& mf, const RemState& rem) {
    ScalarField U0 = rem_u0(rem);
    const double vol = mf.Ecal.grid().cell_volume();
    return vol * chunked_sum(mf.h.size(), [&](std::size_t i) {
        double acc = mf.h.at(0, 0, i) * U0[i];
        for (int a = 1; a < 4; ++a) acc += mf.h.at(a, 0, i) * rem.u[a - 1][i];
        return acc;
    });
}

H00Forms h00_forms(const KgmState& kgm, const RemState& rem, Backend b, double rho_floor_rel) {
    ModulatedFields mf = modulated_fields(kgm, rem, b);
    ComplexFourField D = kgm_covariant_derivative(kgm, b);
    ScalarField U0 = rem_u0(rem);
    ScalarField rho(kgm.grid);
    parallel_for(rho.size(), [&](std::size_t i) { rho[i] = std::norm(kgm.phi[i]); });
    const double rho_max = norm(rho, NormKind::Linf);
    const double floor = rho_floor_rel * rho_max;
    double nkept = rho_max > 0.0 ? chunked_sum(rho.size(), [&](std::size_t i) {
        return rho[i] > floor ? 1.0 : 0.0;
    }) : 0.0;
    if (nkept == 0.0) throw std::runtime_error("h00_forms: all cells below rho floor");

    const double vol = kgm.grid->cell_volume();
    double em = 0.5 * vol * chunked_sum(rho.size(), [&](std::size_t i) {
        double acc = 0.0;
        for (int a = 0; a < 3; ++a)
            acc += mf.Ecal[a][i] * mf.Ecal[a][i] + mf.Bcal[a][i] * mf.Bcal[a][i];
        return acc;
    });
    H00Forms out;
    out.form1 = em + 0.5 * vol * chunked_sum(rho.size(), [&](std::size_t i) {
        if (rho[i] <= floor) return 0.0;
        double acc = 0.0;
        for (int a = 0; a < 4; ++a) acc += std::norm(mf.xi.c[a][i]);
        return acc;
    });
    double grad_term = 0.0, mid_term = 0.0;
    grad_term = 0.5 * vol * chunked_sum(rho.size(), [&](std::size_t i) {
        if (rho[i] <= floor) return 0.0;
        double m = std::sqrt(rho[i]);
        double acc = 0.0;
        for (int a = 0; a < 4; ++a) {
            double w = std::real(std::conj(kgm.phi[i]) * D.c[a][i]) / m;  // eps d_a sqrt(rho)
            acc += w * w;
        }
        return acc;
    });
    mid_term = 0.5 * vol * chunked_sum(rho.size(), [&](std::size_t i) {
        if (rho[i] <= floor) return 0.0;
        double Ul[4] = {-U0[i], rem.u[0][i], rem.u[1][i], rem.u[2][i]};
        double acc = 0.0;
        for (int a = 0; a < 4; ++a) {
            double Ja = -std::imag(kgm.phi[i] * std::conj(D.c[a][i]));
            double d = Ja - rho[i] * Ul[a];
            acc += d * d;
        }
        return acc / rho[i];
    });
    out.mid_term = mid_term;
    out.form2 = em + grad_term + mid_term;
    out.gap_rel = std::abs(out.form1 - out.form2) /
                  std::max({std::abs(out.form1), std::abs(out.form2), 1e-300});
    return out;
}

SandwichResult sandwich(const ModulatedFields& mf, const AcceptableVectorField& X) {
    SandwichResult r;
    // c1 = min(X^0 - |X_space|), c2 = max(X^0 + |X_space|)
    double c1 = std::numeric_limits<double>::infinity();
    double c2 = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < X.X.size(); ++i) {
        double xs = std::sqrt(X.X.x[0][i] * X.X.x[0][i] + X.X.x[1][i] * X.X.x[1][i] +
                              X.X.x[2][i] * X.X.x[2][i]);
        c1 = std::min(c1, X.X.t[i] - xs);
        c2 = std::max(c2, X.X.t[i] + xs);
    }
    r.c1 = c1;
    r.c2 = c2;
    KineticEmSplit s = kinetic_em_split(mf);
    r.H0 = s.H0();
    r.HX = modulated_energy(mf, X);
    const double slack = 1e-12 * std::max({1.0, std::abs(r.H0), std::abs(r.HX)});
    r.holds = (r.c1 * r.H0 <= r.HX + slack) && (r.HX <= r.c2 * r.H0 + slack);
    return r;
}

ObservableDistances observable_distances(const KgmState& kgm, const RemState& rem, Backend b) {
    ModulatedFields mf = modulated_fields(kgm, rem, b);
    ComplexFourField D = kgm_covariant_derivative(kgm, b);
    FourVectorField Jrem = rem_current(rem);
    const double vol = kgm.grid->cell_volume();

    ObservableDistances d;
    for (int a = 0; a < 4; ++a) {
        d.J_L1 += vol * chunked_sum(kgm.phi.size(), [&](std::size_t i) {
            double Ja = -std::imag(kgm.phi[i] * std::conj(D.c[a][i]));
            double Jr = a == 0 ? Jrem.t[i] : Jrem.x[a - 1][i];
            return std::abs(Ja - Jr);
        });
    }
    KineticEmSplit s = kinetic_em_split(mf);
    d.F_L2 = std::sqrt(2.0 * s.P0);
    d.rho_L1 = vol * chunked_sum(kgm.phi.size(), [&](std::size_t i) {
        return std::abs(std::norm(kgm.phi[i]) - rem.rho[i]);
    });
    d.sqrtrho_L2 = std::sqrt(vol * chunked_sum(kgm.phi.size(), [&](std::size_t i) {
        double g = std::abs(kgm.phi[i]) - std::sqrt(std::max(rem.rho[i], 0.0));
        return g * g;
    }));
    // exact summand inequality at quadrature level
    if (d.F_L2 * d.F_L2 > 2.0 * s.H0())
        throw std::logic_error("observable_distances: EM summand inequality violated");
    return d;
}

ModulatedEnergyReport modulated_report(const KgmState& kgm, const RemState& rem, Backend b) {
    ModulatedFields mf = modulated_fields(kgm, rem, b);
    ModulatedEnergyReport rep;
    rep.t = kgm.t;
    KineticEmSplit s = kinetic_em_split(mf);
    rep.K0 = s.K0;
    rep.P0 = s.P0;
    rep.H0 = s.H0();
    rep.HU = modulated_energy_u(mf, rem);
    rep.dist = observable_distances(kgm, rem, b);
    // sandwich evaluated with X = U of the fluid state
    ScalarField U0 = rem_u0(rem);
    FourVectorField X(kgm.grid, IndexPos::upper);
    X.t = U0;
    X.x = rem.u;
    double sup4 = chunked_max(X.size(), [&](std::size_t i) {
        double xs2 = 0.0;
        for (int a = 0; a < 3; ++a) xs2 += X.x[a][i] * X.x[a][i];
        return std::sqrt(X.t[i] * X.t[i] + xs2);
    });
    double nu = std::min(1.0, 1.0 / std::max(sup4, 1.0));
    SandwichResult sres = sandwich(mf, AcceptableVectorField{std::move(X), nu});
    rep.sandwich_c1 = sres.c1;
    rep.sandwich_c2 = sres.c2;
    rep.sandwich_holds = sres.holds;
    return rep;
}

std::vector<BudgetRow> propagation_budget(const KgmTrajectory& kt, const RemTrajectory& rt,
                                          Backend b, double rho_floor_rel) {
    const auto& ks = kt.snaps;
    const auto& rs = rt.snaps;
    if (ks.size() != rs.size() || ks.size() < 3)
        throw std::invalid_argument("propagation_budget: need >= 3 synchronized snapshots");
    const double dt = kt.dt_out();
    for (std::size_t k = 0; k < ks.size(); ++k) {
        if (std::abs(ks[k].t - (ks[0].t + double(k) * dt)) > 1e-9 ||
            std::abs(rs[k].t - ks[k].t) > 1e-9)
            throw std::invalid_argument("propagation_budget: snapshots not uniformly spaced");
    }
    const std::size_t n = ks.size();
    const double vol = ks.front().grid->cell_volume();

    std::vector<double> HU(n);
    std::vector<ModulatedFields> mfs;
    mfs.reserve(n);
    std::vector<ScalarField> U0s(n);
    for (std::size_t k = 0; k < n; ++k) {
        mfs.push_back(modulated_fields(ks[k], rs[k], b));
        U0s[k] = rem_u0(rs[k]);
        HU[k] = modulated_energy_u(mfs[k], rs[k]);
    }

    std::vector<BudgetRow> rows;
    for (std::size_t k = 1; k + 1 < n; ++k) {
        const RemState& r = rs[k];
        const KgmState& kg = ks[k];
        const ModulatedFields& mf = mfs[k];
        BudgetRow row;
        row.t = kg.t;
        row.HU = HU[k];
        row.dHU_dt = (HU[k + 1] - HU[k - 1]) / (2.0 * dt);

        // grad^a U^b: time derivatives centered across snapshots
        std::array<ScalarField, 4> dtU;
        dtU[0] = ScalarField(kg.grid);
        parallel_for(dtU[0].size(), [&](std::size_t i) {
            dtU[0][i] = (U0s[k + 1][i] - U0s[k - 1][i]) / (2.0 * dt);
        });
        for (int a = 0; a < 3; ++a) {
            dtU[a + 1] = ScalarField(kg.grid);
            parallel_for(dtU[a + 1].size(), [&](std::size_t i) {
                dtU[a + 1][i] = (rs[k + 1].u[a][i] - rs[k - 1].u[a][i]) / (2.0 * dt);
            });
        }
        std::array<std::array<ScalarField, 4>, 3> dxU;  // d_i of U^b
        for (int i3 = 0; i3 < 3; ++i3) {
            dxU[i3][0] = derivative(U0s[k], i3, b);
            for (int a = 0; a < 3; ++a) dxU[i3][a + 1] = derivative(r.u[a], i3, b);
        }

        double supGrad = 0.0, Ch = 0.0;
        row.H1 = -vol * chunked_sum(kg.phi.size(), [&](std::size_t i) {
            double acc = 0.0;
            for (int bta = 0; bta < 4; ++bta) {
                // grad^0 U^b = -d_t U^b ; grad^i U^b = d_i U^b
                acc += mf.h.at(0, bta, i) * (-dtU[bta][i]);
                for (int a = 0; a < 3; ++a) acc += mf.h.at(a + 1, bta, i) * dxU[a][bta][i];
            }
            return acc;
        });
        // direct bound ingredients
        {
            double sg = chunked_max(kg.phi.size(), [&](std::size_t i) {
                double m = 0.0;
                for (int bta = 0; bta < 4; ++bta) {
                    m = std::max(m, std::abs(dtU[bta][i]));
                    for (int a = 0; a < 3; ++a) m = std::max(m, std::abs(dxU[a][bta][i]));
                }
                return m;
            });
            double ch = chunked_max(kg.phi.size(), [&](std::size_t i) {
                double h00 = mf.h.at(0, 0, i);
                if (h00 <= 0.0) return 0.0;
                double sum = 0.0;
                for (int a = 0; a < 4; ++a)
                    for (int c = 0; c < 4; ++c) sum += std::abs(mf.h.at(a, c, i));
                return sum / h00;
            });
            supGrad = sg;
            Ch = ch;
        }

        ScalarField rho(kg.grid);
        parallel_for(rho.size(), [&](std::size_t i) { rho[i] = std::norm(kg.phi[i]); });
        const double floor = rho_floor_rel * norm(rho, NormKind::Linf);
        ComplexFourField D = kgm_covariant_derivative(kg, b);

        // divergence of U: d_t U^0 + div u
        ScalarField divU(kg.grid);
        parallel_for(divU.size(), [&](std::size_t i) {
            divU[i] = dtU[0][i] + dxU[0][1][i] + dxU[1][2][i] + dxU[2][3][i];
        });

        row.H21 = vol * chunked_sum(rho.size(), [&](std::size_t i) {
            if (rho[i] <= floor) return 0.0;
            double Ul[4] = {-U0s[k][i], r.u[0][i], r.u[1][i], r.u[2][i]};
            double Ja[4];
            for (int a = 0; a < 4; ++a) Ja[a] = -std::imag(kg.phi[i] * std::conj(D.c[a][i]));
            // (J_g - U_g rho)(U^g rho - J^g) Minkowski, over 2 rho
            double acc = 0.0;
            for (int a = 0; a < 4; ++a) {
                double sgn = a == 0 ? -1.0 : 1.0;
                double diff = Ja[a] - Ul[a] * rho[i];
                acc += sgn * diff * (Ul[a] * rho[i] - Ja[a]);
            }
            return divU[i] * acc / (2.0 * rho[i]);
        });
        row.H22 = vol * chunked_sum(rho.size(), [&](std::size_t i) {
            if (rho[i] <= floor) return 0.0;
            double Ul[4] = {-U0s[k][i], r.u[0][i], r.u[1][i], r.u[2][i]};
            double Ja[4];
            for (int a = 0; a < 4; ++a) Ja[a] = -std::imag(kg.phi[i] * std::conj(D.c[a][i]));
            double jj = 0.0, uu = 0.0;
            for (int a = 0; a < 4; ++a) {
                double sgn = a == 0 ? -1.0 : 1.0;
                jj += sgn * Ja[a] * Ja[a];
                uu += sgn * Ul[a] * Ul[a];
            }
            return divU[i] * (jj / (2.0 * rho[i]) - uu * rho[i] / 2.0);
        });
        // G = -1/2 eps int divU * Re(conj(phi) pi)
        row.G = -0.5 * kg.eps * vol * chunked_sum(rho.size(), [&](std::size_t i) {
            return divU[i] * std::real(std::conj(kg.phi[i]) * kg.pi[i]);
        });
        row.closure_gap = std::abs(row.dHU_dt - (row.H1 + row.H21 + row.H22));

        // |H1| <= sup|grad U| * C_h * H0 <= sup|grad U| * C_h * HU / c1(U)
        double c1u = std::numeric_limits<double>::infinity();
        for (std::size_t i = 0; i < rho.size(); ++i) {
            double xs = std::sqrt(r.u[0][i] * r.u[0][i] + r.u[1][i] * r.u[1][i] +
                                  r.u[2][i] * r.u[2][i]);
            c1u = std::min(c1u, U0s[k][i] - xs);
        }
        row.H1_bound = supGrad * Ch * std::max(HU[k], 0.0) / std::max(c1u, 1e-300);
        rows.push_back(std::move(row));
    }
    return rows;
}

}  // namespace mkgm
