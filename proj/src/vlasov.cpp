#include "mkgm/vlasov.hpp"

#include <cmath>
#include <stdexcept>

#include "mkgm/norms.hpp"

namespace mkgm {

namespace {

constexpr double kTwoPi = 6.283185307179586476925286766559;

// quadratic and cubic time windows vanishing at 0 and T
struct TimePoly {
    int degree;  // 2 or 3
    double T;
    double val(double t) const {
        if (degree == 2) return 4.0 * t * (T - t) / (T * T);
        return 8.0 * t * (T - t) * (2.0 * t - T) / (T * T * T);
    }
    double der(double t) const {
        if (degree == 2) return 4.0 * (T - 2.0 * t) / (T * T);
        return 8.0 * (-6.0 * t * t + 6.0 * T * t - T * T) / (T * T * T);
    }
};

struct SpaceMode {
    int axis = -1;  // -1: constant 1
    int mode = 1;
    bool use_sin = false;
    double L = 1.0;
    double val(const std::array<double, 3>& x) const {
        if (axis < 0) return 1.0;
        double arg = kTwoPi * mode * x[axis] / L;
        return use_sin ? std::sin(arg) : std::cos(arg);
    }
    double der(const std::array<double, 3>& x, int a) const {
        if (axis != a || axis < 0) return 0.0;
        double k = kTwoPi * mode / L;
        double arg = k * x[axis];
        return use_sin ? k * std::cos(arg) : -k * std::sin(arg);
    }
};

// momentum factor: constant, linear, or quadratic monomial in the covariant slots
struct XiPoly {
    int i = -1, j = -1;  // -1 means absent
    double val(const std::array<double, 4>& xi) const {
        double v = 1.0;
        if (i >= 0) v *= xi[i];
        if (j >= 0) v *= xi[j];
        return v;
    }
    double der(const std::array<double, 4>& xi, int a) const {
        if (i < 0) return 0.0;
        if (j < 0) return i == a ? 1.0 : 0.0;
        double v = 0.0;
        if (i == a) v += xi[j];
        if (j == a) v += xi[i];
        return v;
    }
};

std::vector<int> open_axes(const Grid& g) {
    std::vector<int> ax;
    for (int a = 0; a < 3; ++a)
        if (g.n[a] > 1) ax.push_back(a);
    return ax;
}

SpaceMode mode_for(const Grid& g, int which) {
    auto ax = open_axes(g);
    SpaceMode m;
    if (ax.empty()) return m;  // fully collapsed grid: constants only
    switch (which) {
        case 0: m = SpaceMode{ax[0], 1, false, g.box[ax[0]]}; break;
        case 1: m = SpaceMode{ax[0], 1, true, g.box[ax[0]]}; break;
        case 2: m = SpaceMode{ax[0], 2, false, g.box[ax[0]]}; break;
        default: {
            int a = ax.size() > 1 ? ax[1] : ax[0];
            m = SpaceMode{a, ax.size() > 1 ? 1 : 3, false, g.box[a]};
            break;
        }
    }
    return m;
}

SpacetimeTestFn make_st(const std::string& id, TimePoly p, SpaceMode m) {
    SpacetimeTestFn fn;
    fn.id = id;
    fn.f = [p, m](double t, const std::array<double, 3>& x) { return p.val(t) * m.val(x); };
    fn.df_dt = [p, m](double t, const std::array<double, 3>& x) { return p.der(t) * m.val(x); };
    for (int a = 0; a < 3; ++a)
        fn.df_dx[a] = [p, m, a](double t, const std::array<double, 3>& x) {
            return p.val(t) * m.der(x, a);
        };
    return fn;
}

PhaseTestFn make_ph(const std::string& id, TimePoly p, SpaceMode m, XiPoly q) {
    PhaseTestFn fn;
    fn.id = id;
    fn.f = [p, m, q](double t, const std::array<double, 3>& x, const PhaseTestFn::Args& xi) {
        return p.val(t) * m.val(x) * q.val(xi);
    };
    fn.df_dt = [p, m, q](double t, const std::array<double, 3>& x, const PhaseTestFn::Args& xi) {
        return p.der(t) * m.val(x) * q.val(xi);
    };
    for (int a = 0; a < 3; ++a)
        fn.df_dx[a] = [p, m, q, a](double t, const std::array<double, 3>& x,
                                   const PhaseTestFn::Args& xi) {
            return p.val(t) * m.der(x, a) * q.val(xi);
        };
    for (int a = 0; a < 4; ++a)
        fn.df_dxi[a] = [p, m, q, a](double t, const std::array<double, 3>& x,
                                    const PhaseTestFn::Args& xi) {
            return p.val(t) * m.val(x) * q.der(xi, a);
        };
    return fn;
}

}  // namespace

std::vector<SpacetimeTestFn> default_spacetime_bank(const Grid& g, double T) {
    TimePoly p2{2, T}, p3{3, T};
    SpaceMode one;  // constant
    std::vector<SpacetimeTestFn> bank;
    bank.push_back(make_st("st0_p2", p2, one));
    bank.push_back(make_st("st1_p2_cos", p2, mode_for(g, 0)));
    bank.push_back(make_st("st2_p2_sin", p2, mode_for(g, 1)));
    bank.push_back(make_st("st3_p3_cos", p3, mode_for(g, 0)));
    bank.push_back(make_st("st4_p3_sin", p3, mode_for(g, 1)));
    bank.push_back(make_st("st5_p2_cos2", p2, mode_for(g, 2)));
    bank.push_back(make_st("st6_p3_alt", p3, mode_for(g, 3)));
    bank.push_back(make_st("st7_p2_alt", p2, mode_for(g, 3)));
    return bank;
}

std::vector<PhaseTestFn> default_phase_bank(const Grid& g, double T) {
    TimePoly p2{2, T}, p3{3, T};
    SpaceMode one;
    std::vector<PhaseTestFn> bank;
    bank.push_back(make_ph("ph0_p2", p2, one, XiPoly{}));
    bank.push_back(make_ph("ph1_p2_cos", p2, mode_for(g, 0), XiPoly{}));
    bank.push_back(make_ph("ph2_p2_xi1", p2, one, XiPoly{1, -1}));
    bank.push_back(make_ph("ph3_p3_cos_xi1", p3, mode_for(g, 0), XiPoly{1, -1}));
    bank.push_back(make_ph("ph4_p2_xi0", p2, one, XiPoly{0, -1}));
    bank.push_back(make_ph("ph5_p2_cos_xi00", p2, mode_for(g, 0), XiPoly{0, 0}));
    bank.push_back(make_ph("ph6_p3_sin_xi2", p3, mode_for(g, 1), XiPoly{2, -1}));
    bank.push_back(make_ph("ph7_p2_xi11", p2, one, XiPoly{1, 1}));
    return bank;
}

double bank_derivative_check(const Grid& g, double T) {
    auto st = default_spacetime_bank(g, T);
    auto ph = default_phase_bank(g, T);
    const double h = 1e-6 * std::max(T, 1.0);
    double worst = 0.0;
    std::array<double, 3> x{0.31 * g.box[0], 0.47 * g.box[1], 0.63 * g.box[2]};
    std::array<double, 4> xi{-1.2, 0.3, -0.1, 0.2};
    const double t0 = 0.37 * T;
    for (const auto& fn : st) {
        double fd = (fn.f(t0 + h, x) - fn.f(t0 - h, x)) / (2.0 * h);
        worst = std::max(worst, std::abs(fd - fn.df_dt(t0, x)));
        for (int a = 0; a < 3; ++a) {
            auto xp = x, xm = x;
            double hx = 1e-6 * g.box[a];
            xp[a] += hx;
            xm[a] -= hx;
            double fdx = (fn.f(t0, xp) - fn.f(t0, xm)) / (2.0 * hx);
            worst = std::max(worst, std::abs(fdx - fn.df_dx[a](t0, x)));
        }
    }
    for (const auto& fn : ph) {
        double fd = (fn.f(t0 + h, x, xi) - fn.f(t0 - h, x, xi)) / (2.0 * h);
        worst = std::max(worst, std::abs(fd - fn.df_dt(t0, x, xi)));
        for (int a = 0; a < 4; ++a) {
            auto xp = xi, xm = xi;
            xp[a] += 1e-6;
            xm[a] -= 1e-6;
            double fdx = (fn.f(t0, x, xp) - fn.f(t0, x, xm)) / (2e-6);
            worst = std::max(worst, std::abs(fdx - fn.df_dxi[a](t0, x, xi)));
        }
    }
    return worst;
}

namespace {

template <class PerSnapshot>
double trapezoid_over_snaps(const RemTrajectory& traj, PerSnapshot&& term) {
    const std::size_t n = traj.snaps.size();
    const double dt = traj.dt_out();
    double acc = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
        double w = (k == 0 || k + 1 == n) ? 0.5 * dt : dt;
        acc += w * term(k);
    }
    return acc;
}

}  // namespace

double weak_maxwell_residual(const RemTrajectory& traj, const SpacetimeTestFn& phi, Backend b) {
    const auto& sn = traj.snaps;
    if (sn.size() < 2) throw std::invalid_argument("weak_maxwell_residual: need >= 2 snapshots");
    const Grid& g = *sn.front().grid;
    const double dt = traj.dt_out();
    const double vol = g.cell_volume();
    const int n1 = g.n[1], n2 = g.n[2];

    double worst = 0.0;
    for (int beta = 0; beta < 4; ++beta) {
        double total = trapezoid_over_snaps(traj, [&](std::size_t k) {
            const RemState& s = sn[k];
            ScalarField lhs_minus_src(s.grid);
            if (beta == 0) {
                ScalarField divE = divergence(s.E, b);
                ScalarField U0 = rem_u0(s);
                ScalarField q(s.grid);
                parallel_for(q.size(), [&](std::size_t i) { q[i] = U0[i] * s.rho[i]; });
                const double qbar = mean(q);
                parallel_for(lhs_minus_src.size(), [&](std::size_t i) {
                    lhs_minus_src[i] = divE[i] - (q[i] - qbar);
                });
            } else {
                const int a = beta - 1;
                VectorField3 cb = curl(s.B, b);
                const std::size_t kp = k + 1 < sn.size() ? k + 1 : k;
                const std::size_t km = k > 0 ? k - 1 : k;
                const double denom = (kp - km) * dt;
                parallel_for(lhs_minus_src.size(), [&](std::size_t i) {
                    double dtE = denom > 0.0 ? (sn[kp].E[a][i] - sn[km].E[a][i]) / denom : 0.0;
                    lhs_minus_src[i] = (-dtE + cb[a][i]) - s.u[a][i] * s.rho[i];
                });
            }
            const double t = s.t;
            return vol * chunked_sum(lhs_minus_src.size(), [&](std::size_t i) {
                int iz = int(i % n2);
                int iy = int((i / n2) % n1);
                int ix = int(i / (std::size_t(n1) * n2));
                std::array<double, 3> x{g.coord(0, ix), g.coord(1, iy), g.coord(2, iz)};
                return lhs_minus_src[i] * phi.f(t, x);
            });
        });
        worst = std::max(worst, std::abs(total));
    }
    return worst;
}

double weak_vlasov_residual(const RemTrajectory& traj, const PhaseTestFn& a, Backend) {
    const auto& sn = traj.snaps;
    if (sn.size() < 2) throw std::invalid_argument("weak_vlasov_residual: need >= 2 snapshots");
    for (int c = 0; c < 4; ++c)
        if (!a.df_dxi[c]) throw std::invalid_argument("weak_vlasov_residual: missing xi derivative");
    const Grid& g = *sn.front().grid;
    const double vol = g.cell_volume();
    const int n1 = g.n[1], n2 = g.n[2];

    double total = trapezoid_over_snaps(traj, [&](std::size_t k) {
        const RemState& s = sn[k];
        ScalarField U0 = rem_u0(s);
        const double t = s.t;
        return vol * chunked_sum(s.rho.size(), [&](std::size_t i) {
            if (s.rho[i] == 0.0) return 0.0;
            int iz = int(i % n2);
            int iy = int((i / n2) % n1);
            int ix = int(i / (std::size_t(n1) * n2));
            std::array<double, 3> x{g.coord(0, ix), g.coord(1, iy), g.coord(2, iz)};
            PhaseTestFn::Args xi{-U0[i], s.u[0][i], s.u[1][i], s.u[2][i]};
            // U^a d_a a
            double stream = U0[i] * a.df_dt(t, x, xi);
            for (int c = 0; c < 3; ++c) stream += s.u[c][i] * a.df_dx[c](t, x, xi);
            // K_b = F_{ab} U^a (covariant force components)
            double K0 = -(s.E[0][i] * s.u[0][i] + s.E[1][i] * s.u[1][i] + s.E[2][i] * s.u[2][i]);
            double K[3];
            K[0] = s.E[0][i] * U0[i] + (s.u[1][i] * s.B[2][i] - s.u[2][i] * s.B[1][i]);
            K[1] = s.E[1][i] * U0[i] + (s.u[2][i] * s.B[0][i] - s.u[0][i] * s.B[2][i]);
            K[2] = s.E[2][i] * U0[i] + (s.u[0][i] * s.B[1][i] - s.u[1][i] * s.B[0][i]);
            double force = K0 * a.df_dxi[0](t, x, xi);
            for (int c = 0; c < 3; ++c) force += K[c] * a.df_dxi[c + 1](t, x, xi);
            return s.rho[i] * (stream + force);
        });
    });
    return std::abs(total);
}

std::vector<MomentsRow> moments(const RemTrajectory& traj) {
    std::vector<MomentsRow> out;
    out.reserve(traj.snaps.size());
    for (const auto& s : traj.snaps) {
        MomentsRow row{s.t, rem_current(s), s.rho};
        out.push_back(std::move(row));
    }
    return out;
}

double mass_shell_residual(const RemTrajectory& traj, double rho_floor_rel) {
    double worst = 0.0;
    for (const auto& s : traj.snaps) {
        ScalarField U0 = rem_u0(s);
        const double floor = rho_floor_rel * norm(s.rho, NormKind::Linf);
        worst = std::max(worst, chunked_max(s.rho.size(), [&](std::size_t i) {
            if (s.rho[i] <= floor) return 0.0;
            double uu = s.u[0][i] * s.u[0][i] + s.u[1][i] * s.u[1][i] + s.u[2][i] * s.u[2][i];
            return std::abs(-U0[i] * U0[i] + uu + 1.0);
        }));
    }
    return worst;
}

}  // namespace mkgm
