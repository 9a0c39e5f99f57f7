// Acceptance suite: runs every gate experiment at its pinned tolerance and
// prints one PASS/FAIL line per criterion. Exit code = number of failures.
//
// Usage: mkgm_acceptance [configs_dir]

#include <chrono>
#include <cmath>
#include <cstdarg>
#include <cstdio>
#include <string>
#include <vector>

#include "mkgm/harness.hpp"
#include "mkgm/norms.hpp"
#include "mkgm/vlasov.hpp"
#include "mkgm/wkb.hpp"

using namespace mkgm;
using clk = std::chrono::steady_clock;

namespace {

constexpr double kTwoPi = 6.283185307179586476925286766559;

int g_failures = 0;

void report(int num, bool ok, const char* what, const std::string& detail) {
    std::printf("%s  %2d  %-20s %s\n", ok ? "PASS" : "FAIL", num, what, detail.c_str());
    std::fflush(stdout);
    if (!ok) ++g_failures;
}

std::string fmt(const char* f, ...) {
    char buf[512];
    va_list ap;
    va_start(ap, f);
    std::vsnprintf(buf, sizeof buf, f, ap);
    va_end(ap);
    return buf;
}

double seconds_since(clk::time_point t0) {
    return std::chrono::duration<double>(clk::now() - t0).count();
}

// Simpson quadrature of (d_x sqrt(rho))^2/2 for rho = base + amp sin(2 pi x):
// the analytic preparation target for a rest-frame sine profile.
double oracle_half_grad_sq(double base, double amp) {
    const int n = 200000;
    const double h = 1.0 / n;
    auto f = [&](double x) {
        double rho = base + amp * std::sin(kTwoPi * x);
        double d = amp * kTwoPi * std::cos(kTwoPi * x) / (2.0 * std::sqrt(rho));
        return 0.5 * d * d;
    };
    double acc = f(0.0) + f(1.0);
    for (int i = 1; i < n; ++i) acc += (i % 2 ? 4.0 : 2.0) * f(i * h);
    return acc * h / 3.0;
}

struct SweepOutcome {
    SweepReport rep;
    double wall = 0.0;
};

SweepOutcome run_rate_sweep(const std::string& cfg_dir) {
    RunConfig cfg = load_config(cfg_dir + "/sweep_sine.cfg");
    auto t0 = clk::now();
    SweepOutcome out;
    out.rep = run_sweep(cfg);
    out.wall = seconds_since(t0);
    cfg.out_dir = "out/acceptance_sweep";
    write_sweep_outputs(cfg, out.rep, out.wall);
    return out;
}

// -------------------------------------------------- criteria 1-3 (the sweep)

void criteria_sweep(const SweepOutcome& out) {
    const SweepReport& rep = out.rep;
    bool all_ok = true;
    for (const auto& r : rep.rows) all_ok = all_ok && r.status == "ok";

    bool c1 = all_ok && rep.slope_available && rep.rate.slope >= 1.6 && rep.rate.slope <= 2.4 &&
              out.wall < 900.0;
    report(1, c1, "propagation rate",
           rep.slope_available
               ? fmt("slope=%.3f in [1.6,2.4], sweep wall=%.1fs", rep.rate.slope, out.wall)
               : "slope unavailable");

    bool bound_ok = all_ok, monotone = all_ok;
    for (const auto& r : rep.rows) bound_ok = bound_ok && r.coercivity_bound_ok;
    for (std::size_t i = 1; i < rep.rows.size() && monotone; ++i) {
        const auto& a = rep.rows[i - 1].final_dist;
        const auto& b = rep.rows[i].final_dist;
        monotone = b.J_L1 < a.J_L1 && b.F_L2 < a.F_L2 && b.rho_L1 < a.rho_L1 &&
                   b.sqrtrho_L2 < a.sqrtrho_L2;
    }
    report(2, bound_ok && monotone, "coercivity bound",
           fmt("F^2<=2H0 %s at every output; final distances monotone: %s",
               bound_ok ? "held" : "VIOLATED", monotone ? "yes" : "no"));

    const double target = oracle_half_grad_sq(1.0, 0.5);
    bool c3 = all_ok;
    double worst_rel = 0.0, worst_gap = 0.0;
    for (const auto& r : rep.rows) {
        double rel = std::abs(r.prep.H0_over_eps2 - target) / target;
        worst_rel = std::max(worst_rel, rel);
        worst_gap = std::max(worst_gap, r.prep.sqrtrho_gap_L2);
    }
    c3 = c3 && worst_rel <= 0.02 && worst_gap <= 1e-12;
    report(3, c3, "initial preparation",
           fmt("max |H0/eps^2 - %.6f|/target = %.4f (<=0.02), sqrt-rho gap %.1e (<=1e-12)",
               target, worst_rel, worst_gap));
}

// ------------------------------------------------------------- criterion 4

void criterion_conservation(const std::string& cfg_dir) {
    RunConfig cfg = load_config(cfg_dir + "/conservation.cfg");
    GridPtr g = make_grid(cfg.grid_n, cfg.box);
    VectorField3 u = make_velocity_profile(cfg.u_profile, g);
    ScalarField rho = make_density_profile(cfg.rho_profile, g);
    PairConfig pc;
    pc.backend = cfg.backend;
    MatchedPair pair = make_matched_pair(u, rho, {cfg.eps_list.front()}, pc);

    std::vector<double> dts{0.004, 0.002, 0.001};
    std::vector<double> de_k, dq_k, de_r, dq_r;
    for (double dt : dts) {
        KgmTrajectory kt = kgm_evolve(pair.kgm_family.front(), cfg.horizon, dt,
                                      cfg.kgm_options(), std::max(1, int(0.04 / dt)));
        RemTrajectory rt = rem_evolve(pair.rem_data, cfg.horizon, dt, cfg.rem_options(),
                                      std::max(1, int(0.04 / dt)));
        double e0k = 0, q0k = 0, dek = 0, dqk = 0;
        for (std::size_t i = 0; i < kt.snaps.size(); ++i) {
            KgmObservables o = kgm_observables(kt.snaps[i], cfg.backend);
            if (i == 0) {
                e0k = o.energy;
                q0k = o.charge;
            }
            dek = std::max(dek, std::abs(o.energy - e0k));
            dqk = std::max(dqk, std::abs(o.charge - q0k));
        }
        double e0r = 0, q0r = 0, der = 0, dqr = 0;
        for (std::size_t i = 0; i < rt.snaps.size(); ++i) {
            RemObservables o = rem_observables(rt.snaps[i], cfg.backend);
            if (i == 0) {
                e0r = o.energy;
                q0r = o.charge;
            }
            der = std::max(der, std::abs(o.energy - e0r));
            dqr = std::max(dqr, std::abs(o.charge - q0r));
        }
        de_k.push_back(dek);
        dq_k.push_back(dqk);
        de_r.push_back(der);
        dq_r.push_back(dqr);
    }
    auto judge = [&](const std::vector<double>& drifts, const char* name, std::string& out) {
        double worst = 0.0;
        for (double d : drifts) worst = std::max(worst, d);
        if (worst <= 1e-12) {
            out += fmt("%s exact(%.0e) ", name, worst);
            return true;
        }
        RateFit fit = fit_rate(dts, drifts);
        out += fmt("%s order=%.2f ", name, fit.slope);
        return fit.slope >= 1.7 && fit.slope <= 2.3;
    };
    std::string detail;
    bool ok = true;
    ok = judge(de_k, "kgm-E", detail) && ok;
    ok = judge(dq_k, "kgm-Q", detail) && ok;
    ok = judge(de_r, "rem-E", detail) && ok;
    ok = judge(dq_r, "rem-Q", detail) && ok;
    report(4, ok, "conservation orders", detail + "(window [1.7,2.3] or exact)");
}

// ------------------------------------------------------------- criterion 5

struct ConstraintRun {
    double init_gauss_kgm = 0.0, max_gauss_kgm = 0.0;
    double init_gauss_rem = 0.0, max_gauss_rem = 0.0;
    double init_divB = 0.0, max_divB = 0.0;
};

ConstraintRun constraint_run(int n, const RunConfig& cfg) {
    GridPtr g = make_grid({n, n, 1}, cfg.box);
    const double a = 0.3, bamp = 0.05, eps = cfg.eps_list.front();
    ScalarField rho(g);
    VectorField3 E(g), B(g);
    ComplexField phi(g), pi(g);
    for (int ix = 0; ix < n; ++ix)
        for (int iy = 0; iy < n; ++iy) {
            double x = g->coord(0, ix), y = g->coord(1, iy);
            double r = 1.0 + a * std::sin(kTwoPi * x);
            rho.at(ix, iy, 0) = r;
            E[0].at(ix, iy, 0) = -a * std::cos(kTwoPi * x) / kTwoPi;
            // stream function sin(2 pi x) sin(4 pi y): solenoidal in the
            // continuum, O(dx^2) discrete divergence (unequal sinc factors)
            B[0].at(ix, iy, 0) = bamp * 2.0 * kTwoPi * std::sin(kTwoPi * x) * std::cos(2.0 * kTwoPi * y);
            B[1].at(ix, iy, 0) = -bamp * kTwoPi * std::cos(kTwoPi * x) * std::sin(2.0 * kTwoPi * y);
            phi.at(ix, iy, 0) = std::sqrt(r);
            pi.at(ix, iy, 0) = cplx(0.0, -std::sqrt(r));
        }
    const double dt_raw = 0.4 / n;
    long long steps = (long long)std::ceil(cfg.horizon / dt_raw);
    const double dt = cfg.horizon / double(steps);
    int stride = std::max(1, int(steps / 8));

    ConstraintRun out;
    KgmState ks{g, std::move(phi), std::move(pi), VectorField3(g), E, eps, 0.0};
    KgmTrajectory kt = kgm_evolve(ks, cfg.horizon, dt, cfg.kgm_options(), stride);
    for (std::size_t i = 0; i < kt.snaps.size(); ++i) {
        double r = kgm_observables(kt.snaps[i], cfg.backend).gauss_residual;
        if (i == 0) out.init_gauss_kgm = r;
        out.max_gauss_kgm = std::max(out.max_gauss_kgm, r);
    }
    RemState rs{g, VectorField3(g), rho, E, B, 0.0};
    RemTrajectory rt = rem_evolve(rs, cfg.horizon, dt, cfg.rem_options(), stride);
    for (std::size_t i = 0; i < rt.snaps.size(); ++i) {
        RemObservables o = rem_observables(rt.snaps[i], cfg.backend);
        if (i == 0) {
            out.init_gauss_rem = o.gauss_residual;
            out.init_divB = o.divB_residual;
        }
        out.max_gauss_rem = std::max(out.max_gauss_rem, o.gauss_residual);
        out.max_divB = std::max(out.max_divB, o.divB_residual);
    }
    return out;
}

void criterion_constraints(const std::string& cfg_dir) {
    RunConfig cfg = load_config(cfg_dir + "/constraints.cfg");
    ConstraintRun ref = constraint_run(cfg.grid_n[0], cfg);
    bool within = ref.max_gauss_kgm <= 10.0 * ref.init_gauss_kgm &&
                  ref.max_gauss_rem <= 10.0 * ref.init_gauss_rem &&
                  ref.max_divB <= 10.0 * ref.init_divB;

    std::vector<int> ns{32, 48, 64};
    std::vector<double> dxs, gk, gr, db;
    for (int n : ns) {
        ConstraintRun r = constraint_run(n, cfg);
        dxs.push_back(1.0 / n);
        gk.push_back(r.max_gauss_kgm);
        gr.push_back(r.max_gauss_rem);
        db.push_back(r.max_divB);
    }
    RateFit fk = fit_rate(dxs, gk), fr = fit_rate(dxs, gr), fb = fit_rate(dxs, db);
    bool orders = fk.slope >= 1.5 && fr.slope >= 1.5 && fb.slope >= 1.5;
    report(5, within && orders, "constraint propagation",
           fmt("growth x%.2f/%.2f/%.2f (<=10), refinement orders %.2f/%.2f/%.2f (>=1.5)",
               ref.max_gauss_kgm / ref.init_gauss_kgm, ref.max_gauss_rem / ref.init_gauss_rem,
               ref.max_divB / ref.init_divB, fk.slope, fr.slope, fb.slope));
}

// ------------------------------------------------------------- criterion 6

void criterion_gauge(const std::string& cfg_dir) {
    RunConfig cfg = load_config(cfg_dir + "/gauge.cfg");
    GridPtr g = make_grid(cfg.grid_n, cfg.box);
    ScalarField rho = make_density_profile(cfg.rho_profile, g);
    PairConfig pc;
    pc.backend = cfg.backend;
    MatchedPair pair = make_matched_pair(make_velocity_profile(cfg.u_profile, g), rho,
                                         {cfg.eps_list.front()}, pc);
    KgmState s = pair.kgm_family.front();

    std::mt19937_64 rng(cfg.seed);
    ScalarField chi = random_smooth_scalar(g, rng, 2, 0.4);
    GaugePair gp = gauge_transform(s.phi, s.A, chi, s.eps, cfg.backend);
    KgmState st = s;
    st.phi = gp.phi;
    st.A = gp.A;
    parallel_for(st.pi.size(), [&](std::size_t i) {
        st.pi[i] = cplx(std::cos(chi[i]), -std::sin(chi[i])) * s.pi[i];
    });

    long long nsteps = 0;
    const double dt = pick_dt(cfg, *g, cfg.eps_list.front(), nsteps);
    KgmTrajectory ta = kgm_evolve(s, cfg.horizon, dt, cfg.kgm_options(), cfg.stride);
    KgmTrajectory tb = kgm_evolve(st, cfg.horizon, dt, cfg.kgm_options(), cfg.stride);
    double worst = 0.0;
    for (std::size_t k = 0; k < ta.snaps.size(); ++k) {
        KgmObservables oa = kgm_observables(ta.snaps[k], cfg.backend);
        KgmObservables ob = kgm_observables(tb.snaps[k], cfg.backend);
        worst = std::max(worst, std::abs(oa.energy - ob.energy) / std::abs(oa.energy));
        worst = std::max(worst,
                         std::abs(oa.charge - ob.charge) / std::max(std::abs(oa.charge), 1.0));
        double rho_scale = norm(oa.rho, NormKind::Linf);
        worst = std::max(worst, chunked_max(oa.rho.size(), [&](std::size_t i) {
                             return std::abs(oa.rho[i] - ob.rho[i]);
                         }) / rho_scale);
        VectorField3 Ba = kgm_magnetic(ta.snaps[k], cfg.backend);
        VectorField3 Bb = kgm_magnetic(tb.snaps[k], cfg.backend);
        double bscale = std::max({norm(Ba, NormKind::Linf), 1e-6});
        worst = std::max(worst, chunked_max(Ba.size(), [&](std::size_t i) {
                             double m = 0.0;
                             for (int a = 0; a < 3; ++a)
                                 m = std::max(m, std::abs(Ba[a][i] - Bb[a][i]));
                             return m;
                         }) / bscale);
        double jscale = 0.0;
        for (int a = 0; a < 4; ++a)
            jscale = std::max(jscale, a == 0 ? norm(oa.J.t, NormKind::Linf)
                                             : norm(oa.J.x[a - 1], NormKind::Linf));
        worst = std::max(worst, chunked_max(oa.J.size(), [&](std::size_t i) {
                             double m = std::abs(oa.J.t[i] - ob.J.t[i]);
                             for (int a = 0; a < 3; ++a)
                                 m = std::max(m, std::abs(oa.J.x[a][i] - ob.J.x[a][i]));
                             return m;
                         }) / jscale);
        worst = std::max(worst, std::abs(oa.gauss_residual - ob.gauss_residual) /
                                    std::max(1.0, oa.gauss_residual));
    }
    report(6, worst <= 1e-10, "gauge invariance",
           fmt("max relative observable gap %.2e (<=1e-10) over %zu output times", worst,
               ta.snaps.size()));
}

// ------------------------------------------------------------- criterion 7

IdentityReport criterion_identities(const std::string& cfg_dir) {
    RunConfig cfg = load_config(cfg_dir + "/identities.cfg");
    auto t0 = clk::now();
    GridPtr g = make_grid(cfg.grid_n, cfg.box);
    IdentityReport rep = check_identities(g, cfg.seed, 20, cfg.backend);
    double wall = seconds_since(t0);
    bool ok = rep.max_split_r1 <= 1e-9 && rep.max_split_r2 <= 1e-9 &&
              rep.max_decomp_gap <= 1e-10 && rep.max_h00_gap <= 1e-9 && wall < 60.0;
    report(7, ok, "identity suite",
           fmt("split %.1e/%.1e (<=1e-9), h+I gap %.1e (<=1e-10), h00 gap %.1e (<=1e-9), "
               "%.1fs (<60s)",
               rep.max_split_r1, rep.max_split_r2, rep.max_decomp_gap, rep.max_h00_gap, wall));
    return rep;
}

// ------------------------------------------------------------- criterion 8

void criterion_wkb_rates(const std::string& cfg_dir) {
    RunConfig cfg = load_config(cfg_dir + "/wkbrates.cfg");
    GridPtr g = make_grid(cfg.grid_n, cfg.box);
    ComplexField psi(g);
    for (int ix = 0; ix < g->n[0]; ++ix) {
        double x = g->coord(0, ix);
        for (int iy = 0; iy < g->n[1]; ++iy)
            for (int iz = 0; iz < g->n[2]; ++iz)
                psi.at(ix, iy, iz) =
                    cplx(1.0 + 0.3 * std::sin(kTwoPi * x), 0.2 * std::cos(kTwoPi * x));
    }
    std::vector<double> kg, mx;
    for (double e : cfg.eps_list) {
        WkbAnsatz an = rest_frame_ansatz(psi, e, cfg.backend);
        WkbResiduals r = wkb_residual(an, e, cfg.backend);
        kg.push_back(r.kg_res);
        mx.push_back(r.maxwell_res);
    }
    RateFit fk = fit_rate(cfg.eps_list, kg);
    RateFit fm = fit_rate(cfg.eps_list, mx);
    bool ok = std::abs(fk.slope - 2.0) <= 0.3 && std::abs(fm.slope - 1.0) <= 0.3;
    report(8, ok, "wkb residual rates",
           fmt("matter slope %.3f (2.0+-0.3), field slope %.3f (1.0+-0.3)", fk.slope, fm.slope));
}

// ------------------------------------------------------------- criterion 9

void criterion_vlasov(const std::string& cfg_dir) {
    RunConfig cfg = load_config(cfg_dir + "/vlasov.cfg");

    // exact static solution
    GridPtr gs = make_grid({24, 1, 1}, cfg.box);
    ScalarField rbar(gs);
    rbar.fill(1.2);
    RemState stat{gs, VectorField3(gs), std::move(rbar), VectorField3(gs), VectorField3(gs), 0.0};
    RemTrajectory straj = rem_evolve(stat, cfg.horizon, 0.01, cfg.rem_options(), 4);
    double static_worst = 0.0;
    for (const auto& fn : default_spacetime_bank(*gs, cfg.horizon))
        static_worst = std::max(static_worst, weak_maxwell_residual(straj, fn, cfg.backend));
    for (const auto& fn : default_phase_bank(*gs, cfg.horizon))
        static_worst = std::max(static_worst, weak_vlasov_residual(straj, fn, cfg.backend));

    // joint refinement ladder on an evolved run
    auto worst_of = [&](int n) {
        GridPtr g = make_grid({n, 1, 1}, cfg.box);
        MatchedPair pair = make_matched_pair(make_velocity_profile(cfg.u_profile, g),
                                             make_density_profile(cfg.rho_profile, g),
                                             {cfg.eps_list.front()}, PairConfig{cfg.backend});
        const double dt = cfg.horizon / (2.0 * n);
        RemTrajectory traj = rem_evolve(pair.rem_data, cfg.horizon, dt, cfg.rem_options(), 4);
        double w = 0.0;
        for (const auto& fn : default_spacetime_bank(*g, cfg.horizon))
            w = std::max(w, weak_maxwell_residual(traj, fn, cfg.backend));
        for (const auto& fn : default_phase_bank(*g, cfg.horizon))
            w = std::max(w, weak_vlasov_residual(traj, fn, cfg.backend));
        return w;
    };
    std::vector<int> ns{24, 48, 96};
    std::vector<double> hs, ws;
    for (int n : ns) {
        hs.push_back(1.0 / n);
        ws.push_back(worst_of(n));
    }
    RateFit fit = fit_rate(hs, ws);

    // moments match bitwise on the coarse run
    GridPtr g = make_grid({24, 1, 1}, cfg.box);
    MatchedPair pair = make_matched_pair(make_velocity_profile(cfg.u_profile, g),
                                         make_density_profile(cfg.rho_profile, g),
                                         {cfg.eps_list.front()}, PairConfig{cfg.backend});
    RemTrajectory traj = rem_evolve(pair.rem_data, cfg.horizon, cfg.horizon / 48.0,
                                    cfg.rem_options(), 8);
    bool bitwise = true;
    auto rows = moments(traj);
    for (std::size_t k = 0; k < rows.size(); ++k) {
        FourVectorField J = rem_current(traj.snaps[k]);
        for (std::size_t i = 0; i < J.size() && bitwise; ++i) {
            bitwise = rows[k].J.t[i] == J.t[i] && rows[k].rho[i] == traj.snaps[k].rho[i];
            for (int a = 0; a < 3; ++a) bitwise = bitwise && rows[k].J.x[a][i] == J.x[a][i];
        }
    }
    bool ok = static_worst <= 1e-10 && fit.slope >= 1.5 && bitwise;
    report(9, ok, "weak formulation",
           fmt("static residual %.1e (<=1e-10), refinement order %.2f (>=1.5), moments %s",
               static_worst, fit.slope, bitwise ? "bitwise" : "MISMATCH"));
}

// ------------------------------------------------------------ criterion 10

void criterion_elliptic(const IdentityReport& rep) {
    report(10, rep.max_elliptic_err <= 1e-12, "elliptic spectrum",
           fmt("max cellwise eigenvalue error %.2e (<=1e-12) over %d random states",
               rep.max_elliptic_err, rep.states));
}

// ------------------------------------------------------------ criterion 11

void criterion_sandwich(const std::string& cfg_dir) {
    RunConfig cfg = load_config(cfg_dir + "/budget.cfg");
    GridPtr g = make_grid(cfg.grid_n, cfg.box);
    MatchedPair pair = make_matched_pair(make_velocity_profile(cfg.u_profile, g),
                                         make_density_profile(cfg.rho_profile, g),
                                         {cfg.eps_list.front()}, PairConfig{cfg.backend});
    long long nsteps = 0;
    const double dt = pick_dt(cfg, *g, cfg.eps_list.front(), nsteps);
    KgmTrajectory kt = kgm_evolve(pair.kgm_family.front(), cfg.horizon, dt, cfg.kgm_options(),
                                  cfg.stride);
    RemTrajectory rt = rem_evolve(pair.rem_data, cfg.horizon, dt, cfg.rem_options(), cfg.stride);

    // five sampled frames: the time axis, two constant boosts, one spatially
    // varying field, and the fluid velocity of each snapshot
    auto boost = [&](double bx, double by, double bz, double lift) {
        FourVectorField X(g, IndexPos::upper);
        double x0 = std::sqrt(1.0 + bx * bx + by * by + bz * bz) + lift;
        X.t.fill(x0);
        X.x[0].fill(bx);
        X.x[1].fill(by);
        X.x[2].fill(bz);
        double nu = std::min(1.0, 1.0 / std::sqrt(x0 * x0 + bx * bx + by * by + bz * bz));
        return make_acceptable(std::move(X), nu);
    };
    FourVectorField Xv(g, IndexPos::upper);
    for (int ix = 0; ix < g->n[0]; ++ix) {
        double w = 0.3 * std::sin(kTwoPi * g->coord(0, ix));
        for (int iy = 0; iy < g->n[1]; ++iy)
            for (int iz = 0; iz < g->n[2]; ++iz) {
                Xv.t.at(ix, iy, iz) = 1.5 + w;
                Xv.x[0].at(ix, iy, iz) = 0.4 * w;
            }
    }
    std::vector<AcceptableVectorField> frames;
    frames.push_back(time_axis_field(g));
    frames.push_back(boost(0.3, 0.0, 0.0, 0.0));
    frames.push_back(boost(-0.2, 0.25, 0.1, 0.1));
    frames.push_back(make_acceptable(std::move(Xv), 0.45));

    bool ok = true;
    int checked = 0;
    for (std::size_t k = 0; k < kt.snaps.size(); ++k) {
        ModulatedFields mf = modulated_fields(kt.snaps[k], rt.snaps[k], cfg.backend);
        for (const auto& X : frames) {
            SandwichResult s = sandwich(mf, X);
            ok = ok && s.holds;
            ++checked;
        }
        // fifth frame: the fluid four-velocity itself
        ScalarField U0 = rem_u0(rt.snaps[k]);
        FourVectorField Xu(g, IndexPos::upper);
        Xu.t = U0;
        Xu.x = rt.snaps[k].u;
        double sup4 = chunked_max(Xu.size(), [&](std::size_t i) {
            double xs2 = 0.0;
            for (int a = 0; a < 3; ++a) xs2 += Xu.x[a][i] * Xu.x[a][i];
            return std::sqrt(Xu.t[i] * Xu.t[i] + xs2);
        });
        SandwichResult s = sandwich(mf, make_acceptable(std::move(Xu),
                                                        std::min(1.0, 1.0 / sup4)));
        ok = ok && s.holds;
        ++checked;
    }
    report(11, ok, "frame sandwich",
           fmt("c1 H0 <= H_X <= c2 H0 held in %d frame/snapshot combinations", checked));
}

// ------------------------------------------------------------ criterion 12

void criterion_budget(const std::string& cfg_dir) {
    RunConfig cfg = load_config(cfg_dir + "/budget.cfg");
    auto gap_of = [&](int n) {
        GridPtr g = make_grid({n, 1, 1}, cfg.box);
        MatchedPair pair = make_matched_pair(make_velocity_profile(cfg.u_profile, g),
                                             make_density_profile(cfg.rho_profile, g),
                                             {cfg.eps_list.front()}, PairConfig{cfg.backend});
        const double dt = 0.32 / n;
        const int stride = 4;
        KgmTrajectory kt = kgm_evolve(pair.kgm_family.front(), cfg.horizon, dt,
                                      cfg.kgm_options(), stride);
        RemTrajectory rt = rem_evolve(pair.rem_data, cfg.horizon, dt, cfg.rem_options(), stride);
        auto rows = propagation_budget(kt, rt, cfg.backend);
        double worst = 0.0;
        for (const auto& r : rows) worst = std::max(worst, r.closure_gap);
        return worst;
    };
    std::vector<int> ns{48, 64, 96};
    std::vector<double> hs, gaps;
    for (int n : ns) {
        hs.push_back(1.0 / n);
        gaps.push_back(gap_of(n));
    }
    RateFit fit = fit_rate(hs, gaps);
    bool ok = fit.slope >= 1.5 && fit.slope <= 2.6;
    report(12, ok, "budget closure",
           fmt("|dH_U/dt - (H1+H2)| refinement order %.2f in [1.5,2.6]", fit.slope));
}

void smoke_3d(const std::string& cfg_dir) {
    RunConfig cfg = load_config(cfg_dir + "/smoke3d.cfg");
    SweepReport rep = run_sweep(cfg);
    bool ok = rep.rows.size() == 1 && rep.rows.front().status == "ok" &&
              rep.rows.front().coercivity_bound_ok;
    std::printf("%s   -  %-20s %s\n", ok ? "PASS" : "FAIL", "3d smoke run",
                ok ? fmt("16^3 single-eps run completed, sup H0 = %.3e",
                         rep.rows.front().sup_H0)
                         .c_str()
                   : rep.rows.front().status.c_str());
    if (!ok) ++g_failures;
}

}  // namespace

int main(int argc, char** argv) {
    std::string cfg_dir = argc > 1 ? argv[1] : "configs";
    auto t0 = clk::now();
    try {
        SweepOutcome sweep = run_rate_sweep(cfg_dir);
        criteria_sweep(sweep);
        criterion_conservation(cfg_dir);
        criterion_constraints(cfg_dir);
        criterion_gauge(cfg_dir);
        IdentityReport idrep = criterion_identities(cfg_dir);
        criterion_wkb_rates(cfg_dir);
        criterion_vlasov(cfg_dir);
        criterion_elliptic(idrep);
        criterion_sandwich(cfg_dir);
        criterion_budget(cfg_dir);
        smoke_3d(cfg_dir);
    } catch (const std::exception& e) {
        std::printf("FAIL   -  suite aborted: %s\n", e.what());
        ++g_failures;
    }
    std::printf("acceptance: %d failure(s), total wall %.1fs\n", g_failures, seconds_since(t0));
    return g_failures;
}
