#include "mkgm/harness.hpp"

#ifdef _OPENMP
#include <omp.h>
#endif

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <stdexcept>

#include <nlohmann/json.hpp>

#include "mkgm/norms.hpp"
#include "mkgm/snapshot.hpp"
#include "mkgm/vlasov.hpp"

namespace mkgm {

namespace fs = std::filesystem;
using json = nlohmann::json;

std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

RateFit fit_rate(const std::vector<double>& xs, const std::vector<double>& ys) {
    if (xs.size() != ys.size()) throw std::invalid_argument("fit_rate: size mismatch");
    if (xs.size() < 3) throw std::invalid_argument("fit_rate: need at least 3 points");
    std::vector<double> lx(xs.size()), ly(ys.size());
    for (std::size_t i = 0; i < xs.size(); ++i) {
        if (!(xs[i] > 0.0) || !(ys[i] > 0.0))
            throw std::invalid_argument("fit_rate: inputs must be positive");
        lx[i] = std::log(xs[i]);
        ly[i] = std::log(ys[i]);
    }
    const double n = double(xs.size());
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        sx += lx[i];
        sy += ly[i];
        sxx += lx[i] * lx[i];
        sxy += lx[i] * ly[i];
    }
    RateFit fit;
    const double det = n * sxx - sx * sx;
    fit.slope = (n * sxy - sx * sy) / det;
    fit.intercept = (sy * sxx - sx * sxy) / det;
    for (std::size_t i = 0; i < xs.size(); ++i)
        fit.max_residual =
            std::max(fit.max_residual, std::abs(ly[i] - (fit.intercept + fit.slope * lx[i])));
    return fit;
}

namespace {

constexpr double kTwoPi = 6.283185307179586476925286766559;

struct ModeCoeff {
    std::array<int, 3> m;
    double amp;
    double phase;
};

std::vector<ModeCoeff> draw_modes(const Grid& g, std::mt19937_64& rng, int max_mode, double amp) {
    std::uniform_real_distribution<double> uni(-1.0, 1.0);
    std::vector<ModeCoeff> modes;
    for (int m0 = 0; m0 <= (g.n[0] > 1 ? max_mode : 0); ++m0)
        for (int m1 = -(g.n[1] > 1 ? max_mode : 0); m1 <= (g.n[1] > 1 ? max_mode : 0); ++m1)
            for (int m2 = -(g.n[2] > 1 ? max_mode : 0); m2 <= (g.n[2] > 1 ? max_mode : 0); ++m2) {
                ModeCoeff c{{m0, m1, m2}, amp * uni(rng), 3.0 * uni(rng)};
                modes.push_back(c);
            }
    return modes;
}

ScalarField eval_modes(GridPtr g, const std::vector<ModeCoeff>& modes) {
    ScalarField f(g);
    const Grid& gr = *g;
    const int n1 = gr.n[1], n2 = gr.n[2];
    parallel_for(gr.cells(), [&](std::size_t i) {
        int iz = int(i % n2);
        int iy = int((i / n2) % n1);
        int ix = int(i / (std::size_t(n1) * n2));
        double x0 = (ix + 0.5) / gr.n[0], x1 = (iy + 0.5) / gr.n[1], x2 = (iz + 0.5) / gr.n[2];
        double acc = 0.0;
        for (const auto& c : modes)
            acc += c.amp * std::cos(kTwoPi * (c.m[0] * x0 + c.m[1] * x1 + c.m[2] * x2) + c.phase);
        f[i] = acc;
    });
    return f;
}

}  // namespace

ScalarField random_smooth_scalar(GridPtr g, std::mt19937_64& rng, int max_mode, double amp) {
    return eval_modes(g, draw_modes(*g, rng, max_mode, amp));
}

ComplexField random_smooth_complex(GridPtr g, std::mt19937_64& rng, int max_mode, double amp) {
    ScalarField re = random_smooth_scalar(g, rng, max_mode, amp);
    ScalarField im = random_smooth_scalar(g, rng, max_mode, amp);
    ComplexField f(g);
    parallel_for(f.size(), [&](std::size_t i) { f[i] = cplx(re[i], im[i]); });
    return f;
}

VectorField3 random_smooth_vector(GridPtr g, std::mt19937_64& rng, int max_mode, double amp) {
    VectorField3 v(g);
    for (int a = 0; a < 3; ++a) v[a] = random_smooth_scalar(g, rng, max_mode, amp);
    return v;
}

// ------------------------------------------------------------------- sweeps

GridPtr ladder_grid(const RunConfig& cfg, double eps) {
    std::array<int, 3> n = cfg.grid_n;
    if (cfg.ladder_match_eps) {
        const double base = cfg.ladder_base_eps > 0.0 ? cfg.ladder_base_eps : cfg.eps_list.front();
        for (int a = 0; a < 3; ++a)
            if (n[a] > 1) n[a] = std::max(2, int(std::llround(n[a] * base / eps)));
    }
    return make_grid(n, cfg.box);
}

double pick_dt(const RunConfig& cfg, const Grid& g, double eps, long long& nsteps) {
    double dt_raw = cfg.c_osc * eps;
    const double dmin = g.min_dx();
    if (std::isfinite(dmin)) dt_raw = std::min(dt_raw, cfg.c_cfl * dmin);
    const long long chunks = (long long)std::ceil(cfg.horizon / (dt_raw * cfg.stride) - 1e-12);
    nsteps = std::max<long long>(1, chunks) * cfg.stride;
    return cfg.horizon / double(nsteps);
}

SweepRow run_sweep_row(const RunConfig& cfg, double eps) {
    SweepRow row;
    row.eps = eps;
    GridPtr g = ladder_grid(cfg, eps);
    row.grid_n = g->n;

    VectorField3 u = make_velocity_profile(cfg.u_profile, g);
    ScalarField rho = make_density_profile(cfg.rho_profile, g);
    PairConfig pc;
    pc.backend = cfg.backend;
    MatchedPair pair = make_matched_pair(u, rho, {eps}, pc);
    row.prep = pair.report.front();

    long long nsteps = 0;
    row.dt = pick_dt(cfg, *g, eps, nsteps);
    row.steps = nsteps;

    KgmTrajectory kt = kgm_evolve(pair.kgm_family.front(), cfg.horizon, row.dt,
                                  cfg.kgm_options(), cfg.stride);
    RemTrajectory rt = rem_evolve(pair.rem_data, cfg.horizon, row.dt, cfg.rem_options(),
                                  cfg.stride);

    for (std::size_t k = 0; k < kt.snaps.size(); ++k) {
        ModulatedEnergyReport rep = modulated_report(kt.snaps[k], rt.snaps[k], cfg.backend);
        row.sup_H0 = std::max(row.sup_H0, rep.H0);
        if (rep.dist.F_L2 * rep.dist.F_L2 > 2.0 * rep.H0 * (1.0 + 1e-12))
            row.coercivity_bound_ok = false;
        if (!rep.sandwich_holds) row.sandwich_ok = false;
        row.series.push_back(rep);

        KgmObservables ko = kgm_observables(kt.snaps[k], cfg.backend);
        RemObservables ro = rem_observables(rt.snaps[k], cfg.backend);
        row.energy_kgm.push_back(ko.energy);
        row.energy_rem.push_back(ro.energy);
        row.charge_kgm.push_back(ko.charge);
        row.charge_rem.push_back(ro.charge);
        row.gauss_kgm.push_back(ko.gauss_residual);
        row.gauss_rem.push_back(ro.gauss_residual);
        row.divB.push_back(ro.divB_residual);
    }
    row.sup_H0_over_eps2 = row.sup_H0 / (eps * eps);
    row.final_dist = row.series.back().dist;
    row.kgm_first = kt.snaps.front();
    row.kgm_last = kt.snaps.back();
    row.rem_first = rt.snaps.front();
    row.rem_last = rt.snaps.back();
    row.init_gauss_kgm = row.gauss_kgm.front();
    row.init_gauss_rem = row.gauss_rem.front();
    row.init_divB = row.divB.front();
    for (std::size_t k = 0; k < row.series.size(); ++k) {
        row.max_gauss_kgm = std::max(row.max_gauss_kgm, row.gauss_kgm[k]);
        row.max_gauss_rem = std::max(row.max_gauss_rem, row.gauss_rem[k]);
        row.max_divB = std::max(row.max_divB, row.divB[k]);
        row.energy_drift_kgm =
            std::max(row.energy_drift_kgm, std::abs(row.energy_kgm[k] - row.energy_kgm[0]));
        row.energy_drift_rem =
            std::max(row.energy_drift_rem, std::abs(row.energy_rem[k] - row.energy_rem[0]));
        row.charge_drift_kgm =
            std::max(row.charge_drift_kgm, std::abs(row.charge_kgm[k] - row.charge_kgm[0]));
        row.charge_drift_rem =
            std::max(row.charge_drift_rem, std::abs(row.charge_rem[k] - row.charge_rem[0]));
    }
    return row;
}

SweepReport run_sweep(const RunConfig& cfg) {
    SweepReport rep;
    for (double eps : cfg.eps_list) {
        try {
            rep.rows.push_back(run_sweep_row(cfg, eps));
        } catch (const std::exception& e) {
            SweepRow failed;
            failed.eps = eps;
            failed.status = std::string("failed: ") + e.what();
            rep.rows.push_back(std::move(failed));
        }
    }
    std::vector<double> xs, ys;
    for (const auto& r : rep.rows)
        if (r.status == "ok" && r.sup_H0 > 0.0) {
            xs.push_back(r.eps);
            ys.push_back(r.sup_H0);
        }
    if (xs.size() >= 3) {
        rep.rate = fit_rate(xs, ys);
        rep.slope_available = true;
    }
    return rep;
}

namespace {

void write_timeseries_csv(const std::string& path, const SweepRow& row) {
    std::ofstream os(path, std::ios::trunc);
    os << "t,H0,HU,K0,P0,energy_kgm,energy_rem,charge_kgm,charge_rem,gauss_kgm,gauss_rem,divB,"
          "dist_J_L1,dist_F_L2,dist_rho_L1,dist_sqrtrho_L2\n";
    for (std::size_t k = 0; k < row.series.size(); ++k) {
        const auto& r = row.series[k];
        os << format_double(r.t) << ',' << format_double(r.H0) << ',' << format_double(r.HU)
           << ',' << format_double(r.K0) << ',' << format_double(r.P0) << ','
           << format_double(row.energy_kgm[k]) << ',' << format_double(row.energy_rem[k]) << ','
           << format_double(row.charge_kgm[k]) << ',' << format_double(row.charge_rem[k]) << ','
           << format_double(row.gauss_kgm[k]) << ',' << format_double(row.gauss_rem[k]) << ','
           << format_double(row.divB[k]) << ',' << format_double(r.dist.J_L1) << ','
           << format_double(r.dist.F_L2) << ',' << format_double(r.dist.rho_L1) << ','
           << format_double(r.dist.sqrtrho_L2) << '\n';
    }
}

}  // namespace

void write_manifest(const std::string& path, const RunConfig& cfg, double wall_seconds) {
    json j;
    j["version"] = "1.0.0";
    j["sign_conventions"] = {
        {"metric", "diag(-1,+1,+1,+1), c = 1"},
        {"faraday", "F_{0i} = E_i, F_{12} = -B_3 (covariant matrix)"},
        {"potential", "temporal gauge A^0 = 0; d_t A = E; B = -curl A"},
        {"maxwell_evolution", "d_t E = curl B - J_spatial; d_t B = -curl E"},
        {"gauss_law", "div E = +(J^0 - <J^0>), contravariant charge, uniform background subtracted"},
        {"charge", "J^0 = Im(phi conj(pi)) for the matter field; U^0 rho for the fluid"},
        {"kgm_integrator", "velocity-Verlet: half kicks of (pi,E), full drift of (phi,A), half kicks"},
        {"rem_integrator",
         cfg.rem_integrator == RemIntegrator::strang_heun
             ? "Strang: exact Fourier Maxwell half-steps around a Heun matter step"
             : "classical RK4, unsplit"},
    };
    j["backend"] = to_string(cfg.backend);
    j["grid"] = {cfg.grid_n[0], cfg.grid_n[1], cfg.grid_n[2]};
    j["box"] = {cfg.box[0], cfg.box[1], cfg.box[2]};
    j["eps"] = cfg.eps_list;
    j["horizon"] = cfg.horizon;
    j["stride"] = cfg.stride;
    j["seed"] = cfg.seed;
    j["ladder_match_eps"] = cfg.ladder_match_eps;
#ifdef _OPENMP
    j["omp_max_threads"] = omp_get_max_threads();
#else
    j["omp_max_threads"] = 1;
#endif
    j["wall_time_s"] = wall_seconds;
    std::ofstream os(path, std::ios::trunc);
    os << j.dump(2) << '\n';
}

void write_sweep_outputs(const RunConfig& cfg, const SweepReport& rep, double wall_seconds) {
    fs::create_directories(cfg.out_dir);
    {
        std::ofstream os(fs::path(cfg.out_dir) / "sweep.csv", std::ios::trunc);
        os << "eps,sup_H0,sup_H0_over_eps2,dist_J_L1,dist_F_L2,dist_rho_L1,dist_sqrtrho_L2,"
              "status\n";
        for (const auto& r : rep.rows) {
            std::string status = r.status == "ok" ? "ok" : "failed";
            os << format_double(r.eps) << ',' << format_double(r.sup_H0) << ','
               << format_double(r.sup_H0_over_eps2) << ',' << format_double(r.final_dist.J_L1)
               << ',' << format_double(r.final_dist.F_L2) << ','
               << format_double(r.final_dist.rho_L1) << ','
               << format_double(r.final_dist.sqrtrho_L2) << ',' << status << '\n';
        }
    }
    {
        json j;
        if (rep.slope_available) {
            j["slope"] = rep.rate.slope;
            j["intercept"] = rep.rate.intercept;
            j["residual"] = rep.rate.max_residual;
        } else {
            j["slope"] = nullptr;
            j["note"] = "slope unavailable: fewer than 3 successful rows";
        }
        std::vector<double> used;
        for (const auto& r : rep.rows)
            if (r.status == "ok") used.push_back(r.eps);
        j["rows_used"] = used;
        std::ofstream os(fs::path(cfg.out_dir) / "rates.json", std::ios::trunc);
        os << j.dump(2) << '\n';
    }
    for (std::size_t i = 0; i < rep.rows.size(); ++i) {
        const auto& r = rep.rows[i];
        fs::path dir = fs::path(cfg.out_dir) / ("eps_" + std::to_string(i));
        fs::create_directories(dir);
        if (r.status == "ok") {
            write_timeseries_csv((dir / "timeseries.csv").string(), r);
            if (r.kgm_first) save_kgm_state((dir / "kgm_initial.snap").string(), *r.kgm_first);
            if (r.kgm_last) save_kgm_state((dir / "kgm_final.snap").string(), *r.kgm_last);
            if (r.rem_first) save_rem_state((dir / "rem_initial.snap").string(), *r.rem_first);
            if (r.rem_last) save_rem_state((dir / "rem_final.snap").string(), *r.rem_last);
        } else {
            std::ofstream os(dir / "error.txt", std::ios::trunc);
            os << r.status << '\n';
        }
    }
    write_manifest((fs::path(cfg.out_dir) / "manifest.json").string(), cfg, wall_seconds);
}

// ------------------------------------------------------- identity checking

double decomposition_gap(const KgmState& kgm, const RemState& rem, Backend b) {
    ModulatedFields mf = modulated_fields(kgm, rem, b);
    StressTensorField Tk = kgm_stress_energy(kgm, b);
    StressTensorField Tr = rem_stress_energy(rem);
    double scale = 0.0, gap = 0.0;
    for (int slot = 0; slot < 10; ++slot) {
        scale = std::max(scale, norm(Tk.c[slot], NormKind::Linf));
        scale = std::max(scale, norm(Tr.c[slot], NormKind::Linf));
    }
    scale = std::max(scale, 1e-300);
    for (int slot = 0; slot < 10; ++slot) {
        gap = std::max(gap, chunked_max(Tk.c[slot].size(), [&](std::size_t i) {
                  return std::abs(mf.h.c[slot][i] + mf.I.c[slot][i] -
                                  (Tk.c[slot][i] - Tr.c[slot][i]));
              }));
    }
    return gap / scale;
}

IdentityReport check_identities(GridPtr g, std::uint64_t seed, int nstates, Backend b) {
    IdentityReport rep;
    rep.states = nstates;
    std::mt19937_64 rng(seed);

    for (int n = 0; n < nstates; ++n) {
        // manufactured semiclassical state
        ComplexField phi = random_smooth_complex(g, rng, 2, 0.5);
        parallel_for(phi.size(), [&](std::size_t i) { phi[i] += cplx(1.2, 0.0); });
        ComplexField pi = random_smooth_complex(g, rng, 2, 0.3);
        VectorField3 A = random_smooth_vector(g, rng, 2, 0.2);
        VectorField3 Ek = random_smooth_vector(g, rng, 2, 0.2);
        std::uniform_real_distribution<double> ueps(0.05, 0.5);
        double eps = ueps(rng);
        KgmState kgm{g, std::move(phi), std::move(pi), std::move(A), std::move(Ek), eps, 0.0};

        // manufactured fluid state
        VectorField3 uf = random_smooth_vector(g, rng, 2, 0.15);
        ScalarField rho = random_smooth_scalar(g, rng, 2, 0.25);
        parallel_for(rho.size(), [&](std::size_t i) { rho[i] = 0.4 + rho[i] * rho[i]; });
        VectorField3 Er = random_smooth_vector(g, rng, 2, 0.2);
        VectorField3 Br = random_smooth_vector(g, rng, 2, 0.2);
        RemState rem{g, std::move(uf), std::move(rho), std::move(Er), std::move(Br), 0.0};

        SplitResiduals split = split_identity_residuals(kgm, b);
        rep.max_split_r1 = std::max(rep.max_split_r1, split.rel_r1);
        rep.max_split_r2 = std::max(rep.max_split_r2, split.rel_r2);

        rep.max_decomp_gap = std::max(rep.max_decomp_gap, decomposition_gap(kgm, rem, b));

        H00Forms forms = h00_forms(kgm, rem, b);
        rep.max_h00_gap = std::max(rep.max_h00_gap, forms.gap_rel);

        auto ev = elliptic_spectrum(rem);
        ScalarField U0 = rem_u0(rem);
        rep.max_elliptic_err = std::max(rep.max_elliptic_err,
            chunked_max(U0.size(), [&](std::size_t i) {
                double expect = 1.0 / (U0[i] * U0[i]);
                return std::max({std::abs(ev[0][i] - 1.0), std::abs(ev[1][i] - 1.0),
                                 std::abs(ev[2][i] - expect)});
            }));

        ModulatedFields mf = modulated_fields(kgm, rem, b);
        KineticEmSplit split_ke = kinetic_em_split(mf);
        ObservableDistances dist = observable_distances(kgm, rem, b);
        if (dist.F_L2 * dist.F_L2 > 2.0 * split_ke.H0() * (1.0 + 1e-12))
            rep.coercivity_bound_ok = false;

        // sandwich with a boosted constant field and with the fluid velocity
        std::uniform_real_distribution<double> uboost(-0.5, 0.5);
        FourVectorField X(g, IndexPos::upper);
        double bx = uboost(rng), by = uboost(rng);
        double x0 = std::sqrt(1.0 + bx * bx + by * by) + 0.1;
        X.t.fill(x0);
        X.x[0].fill(bx);
        X.x[1].fill(by);
        double nu = std::min(1.0, 1.0 / std::sqrt(x0 * x0 + bx * bx + by * by));
        SandwichResult sw = sandwich(mf, make_acceptable(std::move(X), nu));
        if (!sw.holds) ++rep.sandwich_failures;

        RemTrajectory single;
        single.snaps.push_back(rem);
        single.dt = 1.0;
        rep.max_mass_shell = std::max(rep.max_mass_shell, mass_shell_residual(single));
    }
    rep.pass = rep.max_split_r1 <= 1e-9 && rep.max_split_r2 <= 1e-9 &&
               rep.max_decomp_gap <= 1e-10 && rep.max_h00_gap <= 1e-9 &&
               rep.max_elliptic_err <= 1e-12 && rep.max_mass_shell <= 1e-12 &&
               rep.sandwich_failures == 0 && rep.coercivity_bound_ok;
    return rep;
}

}  // namespace mkgm
