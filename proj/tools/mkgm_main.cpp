// Command-line front end: matched-data generation, single-system runs,
// eps sweeps, identity checking, and weak-form verification.

#include <CLI11.hpp>

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>

#include "mkgm/harness.hpp"
#include "mkgm/norms.hpp"
#include "mkgm/snapshot.hpp"
#include "mkgm/vlasov.hpp"

namespace fs = std::filesystem;
using namespace mkgm;

namespace {

struct CommonArgs {
    std::string config_path;
    std::string out_override;
    std::string eps_override;
    std::string grid_override;
    std::string backend_override;
    std::uint64_t seed_override = 0;
    bool seed_set = false;
};

void add_common(CLI::App* cmd, CommonArgs& args) {
    cmd->add_option("--config", args.config_path, "configuration file")->required();
    cmd->add_option("--out", args.out_override, "output directory override");
    cmd->add_option("--eps", args.eps_override, "comma-separated eps list override");
    cmd->add_option("--grid", args.grid_override, "Nx,Ny,Nz grid override");
    cmd->add_option("--backend", args.backend_override, "spectral|fd2|fd4");
    cmd->add_option("--seed", args.seed_override, "RNG seed override")
        ->each([&args](const std::string&) { args.seed_set = true; });
}

RunConfig resolve_config(const CommonArgs& args) {
    RunConfig cfg = load_config(args.config_path);
    if (!args.out_override.empty()) cfg.out_dir = args.out_override;
    if (!args.eps_override.empty()) cfg.eps_list = parse_double_list(args.eps_override);
    if (!args.grid_override.empty()) {
        auto v = parse_double_list(args.grid_override);
        if (v.size() != 3) throw std::invalid_argument("--grid expects Nx,Ny,Nz");
        for (int a = 0; a < 3; ++a) cfg.grid_n[a] = int(v[a]);
    }
    if (!args.backend_override.empty()) cfg.backend = backend_from_string(args.backend_override);
    if (args.seed_set) cfg.seed = args.seed_override;
    return cfg;
}

double wall_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

int cmd_make_data(const RunConfig& cfg) {
    GridPtr g = make_grid(cfg.grid_n, cfg.box);
    VectorField3 u = make_velocity_profile(cfg.u_profile, g);
    ScalarField rho = make_density_profile(cfg.rho_profile, g);
    PairConfig pc;
    pc.backend = cfg.backend;
    MatchedPair pair = make_matched_pair(u, rho, cfg.eps_list, pc);

    fs::create_directories(cfg.out_dir);
    save_rem_state((fs::path(cfg.out_dir) / "rem_initial.snap").string(), pair.rem_data);
    std::ofstream os(fs::path(cfg.out_dir) / "prep.csv", std::ios::trunc);
    os << "eps,H0,H0_over_eps2,K0,P0,gauss_kgm,gauss_rem,sqrtrho_gap_L2,eik_residual,"
          "snap_shift_x,snap_shift_y,snap_shift_z\n";
    for (std::size_t i = 0; i < pair.kgm_family.size(); ++i) {
        const auto& r = pair.report[i];
        char name[64];
        std::snprintf(name, sizeof name, "kgm_initial_eps%zu.snap", i);
        save_kgm_state((fs::path(cfg.out_dir) / name).string(), pair.kgm_family[i]);
        os << format_double(r.eps) << ',' << format_double(r.H0) << ','
           << format_double(r.H0_over_eps2) << ',' << format_double(r.K0) << ','
           << format_double(r.P0) << ',' << format_double(r.gauss_kgm) << ','
           << format_double(r.gauss_rem) << ',' << format_double(r.sqrtrho_gap_L2) << ','
           << format_double(r.eik_residual) << ',' << format_double(r.snap_shift[0]) << ','
           << format_double(r.snap_shift[1]) << ',' << format_double(r.snap_shift[2]) << '\n';
        std::printf("eps=%g  H0(0)=%.6e  H0/eps^2=%.6e  gauss_kgm=%.3e  sqrtrho_gap=%.3e\n",
                    r.eps, r.H0, r.H0_over_eps2, r.gauss_kgm, r.sqrtrho_gap_L2);
    }
    std::printf("matched data written to %s\n", cfg.out_dir.c_str());
    return 0;
}

int cmd_simulate_kgm(const RunConfig& cfg) {
    GridPtr g = make_grid(cfg.grid_n, cfg.box);
    VectorField3 u = make_velocity_profile(cfg.u_profile, g);
    ScalarField rho = make_density_profile(cfg.rho_profile, g);
    PairConfig pc;
    pc.backend = cfg.backend;
    const double eps = cfg.eps_list.front();
    MatchedPair pair = make_matched_pair(u, rho, {eps}, pc);

    long long nsteps = 0;
    const double dt = pick_dt(cfg, *g, eps, nsteps);
    KgmTrajectory traj = kgm_evolve(pair.kgm_family.front(), cfg.horizon, dt, cfg.kgm_options(),
                                    cfg.stride);
    fs::create_directories(cfg.out_dir);
    std::ofstream os(fs::path(cfg.out_dir) / "kgm_timeseries.csv", std::ios::trunc);
    os << "t,energy,charge,gauss_residual\n";
    for (std::size_t k = 0; k < traj.snaps.size(); ++k) {
        KgmObservables obs = kgm_observables(traj.snaps[k], cfg.backend);
        os << format_double(traj.snaps[k].t) << ',' << format_double(obs.energy) << ','
           << format_double(obs.charge) << ',' << format_double(obs.gauss_residual) << '\n';
        char name[64];
        std::snprintf(name, sizeof name, "kgm_%05zu.snap", k);
        save_kgm_state((fs::path(cfg.out_dir) / name).string(), traj.snaps[k]);
    }
    std::printf("kgm run: eps=%g dt=%g steps=%lld snapshots=%zu -> %s\n", eps, dt, nsteps,
                traj.snaps.size(), cfg.out_dir.c_str());
    return 0;
}

int cmd_simulate_rem(const RunConfig& cfg) {
    GridPtr g = make_grid(cfg.grid_n, cfg.box);
    VectorField3 u = make_velocity_profile(cfg.u_profile, g);
    ScalarField rho = make_density_profile(cfg.rho_profile, g);
    PairConfig pc;
    pc.backend = cfg.backend;
    const double eps = cfg.eps_list.front();
    MatchedPair pair = make_matched_pair(u, rho, {eps}, pc);

    long long nsteps = 0;
    const double dt = pick_dt(cfg, *g, eps, nsteps);
    RemTrajectory traj = rem_evolve(pair.rem_data, cfg.horizon, dt, cfg.rem_options(), cfg.stride);
    fs::create_directories(cfg.out_dir);
    std::ofstream os(fs::path(cfg.out_dir) / "rem_timeseries.csv", std::ios::trunc);
    os << "t,energy,charge,gauss_residual,divB_residual,normalization_residual,max_grad_u\n";
    for (std::size_t k = 0; k < traj.snaps.size(); ++k) {
        RemObservables obs = rem_observables(traj.snaps[k], cfg.backend);
        os << format_double(traj.snaps[k].t) << ',' << format_double(obs.energy) << ','
           << format_double(obs.charge) << ',' << format_double(obs.gauss_residual) << ','
           << format_double(obs.divB_residual) << ','
           << format_double(obs.normalization_residual) << ','
           << format_double(obs.max_grad_u) << '\n';
        char name[64];
        std::snprintf(name, sizeof name, "rem_%05zu.snap", k);
        save_rem_state((fs::path(cfg.out_dir) / name).string(), traj.snaps[k]);
    }
    std::printf("rem run: dt=%g steps=%lld snapshots=%zu -> %s\n", dt, nsteps, traj.snaps.size(),
                cfg.out_dir.c_str());
    return 0;
}

int cmd_sweep(const RunConfig& cfg) {
    auto t0 = std::chrono::steady_clock::now();
    SweepReport rep = run_sweep(cfg);
    write_sweep_outputs(cfg, rep, wall_since(t0));
    for (const auto& r : rep.rows) {
        if (r.status == "ok")
            std::printf("eps=%-8g sup_H0=%.6e  sup_H0/eps^2=%.6e  grid=%dx%dx%d  dt=%g\n", r.eps,
                        r.sup_H0, r.sup_H0_over_eps2, r.grid_n[0], r.grid_n[1], r.grid_n[2], r.dt);
        else
            std::printf("eps=%-8g %s\n", r.eps, r.status.c_str());
    }
    if (rep.slope_available)
        std::printf("fitted slope of sup_t H0 vs eps: %.4f (residual %.2e)\n", rep.rate.slope,
                    rep.rate.max_residual);
    else
        std::printf("slope unavailable (fewer than 3 successful rows)\n");
    std::printf("outputs in %s\n", cfg.out_dir.c_str());
    return 0;
}

int cmd_check_identities(const RunConfig& cfg) {
    GridPtr g = make_grid(cfg.grid_n, cfg.box);
    IdentityReport rep = check_identities(g, cfg.seed, 20, cfg.backend);
    std::printf("identity suite on %d manufactured states (seed %llu, %s backend)\n", rep.states,
                (unsigned long long)cfg.seed, to_string(cfg.backend).c_str());
    std::printf("  splitting identity r1 (rel)      : %.3e  [<= 1e-9]\n", rep.max_split_r1);
    std::printf("  splitting identity r2 (rel)      : %.3e  [<= 1e-9]\n", rep.max_split_r2);
    std::printf("  h+I decomposition gap (rel)      : %.3e  [<= 1e-10]\n", rep.max_decomp_gap);
    std::printf("  h00 two-form gap (rel)           : %.3e  [<= 1e-9]\n", rep.max_h00_gap);
    std::printf("  elliptic spectrum error          : %.3e  [<= 1e-12]\n", rep.max_elliptic_err);
    std::printf("  mass-shell residual              : %.3e  [<= 1e-12]\n", rep.max_mass_shell);
    std::printf("  sandwich failures                : %d\n", rep.sandwich_failures);
    std::printf("  EM summand bound F^2 <= 2 H0     : %s\n",
                rep.coercivity_bound_ok ? "ok" : "VIOLATED");
    std::printf("%s\n", rep.pass ? "PASS" : "FAIL");
    return rep.pass ? 0 : 1;
}

int cmd_vlasov_check(const RunConfig& cfg) {
    GridPtr g = make_grid(cfg.grid_n, cfg.box);
    VectorField3 u = make_velocity_profile(cfg.u_profile, g);
    ScalarField rho = make_density_profile(cfg.rho_profile, g);
    PairConfig pc;
    pc.backend = cfg.backend;
    const double eps = cfg.eps_list.front();
    MatchedPair pair = make_matched_pair(u, rho, {eps}, pc);
    long long nsteps = 0;
    const double dt = pick_dt(cfg, *g, eps, nsteps);
    RemTrajectory traj = rem_evolve(pair.rem_data, cfg.horizon, dt, cfg.rem_options(), cfg.stride);

    fs::create_directories(cfg.out_dir);
    std::ofstream os(fs::path(cfg.out_dir) / "vlasov_residuals.csv", std::ios::trunc);
    os << "test_id,kind,residual,grid,dt\n";
    char gridbuf[48];
    std::snprintf(gridbuf, sizeof gridbuf, "%dx%dx%d", g->n[0], g->n[1], g->n[2]);
    double worst = 0.0;
    for (const auto& fn : default_spacetime_bank(*g, cfg.horizon)) {
        double r = weak_maxwell_residual(traj, fn, cfg.backend);
        worst = std::max(worst, r);
        os << fn.id << ",maxwell," << format_double(r) << ',' << gridbuf << ','
           << format_double(traj.dt_out()) << '\n';
        std::printf("  %-16s maxwell  %.6e\n", fn.id.c_str(), r);
    }
    for (const auto& fn : default_phase_bank(*g, cfg.horizon)) {
        double r = weak_vlasov_residual(traj, fn, cfg.backend);
        worst = std::max(worst, r);
        os << fn.id << ",vlasov," << format_double(r) << ',' << gridbuf << ','
           << format_double(traj.dt_out()) << '\n';
        std::printf("  %-16s vlasov   %.6e\n", fn.id.c_str(), r);
    }
    std::printf("mass-shell residual: %.3e\n", mass_shell_residual(traj));
    std::printf("worst weak residual: %.6e -> %s\n", worst, cfg.out_dir.c_str());
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"semiclassical matter-field / charged-fluid verification suite"};
    app.require_subcommand(1);

    CommonArgs args;
    auto* make_data = app.add_subcommand("make-data", "emit a matched data pair");
    auto* sim_kgm = app.add_subcommand("simulate-kgm", "evolve the matter-field system");
    auto* sim_rem = app.add_subcommand("simulate-rem", "evolve the fluid system");
    auto* sweep = app.add_subcommand("sweep", "run the eps sweep and fit the rate");
    auto* check = app.add_subcommand("check-identities",
                                     "run the randomized identity suite on manufactured states");
    auto* vlasov = app.add_subcommand("vlasov-check", "weak-form residuals on a fluid run");
    for (auto* cmd : {make_data, sim_kgm, sim_rem, sweep, check, vlasov}) add_common(cmd, args);

    CLI11_PARSE(app, argc, argv);

    try {
        RunConfig cfg = resolve_config(args);
        if (make_data->parsed()) return cmd_make_data(cfg);
        if (sim_kgm->parsed()) return cmd_simulate_kgm(cfg);
        if (sim_rem->parsed()) return cmd_simulate_rem(cfg);
        if (sweep->parsed()) return cmd_sweep(cfg);
        if (check->parsed()) return cmd_check_identities(cfg);
        if (vlasov->parsed()) return cmd_vlasov_check(cfg);
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 2;
    }
    return 0;
}
