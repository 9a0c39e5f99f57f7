#pragma once

#include <optional>
#include <random>
#include <string>
#include <vector>

#include "mkgm/config.hpp"
#include "mkgm/modenergy.hpp"
#include "mkgm/wkb.hpp"

namespace mkgm {

struct RateFit {
    double slope = 0.0;
    double intercept = 0.0;
    double max_residual = 0.0;
};

// Least squares of log(y) against log(x); requires >= 3 positive points.
RateFit fit_rate(const std::vector<double>& xs, const std::vector<double>& ys);

// Deterministic band-limited random fields (coefficients drawn serially from
// the generator, then evaluated).
ScalarField random_smooth_scalar(GridPtr g, std::mt19937_64& rng, int max_mode, double amp);
ComplexField random_smooth_complex(GridPtr g, std::mt19937_64& rng, int max_mode, double amp);
VectorField3 random_smooth_vector(GridPtr g, std::mt19937_64& rng, int max_mode, double amp);

// ------------------------------------------------------------------- sweeps

struct SweepRow {
    double eps = 0.0;
    std::string status = "ok";
    std::array<int, 3> grid_n{0, 0, 0};
    double dt = 0.0;
    long long steps = 0;
    double sup_H0 = 0.0;
    double sup_H0_over_eps2 = 0.0;
    ObservableDistances final_dist;
    bool coercivity_bound_ok = true;    // F_L2^2 <= 2 H0 at every output time
    bool sandwich_ok = true;            // U-frame sandwich at every output time
    double max_gauss_kgm = 0.0, init_gauss_kgm = 0.0;
    double max_gauss_rem = 0.0, init_gauss_rem = 0.0;
    double max_divB = 0.0, init_divB = 0.0;
    double energy_drift_kgm = 0.0, energy_drift_rem = 0.0;
    double charge_drift_kgm = 0.0, charge_drift_rem = 0.0;
    std::vector<ModulatedEnergyReport> series;
    std::vector<double> energy_kgm, energy_rem, charge_kgm, charge_rem;
    std::vector<double> gauss_kgm, gauss_rem, divB;
    PreparationRow prep;
    std::optional<KgmState> kgm_first, kgm_last;
    std::optional<RemState> rem_first, rem_last;
};

struct SweepReport {
    std::vector<SweepRow> rows;
    bool slope_available = false;
    RateFit rate;
};

GridPtr ladder_grid(const RunConfig& cfg, double eps);
double pick_dt(const RunConfig& cfg, const Grid& g, double eps, long long& nsteps);

// Matched pair + synchronized evolutions + per-stride modulated reports for
// one eps value. Throws on solver aborts.
SweepRow run_sweep_row(const RunConfig& cfg, double eps);

// Full eps sweep with failure isolation; does not touch the filesystem.
SweepReport run_sweep(const RunConfig& cfg);

// CSV/report emission: <out>/sweep.csv, <out>/rates.json, per-row
// subdirectories with timeseries.csv and initial/final snapshots, and
// <out>/manifest.json (the only file with wall-clock content).
void write_sweep_outputs(const RunConfig& cfg, const SweepReport& rep, double wall_seconds);

void write_manifest(const std::string& path, const RunConfig& cfg, double wall_seconds);

// ------------------------------------------------------- identity checking

struct IdentityReport {
    int states = 0;
    double max_split_r1 = 0.0;
    double max_split_r2 = 0.0;
    double max_decomp_gap = 0.0;
    double max_h00_gap = 0.0;
    double max_elliptic_err = 0.0;
    double max_mass_shell = 0.0;
    int sandwich_failures = 0;
    bool coercivity_bound_ok = true;
    bool pass = false;
};

// Randomized manufactured-state identity suite (splitting identities, h+I
// decomposition, two h00 forms, elliptic spectrum, sandwich, EM summand
// bound) over nstates draws.
IdentityReport check_identities(GridPtr g, std::uint64_t seed, int nstates, Backend b);

// Relative gap between h+I and the stress-tensor difference on given states.
double decomposition_gap(const KgmState& kgm, const RemState& rem, Backend b);

std::string format_double(double v);  // %.17g, deterministic CSV cell

}  // namespace mkgm
