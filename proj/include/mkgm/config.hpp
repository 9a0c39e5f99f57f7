#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "mkgm/calculus.hpp"
#include "mkgm/kgm.hpp"
#include "mkgm/profiles.hpp"
#include "mkgm/rem.hpp"

namespace mkgm {

// Flat sectioned key=value file; the full key set is documented in
// docs/config.md. Unknown sections or keys are errors.
struct RunConfig {
    std::array<int, 3> grid_n{64, 1, 1};
    std::array<double, 3> box{1.0, 1.0, 1.0};
    std::vector<double> eps_list{0.1, 0.05, 0.025};
    double horizon = 0.5;
    double c_cfl = 0.5;
    double c_osc = 0.2;
    Backend backend = Backend::spectral;
    int stride = 10;
    std::uint64_t seed = 1;
    std::string out_dir = "out";

    bool ladder_match_eps = true;  // dx, dt proportional to eps across the sweep
    double ladder_base_eps = 0.0;  // 0: use the largest eps in the list

    ProfileSpec rho_profile{"sine-bump", {{"base", 1.0}, {"amplitude", 0.5}}};
    ProfileSpec u_profile{"zero", {}};

    // module options
    bool kgm_evolve_em = true;
    RemIntegrator rem_integrator = RemIntegrator::strang_heun;
    RemTransport rem_transport = RemTransport::spectral_advective;
    double rem_filter_strength = 1.0;
    int rem_filter_order = 16;
    double rem_shock_threshold = 0.5;

    KgmOptions kgm_options() const {
        KgmOptions o;
        o.backend = backend;
        o.evolve_em = kgm_evolve_em;
        o.c_cfl = c_cfl;
        o.c_osc = c_osc;
        return o;
    }
    RemOptions rem_options() const {
        RemOptions o;
        o.backend = backend;
        o.integrator = rem_integrator;
        o.transport = rem_transport;
        o.c_cfl = c_cfl;
        o.shock_threshold = rem_shock_threshold;
        o.filter_strength = rem_filter_strength;
        o.filter_order = rem_filter_order;
        return o;
    }
};

RunConfig load_config(const std::string& path);

// Raw parsed file: section -> key -> value, for tools that need extras.
std::map<std::string, std::map<std::string, std::string>> parse_config_file(
    const std::string& path);

std::vector<double> parse_double_list(const std::string& s);

}  // namespace mkgm
