#pragma once

#include <map>
#include <string>

#include "mkgm/field.hpp"

namespace mkgm {

// Named built-in initial profiles, parameterized by a flat key/value map.
//   density profiles:  constant {value}
//                      sine-bump {base, amplitude, axis, mode}
//                      gaussian-bump {base, amplitude, sigma, cx, cy, cz}
//                        (periodicized by summing +-3 image copies per axis)
//   velocity profiles: constant {vx, vy, vz}
//                      sine-bump {component, axis, amplitude, mode}
//                      zero {}
struct ProfileSpec {
    std::string name;
    std::map<std::string, double> params;

    double get(const std::string& key, double fallback) const {
        auto it = params.find(key);
        return it == params.end() ? fallback : it->second;
    }
};

ScalarField make_density_profile(const ProfileSpec& spec, GridPtr g);
VectorField3 make_velocity_profile(const ProfileSpec& spec, GridPtr g);

}  // namespace mkgm
