#include "mkgm/profiles.hpp"

#include <cmath>
#include <stdexcept>

namespace mkgm {

namespace {
constexpr double kTwoPi = 6.283185307179586476925286766559;

template <class Fn>
void fill_by_coords(ScalarField& f, Fn&& fn) {
    const Grid& g = f.grid();
    const int n1 = g.n[1], n2 = g.n[2];
    parallel_for(g.cells(), [&](std::size_t i) {
        int iz = int(i % n2);
        int iy = int((i / n2) % n1);
        int ix = int(i / (std::size_t(n1) * n2));
        f[i] = fn(g.coord(0, ix), g.coord(1, iy), g.coord(2, iz));
    });
}
}  // namespace

ScalarField make_density_profile(const ProfileSpec& spec, GridPtr g) {
    ScalarField f(g);
    if (spec.name == "constant") {
        f.fill(spec.get("value", 1.0));
    } else if (spec.name == "sine-bump") {
        const double base = spec.get("base", 1.0);
        const double amp = spec.get("amplitude", 0.5);
        const int axis = int(spec.get("axis", 0));
        const int mode = int(spec.get("mode", 1));
        if (axis < 0 || axis > 2) throw std::invalid_argument("sine-bump: axis must be 0..2");
        const double L = g->box[axis];
        fill_by_coords(f, [&](double x, double y, double z) {
            double c = axis == 0 ? x : axis == 1 ? y : z;
            return base + amp * std::sin(kTwoPi * mode * c / L);
        });
        if (base - std::abs(amp) < 0.0)
            throw std::invalid_argument("sine-bump: profile dips below zero");
    } else if (spec.name == "gaussian-bump") {
        const double base = spec.get("base", 1.0);
        const double amp = spec.get("amplitude", 0.5);
        const double sigma = spec.get("sigma", 0.1);
        const double cx = spec.get("cx", 0.5) * g->box[0];
        const double cy = spec.get("cy", 0.5) * g->box[1];
        const double cz = spec.get("cz", 0.5) * g->box[2];
        fill_by_coords(f, [&](double x, double y, double z) {
            double acc = 0.0;
            for (int wx = -3; wx <= 3; ++wx)
                for (int wy = -3; wy <= 3; ++wy)
                    for (int wz = -3; wz <= 3; ++wz) {
                        double dx = x - cx - wx * g->box[0];
                        double dy = g->n[1] > 1 ? y - cy - wy * g->box[1] : 0.0;
                        double dz = g->n[2] > 1 ? z - cz - wz * g->box[2] : 0.0;
                        if (g->n[1] == 1 && wy != 0) continue;
                        if (g->n[2] == 1 && wz != 0) continue;
                        acc += std::exp(-(dx * dx + dy * dy + dz * dz) / (2.0 * sigma * sigma));
                    }
            return base + amp * acc;
        });
    } else {
        throw std::invalid_argument("unknown density profile: " + spec.name);
    }
    return f;
}

VectorField3 make_velocity_profile(const ProfileSpec& spec, GridPtr g) {
    VectorField3 v(g);
    if (spec.name == "zero") {
        return v;
    }
    if (spec.name == "constant") {
        v[0].fill(spec.get("vx", 0.0));
        v[1].fill(spec.get("vy", 0.0));
        v[2].fill(spec.get("vz", 0.0));
        return v;
    }
    if (spec.name == "sine-bump") {
        const int comp = int(spec.get("component", 0));
        const int axis = int(spec.get("axis", 0));
        const double amp = spec.get("amplitude", 0.1);
        const int mode = int(spec.get("mode", 1));
        if (comp < 0 || comp > 2 || axis < 0 || axis > 2)
            throw std::invalid_argument("sine-bump velocity: component/axis must be 0..2");
        const double L = g->box[axis];
        fill_by_coords(v[comp], [&](double x, double y, double z) {
            double c = axis == 0 ? x : axis == 1 ? y : z;
            return amp * std::sin(kTwoPi * mode * c / L);
        });
        return v;
    }
    throw std::invalid_argument("unknown velocity profile: " + spec.name);
}

}  // namespace mkgm
