#pragma once

#include <array>
#include <cstddef>
#include <limits>
#include <memory>
#include <stdexcept>
#include <string>

namespace mkgm {

// Periodic uniform lattice. Indexing is row-major with x slowest:
// idx = (ix*Ny + iy)*Nz + iz.
struct Grid {
    std::array<int, 3> n{1, 1, 1};        // cells per axis, any may be 1
    std::array<double, 3> box{1.0, 1.0, 1.0};

    Grid() = default;
    Grid(std::array<int, 3> n_, std::array<double, 3> box_) : n(n_), box(box_) {
        for (int a = 0; a < 3; ++a) {
            if (n[a] < 1) throw std::invalid_argument("Grid: dims must be >= 1");
            if (!(box[a] > 0.0)) throw std::invalid_argument("Grid: extents must be > 0");
        }
        if (double(n[0]) * n[1] * n[2] > 1e12)
            throw std::invalid_argument("Grid: cell count exceeds addressable budget");
    }

    std::size_t cells() const {
        return std::size_t(n[0]) * std::size_t(n[1]) * std::size_t(n[2]);
    }
    double dx(int a) const { return box[a] / n[a]; }
    double cell_volume() const { return dx(0) * dx(1) * dx(2); }
    double volume() const { return box[0] * box[1] * box[2]; }

    // smallest spacing over axes that actually resolve structure
    double min_dx() const {
        double m = std::numeric_limits<double>::infinity();
        for (int a = 0; a < 3; ++a)
            if (n[a] > 1 && dx(a) < m) m = dx(a);
        return m;
    }

    std::size_t idx(int ix, int iy, int iz) const {
        return (std::size_t(ix) * n[1] + iy) * n[2] + iz;
    }
    // periodic wrap, exact index arithmetic
    static int wrap(int i, int n) {
        i %= n;
        return i < 0 ? i + n : i;
    }
    double coord(int a, int i) const { return (i + 0.5) * dx(a); }  // cell centers

    bool same_shape(const Grid& o) const { return n == o.n && box == o.box; }
};

using GridPtr = std::shared_ptr<const Grid>;

inline GridPtr make_grid(std::array<int, 3> n, std::array<double, 3> box) {
    return std::make_shared<const Grid>(n, box);
}

inline void require_same_grid(const Grid& a, const Grid& b, const char* what) {
    if (!a.same_shape(b)) throw std::invalid_argument(std::string("grid mismatch in ") + what);
}

}  // namespace mkgm
