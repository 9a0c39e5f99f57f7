#include "mkgm/calculus.hpp"

#include <fftw3.h>

#include <cmath>
#include <cstring>
#include <map>
#include <mutex>
#include <sstream>
#include <stdexcept>

#include "mkgm/norms.hpp"

namespace mkgm {

Backend backend_from_string(const std::string& s) {
    if (s == "spectral") return Backend::spectral;
    if (s == "fd2") return Backend::fd2;
    if (s == "fd4") return Backend::fd4;
    throw std::invalid_argument("unknown backend: " + s);
}

std::string to_string(Backend b) {
    switch (b) {
        case Backend::spectral: return "spectral";
        case Backend::fd2: return "fd2";
        default: return "fd4";
    }
}

namespace {

constexpr double kTwoPi = 6.283185307179586476925286766559;

// ---------------------------------------------------------------- FD stencils

template <class T>
void derive_fd(const FieldT<T>& f, int axis, int order, FieldT<T>& out) {
    const Grid& g = f.grid();
    const int N = g.n[axis];
    if (N == 1) {
        out.fill(T{});
        return;
    }
    const double h = g.dx(axis);
    const std::size_t stride = axis == 0 ? std::size_t(g.n[1]) * g.n[2]
                             : axis == 1 ? std::size_t(g.n[2])
                                         : 1;
    const int n1 = g.n[1], n2 = g.n[2];
    parallel_for(g.cells(), [&](std::size_t i) {
        int iz = int(i % n2);
        int iy = int((i / n2) % n1);
        int ix = int(i / (std::size_t(n1) * n2));
        int ia = axis == 0 ? ix : axis == 1 ? iy : iz;
        auto nb = [&](int off) {
            int j = Grid::wrap(ia + off, N);
            return f[i + (std::size_t(j) - ia) * stride];
        };
        if (order == 2) {
            out[i] = (nb(1) - nb(-1)) / (2.0 * h);
        } else {
            out[i] = (-nb(2) + 8.0 * nb(1) - 8.0 * nb(-1) + nb(-2)) / (12.0 * h);
        }
    });
}

template <class T>
void laplace_fd(const FieldT<T>& f, int order, FieldT<T>& out) {
    const Grid& g = f.grid();
    const int n1 = g.n[1], n2 = g.n[2];
    const std::array<std::size_t, 3> stride{std::size_t(n1) * n2, std::size_t(n2), 1};
    const std::array<double, 3> h{g.dx(0), g.dx(1), g.dx(2)};
    parallel_for(g.cells(), [&](std::size_t i) {
        int iz = int(i % n2);
        int iy = int((i / n2) % n1);
        int ix = int(i / (std::size_t(n1) * n2));
        const std::array<int, 3> idx{ix, iy, iz};
        T acc{};
        for (int a = 0; a < 3; ++a) {
            const int N = g.n[a];
            if (N == 1) continue;
            auto nb = [&](int off) {
                int j = Grid::wrap(idx[a] + off, N);
                return f[i + (std::size_t(j) - idx[a]) * stride[a]];
            };
            if (order == 2) {
                acc += (nb(1) - 2.0 * f[i] + nb(-1)) / (h[a] * h[a]);
            } else {
                acc += (-nb(2) + 16.0 * nb(1) - 30.0 * f[i] + 16.0 * nb(-1) - nb(-2)) /
                       (12.0 * h[a] * h[a]);
            }
        }
        out[i] = acc;
    });
}

// ------------------------------------------------------------------ symbols

// Signed mode number for index m on an axis of size N.
int signed_mode(int m, int N) { return m <= N / 2 ? m : m - N; }

// Imaginary part of the first-derivative symbol (the symbol is i*kappa).
double deriv_kappa(Backend b, int m, int N, double L) {
    if (N == 1) return 0.0;
    const double h = L / N;
    const int s = signed_mode(m, N);
    const double k = kTwoPi * s / L;
    switch (b) {
        case Backend::spectral:
            if (N % 2 == 0 && m == N / 2) return 0.0;  // Nyquist has no odd derivative
            return k;
        case Backend::fd2:
            return std::sin(k * h) / h;
        default:
            return (8.0 * std::sin(k * h) - std::sin(2.0 * k * h)) / (6.0 * h);
    }
}

// Laplacian symbol of the compact second-derivative stencil (<= 0).
double laplace_sym(Backend b, int m, int N, double L) {
    if (N == 1) return 0.0;
    const double h = L / N;
    const int s = signed_mode(m, N);
    const double k = kTwoPi * s / L;
    switch (b) {
        case Backend::spectral:
            return -k * k;
        case Backend::fd2:
            return -(2.0 - 2.0 * std::cos(k * h)) / (h * h);
        default:
            return (-2.0 * std::cos(2.0 * k * h) + 32.0 * std::cos(k * h) - 30.0) / (12.0 * h * h);
    }
}

// ---------------------------------------------------------------- FFT engine

struct FftPlan {
    std::array<int, 3> n;
    fftw_plan fwd = nullptr;
    fftw_plan bwd = nullptr;
    std::vector<cplx> buf;

    explicit FftPlan(const Grid& g) : n(g.n), buf(g.cells()) {
        static std::mutex planner_mutex;
        std::lock_guard<std::mutex> lock(planner_mutex);
        auto* p = reinterpret_cast<fftw_complex*>(buf.data());
        fwd = fftw_plan_dft_3d(n[0], n[1], n[2], p, p, FFTW_FORWARD, FFTW_ESTIMATE);
        bwd = fftw_plan_dft_3d(n[0], n[1], n[2], p, p, FFTW_BACKWARD, FFTW_ESTIMATE);
    }
    ~FftPlan() {
        static std::mutex planner_mutex;
        std::lock_guard<std::mutex> lock(planner_mutex);
        if (fwd) fftw_destroy_plan(fwd);
        if (bwd) fftw_destroy_plan(bwd);
    }
    FftPlan(const FftPlan&) = delete;
    FftPlan& operator=(const FftPlan&) = delete;
};

FftPlan& plan_for(const Grid& g) {
    thread_local std::map<std::array<int, 3>, std::unique_ptr<FftPlan>> cache;
    auto it = cache.find(g.n);
    if (it == cache.end()) it = cache.emplace(g.n, std::make_unique<FftPlan>(g)).first;
    return *it->second;
}

std::vector<cplx> fft_forward(const Grid& g, const cplx* src) {
    FftPlan& p = plan_for(g);
    std::memcpy(p.buf.data(), src, g.cells() * sizeof(cplx));
    fftw_execute(p.fwd);
    return p.buf;  // copy out
}

std::vector<cplx> fft_forward_real(const ScalarField& f) {
    std::vector<cplx> tmp(f.size());
    parallel_for(f.size(), [&](std::size_t i) { tmp[i] = cplx(f[i], 0.0); });
    return fft_forward(f.grid(), tmp.data());
}

void fft_backward_into(const Grid& g, std::vector<cplx>& hat, cplx* dst) {
    FftPlan& p = plan_for(g);
    std::memcpy(p.buf.data(), hat.data(), g.cells() * sizeof(cplx));
    fftw_execute(p.bwd);
    const double inv = 1.0 / double(g.cells());
    for (std::size_t i = 0; i < g.cells(); ++i) dst[i] = p.buf[i] * inv;
}

void fft_backward_real(const Grid& g, std::vector<cplx>& hat, ScalarField& out) {
    std::vector<cplx> tmp(g.cells());
    fft_backward_into(g, hat, tmp.data());
    parallel_for(g.cells(), [&](std::size_t i) { out[i] = tmp[i].real(); });
}

// Apply fn(hat[i], m0, m1, m2) over the spectral cube.
template <class Fn>
void for_modes(const Grid& g, std::vector<cplx>& hat, Fn&& fn) {
    const int n1 = g.n[1], n2 = g.n[2];
    parallel_for(g.cells(), [&](std::size_t i) {
        int m2 = int(i % n2);
        int m1 = int((i / n2) % n1);
        int m0 = int(i / (std::size_t(n1) * n2));
        fn(hat[i], m0, m1, m2);
    });
}

template <class T>
FieldT<T> derive_spectral(const FieldT<T>& f, int axis) {
    const Grid& g = f.grid();
    FieldT<T> out(f.grid_ptr());
    if (g.n[axis] == 1) {
        out.fill(T{});
        return out;
    }
    std::vector<cplx> hat;
    if constexpr (std::is_same_v<T, double>)
        hat = fft_forward_real(f);
    else
        hat = fft_forward(g, f.data());
    for_modes(g, hat, [&](cplx& h, int m0, int m1, int m2) {
        int m = axis == 0 ? m0 : axis == 1 ? m1 : m2;
        double kappa = deriv_kappa(Backend::spectral, m, g.n[axis], g.box[axis]);
        h *= cplx(0.0, kappa);
    });
    if constexpr (std::is_same_v<T, double>) {
        fft_backward_real(g, hat, out);
    } else {
        fft_backward_into(g, hat, out.data());
    }
    return out;
}

template <class T>
FieldT<T> laplace_spectral(const FieldT<T>& f) {
    const Grid& g = f.grid();
    FieldT<T> out(f.grid_ptr());
    std::vector<cplx> hat;
    if constexpr (std::is_same_v<T, double>)
        hat = fft_forward_real(f);
    else
        hat = fft_forward(g, f.data());
    for_modes(g, hat, [&](cplx& h, int m0, int m1, int m2) {
        double L = laplace_sym(Backend::spectral, m0, g.n[0], g.box[0]) +
                   laplace_sym(Backend::spectral, m1, g.n[1], g.box[1]) +
                   laplace_sym(Backend::spectral, m2, g.n[2], g.box[2]);
        h *= L;
    });
    if constexpr (std::is_same_v<T, double>)
        fft_backward_real(g, hat, out);
    else
        fft_backward_into(g, hat, out.data());
    return out;
}

ScalarField poisson_with_symbol(const ScalarField& s, Backend b, bool graddiv) {
    const Grid& g = s.grid();
    const double m = mean(s);
    const double scale = norm(s, NormKind::Linf);
    if (std::abs(m) > 1e-10 * std::max(scale, 1e-300)) {
        std::ostringstream os;
        os << "poisson_solve: source mean " << m << " exceeds 1e-10 relative tolerance (max|s| = "
           << scale << ")";
        throw std::invalid_argument(os.str());
    }
    std::vector<cplx> hat = fft_forward_real(s);
    for_modes(g, hat, [&](cplx& h, int m0, int m1, int m2) {
        double L;
        if (graddiv) {
            double k0 = deriv_kappa(b, m0, g.n[0], g.box[0]);
            double k1 = deriv_kappa(b, m1, g.n[1], g.box[1]);
            double k2 = deriv_kappa(b, m2, g.n[2], g.box[2]);
            L = -(k0 * k0 + k1 * k1 + k2 * k2);
        } else {
            L = laplace_sym(b, m0, g.n[0], g.box[0]) + laplace_sym(b, m1, g.n[1], g.box[1]) +
                laplace_sym(b, m2, g.n[2], g.box[2]);
        }
        h = (L == 0.0) ? cplx(0.0, 0.0) : h / L;
    });
    ScalarField phi(s.grid_ptr());
    fft_backward_real(g, hat, phi);
    return phi;
}

}  // namespace

ScalarField derivative(const ScalarField& f, int axis, Backend b) {
    if (b == Backend::spectral) return derive_spectral(f, axis);
    ScalarField out(f.grid_ptr());
    derive_fd(f, axis, b == Backend::fd2 ? 2 : 4, out);
    return out;
}

ComplexField derivative(const ComplexField& f, int axis, Backend b) {
    if (b == Backend::spectral) return derive_spectral(f, axis);
    ComplexField out(f.grid_ptr());
    derive_fd(f, axis, b == Backend::fd2 ? 2 : 4, out);
    return out;
}

VectorField3 gradient(const ScalarField& f, Backend b) {
    VectorField3 out(f.grid_ptr());
    for (int a = 0; a < 3; ++a) out[a] = derivative(f, a, b);
    return out;
}

ScalarField divergence(const VectorField3& v, Backend b) {
    ScalarField out(v.grid_ptr());
    ScalarField dx = derivative(v[0], 0, b);
    ScalarField dy = derivative(v[1], 1, b);
    ScalarField dz = derivative(v[2], 2, b);
    parallel_for(out.size(), [&](std::size_t i) { out[i] = dx[i] + dy[i] + dz[i]; });
    return out;
}

VectorField3 curl(const VectorField3& v, Backend b) {
    VectorField3 out(v.grid_ptr());
    ScalarField dyz = derivative(v[2], 1, b), dzy = derivative(v[1], 2, b);
    ScalarField dzx = derivative(v[0], 2, b), dxz = derivative(v[2], 0, b);
    ScalarField dxy = derivative(v[1], 0, b), dyx = derivative(v[0], 1, b);
    parallel_for(out.size(), [&](std::size_t i) {
        out[0][i] = dyz[i] - dzy[i];
        out[1][i] = dzx[i] - dxz[i];
        out[2][i] = dxy[i] - dyx[i];
    });
    return out;
}

ScalarField laplacian(const ScalarField& f, Backend b) {
    if (b == Backend::spectral) return laplace_spectral(f);
    ScalarField out(f.grid_ptr());
    laplace_fd(f, b == Backend::fd2 ? 2 : 4, out);
    return out;
}

ComplexField laplacian(const ComplexField& f, Backend b) {
    if (b == Backend::spectral) return laplace_spectral(f);
    ComplexField out(f.grid_ptr());
    laplace_fd(f, b == Backend::fd2 ? 2 : 4, out);
    return out;
}

ScalarField poisson_solve(const ScalarField& s, Backend b) {
    return poisson_with_symbol(s, b, false);
}

ScalarField poisson_solve_graddiv(const ScalarField& s, Backend b) {
    return poisson_with_symbol(s, b, true);
}

HelmholtzParts helmholtz_decompose(const VectorField3& v, Backend b) {
    const Grid& g = v.grid();
    std::array<std::vector<cplx>, 3> hat{fft_forward_real(v[0]), fft_forward_real(v[1]),
                                         fft_forward_real(v[2])};
    std::array<std::vector<cplx>, 3> cf;
    for (auto& c : cf) c.assign(g.cells(), cplx(0.0, 0.0));

    const int n1 = g.n[1], n2 = g.n[2];
    parallel_for(g.cells(), [&](std::size_t i) {
        int m2 = int(i % n2);
        int m1 = int((i / n2) % n1);
        int m0 = int(i / (std::size_t(n1) * n2));
        double k0 = deriv_kappa(b, m0, g.n[0], g.box[0]);
        double k1 = deriv_kappa(b, m1, g.n[1], g.box[1]);
        double k2 = deriv_kappa(b, m2, g.n[2], g.box[2]);
        double k2sum = k0 * k0 + k1 * k1 + k2 * k2;
        if (k2sum == 0.0) return;  // mean/null modes stay in the div-free part
        cplx proj = (k0 * hat[0][i] + k1 * hat[1][i] + k2 * hat[2][i]) / k2sum;
        cf[0][i] = k0 * proj;
        cf[1][i] = k1 * proj;
        cf[2][i] = k2 * proj;
    });

    HelmholtzParts parts{VectorField3(v.grid_ptr()), VectorField3(v.grid_ptr())};
    for (int a = 0; a < 3; ++a) {
        fft_backward_real(g, cf[a], parts.curl_free[a]);
        parallel_for(g.cells(), [&](std::size_t i) {
            parts.div_free[a][i] = v[a][i] - parts.curl_free[a][i];
        });
    }
    return parts;
}

void maxwell_rotate(VectorField3& E, VectorField3& B, double dt, Backend b) {
    const Grid& g = E.grid();
    require_same_grid(g, B.grid(), "maxwell_rotate");
    std::array<std::vector<cplx>, 3> e{fft_forward_real(E[0]), fft_forward_real(E[1]),
                                       fft_forward_real(E[2])};
    std::array<std::vector<cplx>, 3> bb{fft_forward_real(B[0]), fft_forward_real(B[1]),
                                        fft_forward_real(B[2])};
    const int n1 = g.n[1], n2 = g.n[2];
    parallel_for(g.cells(), [&](std::size_t i) {
        int m2 = int(i % n2);
        int m1 = int((i / n2) % n1);
        int m0 = int(i / (std::size_t(n1) * n2));
        const double k[3] = {deriv_kappa(b, m0, g.n[0], g.box[0]),
                             deriv_kappa(b, m1, g.n[1], g.box[1]),
                             deriv_kappa(b, m2, g.n[2], g.box[2])};
        const double w = std::sqrt(k[0] * k[0] + k[1] * k[1] + k[2] * k[2]);
        if (w == 0.0) return;
        const double c = std::cos(w * dt), sw = std::sin(w * dt) / w;
        cplx ev[3] = {e[0][i], e[1][i], e[2][i]};
        cplx bv[3] = {bb[0][i], bb[1][i], bb[2][i]};
        cplx ke = (k[0] * ev[0] + k[1] * ev[1] + k[2] * ev[2]) / (w * w);
        cplx kb = (k[0] * bv[0] + k[1] * bv[1] + k[2] * bv[2]) / (w * w);
        // i k x v
        auto crossi = [&](const cplx* v, int a) {
            int a1 = (a + 1) % 3, a2 = (a + 2) % 3;
            return cplx(0.0, 1.0) * (k[a1] * v[a2] - k[a2] * v[a1]);
        };
        for (int a = 0; a < 3; ++a) {
            e[a][i] = ev[a] * c + k[a] * ke * (1.0 - c) + sw * crossi(bv, a);
            bb[a][i] = bv[a] * c + k[a] * kb * (1.0 - c) - sw * crossi(ev, a);
        }
    });
    for (int a = 0; a < 3; ++a) {
        fft_backward_real(g, e[a], E[a]);
        fft_backward_real(g, bb[a], B[a]);
    }
}

void spectral_filter(ScalarField& f, double gamma, int order) {
    if (gamma <= 0.0) return;
    const Grid& g = f.grid();
    std::vector<cplx> hat = fft_forward_real(f);
    for_modes(g, hat, [&](cplx& h, int m0, int m1, int m2) {
        double att = 0.0;
        const int m[3] = {m0, m1, m2};
        for (int a = 0; a < 3; ++a) {
            if (g.n[a] == 1) continue;
            double r = std::abs(double(signed_mode(m[a], g.n[a]))) / (g.n[a] / 2.0);
            att += gamma * std::pow(r, order);
        }
        if (att > 0.0) h *= std::exp(-att);
    });
    fft_backward_real(g, hat, f);
}

}  // namespace mkgm
