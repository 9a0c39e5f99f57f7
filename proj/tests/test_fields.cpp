#include <doctest.h>

#include <random>

#include "mkgm/calculus.hpp"
#include "mkgm/harness.hpp"
#include "mkgm/kgm.hpp"
#include "mkgm/norms.hpp"
#include "mkgm/tensor.hpp"

using namespace mkgm;

namespace {
constexpr double kTwoPi = 6.283185307179586476925286766559;

ScalarField sine_x(GridPtr g, int mode = 1) {
    ScalarField f(g);
    const Grid& gr = *g;
    for (int ix = 0; ix < gr.n[0]; ++ix)
        for (int iy = 0; iy < gr.n[1]; ++iy)
            for (int iz = 0; iz < gr.n[2]; ++iz)
                f.at(ix, iy, iz) = std::sin(kTwoPi * mode * gr.coord(0, ix) / gr.box[0]);
    return f;
}
}  // namespace

TEST_CASE("raise_lower flips the time component and is a bitwise involution") {
    GridPtr g = make_grid({8, 4, 2}, {1.0, 1.0, 1.0});
    FourVectorField X(g, IndexPos::upper);
    X.t.fill(1.0);
    FourVectorField Xl = raise_lower(X);
    CHECK(Xl.pos == IndexPos::lower);
    CHECK(Xl.t[0] == -1.0);
    CHECK(Xl.x[0][0] == 0.0);

    // X^a = (2,1,0,0): X_a X^a = -4 + 1 = -3
    FourVectorField Y(g, IndexPos::upper);
    Y.t.fill(2.0);
    Y.x[0].fill(1.0);
    FourVectorField Yl = raise_lower(Y);
    double contraction = Yl.t[0] * Y.t[0] + Yl.x[0][0] * Y.x[0][0];
    CHECK(contraction == -3.0);

    std::mt19937_64 rng(3);
    FourVectorField R(g, IndexPos::lower);
    R.t = random_smooth_scalar(g, rng, 2, 1.0);
    R.x = random_smooth_vector(g, rng, 2, 1.0);
    FourVectorField RR = raise_lower(raise_lower(R));
    CHECK(RR.pos == R.pos);
    for (std::size_t i = 0; i < R.size(); ++i) {
        CHECK(RR.t[i] == R.t[i]);
        for (int a = 0; a < 3; ++a) CHECK(RR.x[a][i] == R.x[a][i]);
    }
}

TEST_CASE("faraday packing matches the component matrix") {
    GridPtr g = make_grid({4, 2, 2}, {1.0, 1.0, 1.0});
    VectorField3 E(g), B(g);
    E[0].fill(1.0);
    FaradayField F = faraday_pack(E, B);
    CHECK(F.lower(0, 1, 0) == 1.0);
    CHECK(F.lower(1, 0, 0) == -1.0);
    CHECK(F.lower(1, 2, 0) == 0.0);
    CHECK(F.lower(2, 3, 0) == 0.0);
    ScalarField s = faraday_scalar(F);
    CHECK(s[0] == doctest::Approx(-2.0).epsilon(1e-15));

    VectorField3 E2(g), B2(g);
    B2[2].fill(1.0);
    FaradayField F2 = faraday_pack(E2, B2);
    CHECK(F2.lower(1, 2, 0) == -1.0);
    CHECK(F2.lower(2, 1, 0) == 1.0);
    CHECK(faraday_scalar(F2)[0] == doctest::Approx(2.0).epsilon(1e-15));

    // pack/unpack is identity on the stored pair
    for (std::size_t i = 0; i < F2.size(); ++i)
        for (int a = 0; a < 3; ++a) {
            CHECK(F2.E[a][i] == E2[a][i]);
            CHECK(F2.B[a][i] == B2[a][i]);
        }
    // antisymmetry of the accessor
    std::mt19937_64 rng(5);
    FaradayField FR = faraday_pack(random_smooth_vector(g, rng, 1, 1.0),
                                   random_smooth_vector(g, rng, 1, 1.0));
    for (int a = 0; a < 4; ++a)
        for (int b = 0; b < 4; ++b)
            CHECK(FR.lower(a, b, 3) == -FR.lower(b, a, 3));
}

TEST_CASE("derivatives: Fourier mode, constants, collapsed axes") {
    GridPtr g = make_grid({64, 1, 1}, {2.0, 1.0, 1.0});
    ScalarField f = sine_x(g);
    for (Backend b : {Backend::spectral, Backend::fd2, Backend::fd4}) {
        ScalarField c(g);
        c.fill(3.5);
        ScalarField dc = derivative(c, 0, b);
        CHECK(norm(dc, NormKind::Linf) <= 1e-13);
        ScalarField dy = derivative(f, 1, b);
        CHECK(norm(dy, NormKind::Linf) == 0.0);
    }
    ScalarField dx = derivative(f, 0, Backend::spectral);
    const double k = kTwoPi / g->box[0];
    for (int ix = 0; ix < g->n[0]; ++ix) {
        double expect = k * std::cos(k * g->coord(0, ix));
        CHECK(dx.at(ix, 0, 0) == doctest::Approx(expect).epsilon(1e-11));
    }
}

TEST_CASE("curl of gradients and divergence of curls vanish") {
    std::mt19937_64 rng(7);
    GridPtr g = make_grid({24, 12, 6}, {1.0, 1.5, 0.75});
    ScalarField phi = random_smooth_scalar(g, rng, 2, 1.0);
    VectorField3 v = random_smooth_vector(g, rng, 2, 1.0);
    for (Backend b : {Backend::spectral, Backend::fd2, Backend::fd4}) {
        double cg = norm(curl(gradient(phi, b), b), NormKind::Linf);
        double dc = norm(divergence(curl(v, b), b), NormKind::Linf);
        double scale = std::max(norm(gradient(phi, b), NormKind::Linf), 1.0);
        CHECK(cg <= 1e-10 * scale);
        CHECK(dc <= 1e-10 * std::max(norm(v, NormKind::Linf) / g->min_dx(), 1.0));
    }
}

TEST_CASE("quadrature norms on simple fields") {
    GridPtr g = make_grid({32, 4, 2}, {2.0, 1.5, 0.5});
    const double V = g->volume();
    ScalarField one(g);
    one.fill(1.0);
    CHECK(norm(one, NormKind::L1) == doctest::Approx(V).epsilon(1e-14));
    CHECK(norm(one, NormKind::L2) == doctest::Approx(std::sqrt(V)).epsilon(1e-14));

    GridPtr g1 = make_grid({64, 1, 1}, {1.0, 2.0, 3.0});
    ScalarField s = sine_x(g1);
    double l2sq = norm(s, NormKind::L2);
    l2sq *= l2sq;
    CHECK(l2sq == doctest::Approx(0.5 * 2.0 * 3.0).epsilon(1e-12));
}

TEST_CASE("poisson solve per backend") {
    GridPtr g = make_grid({64, 1, 1}, {2.0, 1.0, 1.0});
    ScalarField s = sine_x(g);
    ScalarField phi = poisson_solve(s, Backend::spectral);
    const double c = g->box[0] / kTwoPi;
    for (int ix = 0; ix < g->n[0]; ix += 7) {
        double expect = -c * c * std::sin(kTwoPi * g->coord(0, ix) / g->box[0]);
        CHECK(phi.at(ix, 0, 0) == doctest::Approx(expect).epsilon(1e-11));
    }
    ScalarField zero(g);
    CHECK(norm(poisson_solve(zero, Backend::spectral), NormKind::Linf) == 0.0);

    std::mt19937_64 rng(9);
    GridPtr g3 = make_grid({16, 12, 8}, {1.0, 1.0, 1.0});
    ScalarField r = random_smooth_scalar(g3, rng, 2, 1.0);
    const double rb = mean(r);
    parallel_for(r.size(), [&](std::size_t i) { r[i] -= rb; });
    for (Backend b : {Backend::spectral, Backend::fd2, Backend::fd4}) {
        ScalarField p = poisson_solve(r, b);
        ScalarField lap = laplacian(p, b);
        double res = chunked_max(r.size(), [&](std::size_t i) { return std::abs(lap[i] - r[i]); });
        CHECK(res <= 1e-10 * norm(r, NormKind::Linf));
        CHECK(std::abs(mean(p)) <= 1e-12 * std::max(norm(p, NormKind::Linf), 1e-30));
    }

    ScalarField bad(g3);
    bad.fill(0.25);
    CHECK_THROWS_WITH_AS(poisson_solve(bad, Backend::spectral),
                         doctest::Contains("mean"), std::invalid_argument);
}

TEST_CASE("helmholtz decomposition invariants") {
    std::mt19937_64 rng(21);
    GridPtr g = make_grid({20, 10, 6}, {1.0, 1.0, 1.0});
    for (Backend b : {Backend::spectral, Backend::fd2, Backend::fd4}) {
        ScalarField phi = random_smooth_scalar(g, rng, 2, 1.0);
        const double pb = mean(phi);
        parallel_for(phi.size(), [&](std::size_t i) { phi[i] -= pb; });
        VectorField3 gphi = gradient(phi, b);
        HelmholtzParts parts = helmholtz_decompose(gphi, b);
        double scale = std::max(norm(gphi, NormKind::Linf), 1e-30);
        CHECK(norm(parts.div_free, NormKind::Linf) <= 1e-10 * scale);

        VectorField3 c(g);
        c[0].fill(0.7);
        c[1].fill(-0.3);
        HelmholtzParts pc = helmholtz_decompose(c, b);
        CHECK(norm(pc.curl_free, NormKind::Linf) <= 1e-14);
        CHECK(pc.div_free[0][0] == doctest::Approx(0.7).epsilon(1e-13));

        VectorField3 v = random_smooth_vector(g, rng, 2, 1.0);
        HelmholtzParts pv = helmholtz_decompose(v, b);
        double vnorm2 = inner(v, v);
        CHECK(std::abs(inner(pv.curl_free, pv.div_free)) <= 1e-10 * vnorm2);
        double recon = chunked_max(v.size(), [&](std::size_t i) {
            double m = 0.0;
            for (int a = 0; a < 3; ++a)
                m = std::max(m, std::abs(pv.curl_free[a][i] + pv.div_free[a][i] - v[a][i]));
            return m;
        });
        CHECK(recon <= 1e-12 * std::max(norm(v, NormKind::Linf), 1.0));
        CHECK(norm(divergence(pv.div_free, b), NormKind::Linf) <=
              1e-10 * norm(v, NormKind::Linf) / g->min_dx());
        CHECK(norm(curl(pv.curl_free, b), NormKind::Linf) <=
              1e-10 * norm(v, NormKind::Linf) / g->min_dx());
    }
}

TEST_CASE("gauge transform leaves modulus and magnetic field invariant") {
    std::mt19937_64 rng(23);
    GridPtr g = make_grid({32, 8, 1}, {1.0, 1.0, 1.0});
    ComplexField phi = random_smooth_complex(g, rng, 2, 1.0);
    VectorField3 A = random_smooth_vector(g, rng, 2, 0.5);
    const double eps = 0.25;

    ScalarField chi0(g);
    GaugePair id = gauge_transform(phi, A, chi0, eps, Backend::spectral);
    for (std::size_t i = 0; i < phi.size(); ++i) {
        CHECK(id.phi[i] == phi[i]);
        CHECK(id.A[0][i] == A[0][i]);
    }

    ScalarField chic(g);
    chic.fill(0.8);
    GaugePair cp = gauge_transform(phi, A, chic, eps, Backend::spectral);
    for (std::size_t i = 0; i < phi.size(); i += 37) {
        CHECK(cp.A[0][i] == A[0][i]);
        CHECK(std::abs(std::abs(cp.phi[i]) - std::abs(phi[i])) <=
              1e-14 * std::max(std::abs(phi[i]), 1e-30));
    }

    ScalarField chi = random_smooth_scalar(g, rng, 2, 0.7);
    GaugePair gp = gauge_transform(phi, A, chi, eps, Backend::spectral);
    VectorField3 c0 = curl(A, Backend::spectral);
    VectorField3 c1 = curl(gp.A, Backend::spectral);
    double gap = chunked_max(c0.size(), [&](std::size_t i) {
        double m = 0.0;
        for (int a = 0; a < 3; ++a) m = std::max(m, std::abs(c0[a][i] - c1[a][i]));
        return m;
    });
    CHECK(gap <= 1e-10 * std::max(norm(c0, NormKind::Linf), 1.0));
}

TEST_CASE("EM stress tensor values") {
    GridPtr g = make_grid({4, 2, 2}, {1.0, 1.0, 1.0});
    VectorField3 E(g), B(g);
    E[0].fill(1.0);
    B[1].fill(1.0);
    StressTensorField T(g);
    FaradayField F = faraday_pack(E, B);
    add_em_stress(T, F, F, 1.0);
    CHECK(T.at(0, 0, 0) == doctest::Approx(1.0).epsilon(1e-14));
}

TEST_CASE("stress divergence residual refines at 2nd order on a vacuum wave") {
    auto res_of = [](int n) {
        GridPtr g = make_grid({n, 1, 1}, {1.0, 1.0, 1.0});
        const double kTwoPi2 = 6.283185307179586476925286766559;
        const double dt = 0.2 / n;
        auto wave_at = [&](double t) {
            VectorField3 E(g), B(g);
            for (int ix = 0; ix < g->n[0]; ++ix) {
                double f = std::sin(kTwoPi2 * (g->coord(0, ix) - t));
                E[1].at(ix, 0, 0) = f;
                B[2].at(ix, 0, 0) = f;
            }
            StressTensorField T(g);
            FaradayField F = faraday_pack(E, B);
            add_em_stress(T, F, F, 1.0);
            return T;
        };
        FourVectorField r = stress_divergence_residual(wave_at(0.0), wave_at(dt), wave_at(2 * dt),
                                                       dt, Backend::fd2);
        double m = norm(r.t, NormKind::Linf);
        for (int a = 0; a < 3; ++a) m = std::max(m, norm(r.x[a], NormKind::Linf));
        return m;
    };
    double r1 = res_of(32);
    double r2 = res_of(64);
    CHECK(r1 / r2 > 3.2);
    CHECK(r1 / r2 < 4.8);

    // vacuum: identically zero
    GridPtr g = make_grid({8, 4, 1}, {1.0, 1.0, 1.0});
    StressTensorField Z(g);
    FourVectorField rz = stress_divergence_residual(Z, Z, Z, 0.1, Backend::spectral);
    CHECK(norm(rz.t, NormKind::Linf) == 0.0);
}
