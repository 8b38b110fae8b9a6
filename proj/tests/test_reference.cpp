#include "fga/reference.hpp"

#include <gtest/gtest.h>

#include <random>

using namespace fga;

namespace {

MediumModel homogeneous() { return MediumModel::constant(2.0, 1.0, 1.0); }

double max_abs(const std::vector<cd>& v) {
    double m = 0.0;
    for (const cd& x : v) m = std::max(m, std::abs(x));
    return m;
}

double rel(const std::vector<cd>& a, const std::vector<cd>& b) {
    double num = 0.0, den = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        num += std::norm(a[i] - b[i]);
        den += std::norm(b[i]);
    }
    return std::sqrt(num / den);
}

// Random low-mode trigonometric field on [0, 2 pi)^3.
VectorField random_smooth(const Grid3& g, unsigned seed) {
    std::mt19937 rng(seed);
    std::normal_distribution<double> n;
    std::uniform_int_distribution<int> m(-3, 3);
    VectorField u(g);
    for (int t = 0; t < 12; ++t) {
        const Vec3 k(m(rng), m(rng), m(rng));
        const CVec3 a(cd(n(rng), n(rng)), cd(n(rng), n(rng)), cd(n(rng), n(rng)));
        for (std::size_t i = 0; i < g.size(); ++i) {
            const cd ph = std::exp(kI * k.dot(g.point(i)));
            for (int c = 0; c < 3; ++c) u.at(i, c) += a(c) * ph;
        }
    }
    return u;
}

// Windowed packet centred in the box, below 1e-12 at the boundary.
VectorField packet(const Grid3& g, const Vec3& k, const CVec3& pol) {
    VectorField u(g);
    const Vec3 c = Vec3::Constant(kPi);
    for (std::size_t i = 0; i < g.size(); ++i) {
        const Vec3 r = g.point(i) - c;
        const cd v = std::exp(cd(-r.squaredNorm() / (2 * 0.35 * 0.35), k.dot(r)));
        for (int c3 = 0; c3 < 3; ++c3) u.at(i, c3) = pol(c3) * v;
    }
    return u;
}

VectorField field_u(const WaveField& w) {
    VectorField f(w.grid);
    f.data = w.u;
    return f;
}

}  // namespace

TEST(Helmholtz, GradientIsCurlFree) {
    const Grid3 g = periodic_grid(2 * kPi, 24);
    VectorField u(g);
    for (std::size_t i = 0; i < g.size(); ++i) {
        const Vec3 x = g.point(i);
        // grad of sin(x) cos(2y) + cos(3z - x)
        u.at(i, 0) = std::cos(x(0)) * std::cos(2 * x(1)) + std::sin(3 * x(2) - x(0));
        u.at(i, 1) = -2.0 * std::sin(x(0)) * std::sin(2 * x(1));
        u.at(i, 2) = -3.0 * std::sin(3 * x(2) - x(0));
    }
    const auto [up, us] = helmholtz_split(u);
    EXPECT_LE(max_abs(us.data), 1e-12);
    EXPECT_LE(rel(up.data, u.data), 1e-13);
}

TEST(Helmholtz, CurlIsDivergenceFree) {
    const Grid3 g = periodic_grid(2 * kPi, 24);
    VectorField u(g);
    for (std::size_t i = 0; i < g.size(); ++i) {
        const Vec3 x = g.point(i);
        // curl of A = (0, 0, sin(x + y)) + (cos(2z), 0, 0)
        u.at(i, 0) = std::cos(x(0) + x(1));
        u.at(i, 1) = -std::cos(x(0) + x(1)) - 2.0 * std::sin(2 * x(2));
        u.at(i, 2) = 0.0;
    }
    const auto [up, us] = helmholtz_split(u);
    EXPECT_LE(max_abs(up.data), 1e-12);
}

TEST(Helmholtz, PartsAddUp) {
    const Grid3 g = periodic_grid(2 * kPi, 16);
    const VectorField u = random_smooth(g, 4);
    const auto [up, us] = helmholtz_split(u);
    std::vector<cd> sum(u.data.size());
    for (std::size_t i = 0; i < sum.size(); ++i) sum[i] = up.data[i] + us.data[i];
    EXPECT_LE(rel(sum, u.data), 1e-12);
}

TEST(Exact, ZeroTimeReturnsInitialData) {
    const Grid3 g = periodic_grid(2 * kPi, 16);
    const VectorField u0 = random_smooth(g, 1), u1 = random_smooth(g, 2);
    const WaveField w = exact_propagate(make_spectral_state(u0, &u1, homogeneous()), 0.0, homogeneous());
    EXPECT_LE(rel(w.u, u0.data), 1e-13);
    EXPECT_LE(rel(w.du_dt, u1.data), 1e-13);
}

TEST(Exact, DivergenceFreePlaneWaveStands) {
    const Grid3 g = periodic_grid(2 * kPi, 16);
    const Vec3 k(1, 2, 0);
    const CVec3 pol = CVec3(2, -1, 0.5);  // pol . k = 0
    VectorField u0(g);
    for (std::size_t i = 0; i < g.size(); ++i)
        for (int c = 0; c < 3; ++c) u0.at(i, c) = pol(c) * std::exp(kI * k.dot(g.point(i)));
    const SpectralState s = make_spectral_state(u0, nullptr, homogeneous());
    for (double T : {0.3, 1.7}) {
        const WaveField w = exact_propagate(s, T);
        std::vector<cd> expect = u0.data;
        for (auto& v : expect) v *= std::cos(1.0 * k.norm() * T);
        EXPECT_LE(max_abs([&] {
                      std::vector<cd> d(expect.size());
                      for (std::size_t i = 0; i < d.size(); ++i) d[i] = w.u[i] - expect[i];
                      return d;
                  }()),
                  1e-12);
        EXPECT_LE(max_abs(w.div_u), 1e-12);
    }
}

TEST(Exact, EnergyIsConserved) {
    const Grid3 g = periodic_grid(2 * kPi, 32);
    const VectorField u0 = packet(g, Vec3(3, 0, 4), CVec3(1, cd(0, 1), 0.3));
    const VectorField u1 = packet(g, Vec3(-2, 1, 0), CVec3(0, 0.5, 2));
    const auto m = MediumModel::constant(1.5, 0.8, 1.3);
    const SpectralState s = make_spectral_state(u0, &u1, m);
    const double e0 = spectral_energy(s);
    for (double T : {0.25, 1.0, 3.0}) {
        const SpectralState st = propagate_state(s, T);
        EXPECT_NEAR(spectral_energy(st), e0, 1e-10 * e0);
        EXPECT_NEAR(grid_energy(exact_propagate(s, T), m), e0, 1e-10 * e0);
    }
}

TEST(Exact, TimeReversibleAndSemigroup) {
    const Grid3 g = periodic_grid(2 * kPi, 16);
    const VectorField u0 = random_smooth(g, 5), u1 = random_smooth(g, 6);
    const SpectralState s = make_spectral_state(u0, &u1, homogeneous());
    const SpectralState back = propagate_state(propagate_state(s, 0.8), -0.8);
    EXPECT_LE(rel(back.u_hat, s.u_hat), 1e-10);
    EXPECT_LE(rel(back.v_hat, s.v_hat), 1e-10);
    const SpectralState two = propagate_state(propagate_state(s, 0.3), 0.9);
    const SpectralState one = propagate_state(s, 1.2);
    EXPECT_LE(rel(two.u_hat, one.u_hat), 1e-10);
    EXPECT_LE(rel(two.v_hat, one.v_hat), 1e-10);
    EXPECT_NEAR(two.t, 1.2, 1e-15);
}

TEST(Exact, PartsStaySeparate) {
    const Grid3 g = periodic_grid(2 * kPi, 16);
    const auto [up, us] = helmholtz_split(random_smooth(g, 7));
    for (double T : {0.4, 2.5}) {
        const WaveField wp = exact_propagate(make_spectral_state(up, nullptr, homogeneous()), T);
        const WaveField ws = exact_propagate(make_spectral_state(us, nullptr, homogeneous()), T);
        EXPECT_LE(max_abs(helmholtz_split(field_u(wp)).second.data), 1e-12 * max_abs(wp.u));
        EXPECT_LE(max_abs(helmholtz_split(field_u(ws)).first.data), 1e-12 * max_abs(ws.u));
        EXPECT_LE(max_abs(wp.curl_u), 1e-11);
    }
}

TEST(Exact, VariableMediumUnsupported) {
    const Grid3 g = periodic_grid(1.0, 4);
    const VectorField u(g);
    const auto lens = MediumModel::gaussian_density(2.0, 1.0, 1.0, 0.5, 0.6, Vec3::Zero());
    try {
        make_spectral_state(u, nullptr, lens);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::VariableMediumUnsupported);
    }
    const SpectralState s = make_spectral_state(u, nullptr, homogeneous());
    EXPECT_THROW(exact_propagate(s, 0.1, lens), Error);
}

TEST(Exact, ComponentStreamMatchesFullField) {
    const Grid3 g = periodic_grid(2 * kPi, 12);
    const VectorField u0 = random_smooth(g, 8), u1 = random_smooth(g, 9);
    const SpectralState s = make_spectral_state(u0, &u1, homogeneous());
    const WaveField w = exact_propagate(s, 0.7);
    std::vector<cd> buf;
    exact_component(s, 0.7, 6, buf);
    EXPECT_EQ(buf, w.div_u);
    exact_component(s, 0.7, 8, buf);
    for (std::size_t i = 0; i < buf.size(); ++i) EXPECT_EQ(buf[i], w.curl_u[3 * i + 1]);
}

TEST(Exact, ClosedFormGaussianMatchesSampledData) {
    const Grid3 g = periodic_grid(2 * kPi, 64);
    const double eps = 0.125;
    GaussianData d = GaussianData::coherent_state(eps, Vec3(3.0, 3.3, 2.9), Vec3(0.6, 0.0, 0.8), CVec3(1, cd(0, 0.5), -0.2));
    d.u1_factor = cd(0.3, -1.1);
    const auto m = MediumModel::constant(2.0, 1.0, 1.0);
    const VectorField u0 = d.sample_u0(eps, g), u1 = d.sample_u1(eps, g);
    const SpectralState s = make_spectral_state(u0, &u1, m);
    std::vector<cd> a, b;
    for (int comp = 0; comp < kFieldComponents; ++comp) {
        exact_component(s, 0.35, comp, a);
        exact_gaussian_component(d, eps, m, g, 0.35, comp, b);
        EXPECT_LE(rel(b, a), 1e-10) << comp;
    }
}
