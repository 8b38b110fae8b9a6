#pragma once

#include "fga/grid.hpp"
#include "fga/medium.hpp"
#include "fga/parallel.hpp"
#include "fga/synthesis.hpp"
#include "fga/types.hpp"

#include <fftw3.h>

#include <array>
#include <cmath>
#include <vector>

namespace fga {

// Periodic box [0, L)^3 sampled at x_j = j L / N.
inline Grid3 periodic_grid(double L, int N) { return Grid3::uniform(Vec3::Zero(), L / N, {N, N, N}); }

// Fourier coefficients with u(x) = sum_k u_hat(k) exp(i k.x).
struct SpectralState {
    Grid3 grid;
    double t = 0.0;
    std::vector<cd> u_hat;  // 3 per mode
    std::vector<cd> v_hat;  // 3 per mode; empty means zero velocity
    double c_p = 0.0, c_s = 0.0;
    double rho = 1.0, lam = 0.0, mu = 0.0;
};

namespace detail {

class Fft3 {
public:
    Fft3(std::array<int, 3> n, std::vector<cd>& buf, int sign) {
        plan_ = fftw_plan_dft_3d(n[0], n[1], n[2], reinterpret_cast<fftw_complex*>(buf.data()),
                                 reinterpret_cast<fftw_complex*>(buf.data()), sign, FFTW_ESTIMATE);
    }
    ~Fft3() { fftw_destroy_plan(plan_); }
    Fft3(const Fft3&) = delete;
    Fft3& operator=(const Fft3&) = delete;
    void run() { fftw_execute(plan_); }

private:
    fftw_plan plan_;
};

inline std::array<int, 3> dims(const Grid3& g) { return {g.axes[0].n, g.axes[1].n, g.axes[2].n}; }

// Angular wavenumber of FFT index m along an axis of n points and length L.
inline double wavenumber(int m, int n, double L) {
    const int s = m <= n / 2 ? m : m - n;
    return 2.0 * kPi * s / L;
}

inline Vec3 mode_k(const Grid3& g, std::size_t idx) {
    const int n0 = g.axes[0].n, n1 = g.axes[1].n, n2 = g.axes[2].n;
    const int k = static_cast<int>(idx % n2), j = static_cast<int>((idx / n2) % n1),
              i = static_cast<int>(idx / (static_cast<std::size_t>(n1) * n2));
    return {wavenumber(i, n0, n0 * g.axes[0].spacing), wavenumber(j, n1, n1 * g.axes[1].spacing),
            wavenumber(k, n2, n2 * g.axes[2].spacing)};
}

inline std::vector<cd> forward_components(const std::vector<cd>& f, const Grid3& g) {
    const std::size_t N = g.size();
    std::vector<cd> out(3 * N), buf(N);
    Fft3 plan(dims(g), buf, FFTW_FORWARD);
    for (int c = 0; c < 3; ++c) {
        for (std::size_t i = 0; i < N; ++i) buf[i] = f[3 * i + c];
        plan.run();
        const double s = 1.0 / static_cast<double>(N);
        for (std::size_t i = 0; i < N; ++i) out[3 * i + c] = buf[i] * s;
    }
    return out;
}

inline void require_constant(const MediumModel& m) {
    if (!m.is_constant())
        throw Error(ErrorCode::VariableMediumUnsupported, "the exact solver needs a constant medium");
}

}  // namespace detail

inline SpectralState make_spectral_state(const VectorField& u0, const VectorField* u1,
                                         const MediumModel& medium) {
    detail::require_constant(medium);
    const Speeds c = eval_speeds(medium, Vec3::Zero());
    SpectralState s;
    s.grid = u0.grid;
    s.c_p = c.c_p;
    s.c_s = c.c_s;
    s.rho = medium.rho0;
    s.lam = medium.lam;
    s.mu = medium.mu;
    s.u_hat = detail::forward_components(u0.data, u0.grid);
    if (u1) {
        if (!(u1->grid == u0.grid)) throw Error(ErrorCode::GridMismatch, "u0 and u1 grids differ");
        s.v_hat = detail::forward_components(u1->data, u1->grid);
    }
    return s;
}

// Curl-free and divergence-free parts; the k = 0 mode goes to the second.
inline std::pair<VectorField, VectorField> helmholtz_split(const VectorField& u) {
    const Grid3& g = u.grid;
    const std::size_t N = g.size();
    const std::vector<cd> uh = detail::forward_components(u.data, g);
    VectorField up(g), us(g);
    std::vector<cd> buf(N);
    detail::Fft3 inv(detail::dims(g), buf, FFTW_BACKWARD);
    std::vector<cd> php(3 * N);
    for (std::size_t i = 0; i < N; ++i) {
        const Vec3 k = detail::mode_k(g, i);
        const double kk = k.squaredNorm();
        if (kk == 0.0) continue;
        const CVec3 v(uh[3 * i], uh[3 * i + 1], uh[3 * i + 2]);
        const CVec3 p = k.cast<cd>() * (k.cast<cd>().dot(v) / kk);
        for (int c = 0; c < 3; ++c) php[3 * i + c] = p(c);
    }
    for (int c = 0; c < 3; ++c) {
        for (std::size_t i = 0; i < N; ++i) buf[i] = php[3 * i + c];
        inv.run();
        for (std::size_t i = 0; i < N; ++i) {
            up.at(i, c) = buf[i];
            us.at(i, c) = u.at(i, c) - buf[i];
        }
    }
    return {up, us};
}

namespace detail {

// Evolves one mode (u0, v0) with wavevector k over time T.
inline void evolve(const CVec3& u0, const CVec3& v0, const Vec3& k, double c_p, double c_s, double T,
                   CVec3& u, CVec3& v) {
    const double kn = k.norm();
    if (kn == 0.0) {
        u = u0 + T * v0;
        v = v0;
        return;
    }
    const CVec3 kh = (k / kn).cast<cd>();
    const CVec3 up = kh * kh.dot(u0), vp = kh * kh.dot(v0);
    const CVec3 us = u0 - up, vs = v0 - vp;
    auto part = [&](const CVec3& a, const CVec3& b, double c, CVec3& ua, CVec3& va) {
        const double w = c * kn, cs = std::cos(w * T), sn = std::sin(w * T);
        ua = cs * a + (sn / w) * b;
        va = -w * sn * a + cs * b;
    };
    CVec3 uP, vP, uS, vS;
    part(up, vp, c_p, uP, vP);
    part(us, vs, c_s, uS, vS);
    u = uP + uS;
    v = vP + vS;
}

// (u_hat(T), v_hat(T)) of one mode.
inline void evolve_mode(const SpectralState& s, std::size_t i, double T, CVec3& u, CVec3& v) {
    const CVec3 u0(s.u_hat[3 * i], s.u_hat[3 * i + 1], s.u_hat[3 * i + 2]);
    const CVec3 v0 = s.v_hat.empty() ? CVec3::Zero()
                                     : CVec3(s.v_hat[3 * i], s.v_hat[3 * i + 1], s.v_hat[3 * i + 2]);
    evolve(u0, v0, mode_k(s.grid, i), s.c_p, s.c_s, T, u, v);
}

inline cd component_of(const CVec3& u, const CVec3& v, const Vec3& k, int comp) {
    const CVec3 ik = kI * k.cast<cd>();
    if (comp < 3) return u(comp);
    if (comp < 6) return v(comp - 3);
    if (comp == 6) return ik(0) * u(0) + ik(1) * u(1) + ik(2) * u(2);
    return cross(ik, u)(comp - 7);
}

}  // namespace detail

inline SpectralState propagate_state(const SpectralState& s, double T) {
    SpectralState r = s;
    r.t = s.t + T;
    const std::size_t N = s.grid.size();
    r.v_hat.assign(3 * N, cd{});
    parallel_for(N, [&](std::size_t i) {
        CVec3 u, v;
        detail::evolve_mode(s, i, T, u, v);
        for (int c = 0; c < 3; ++c) {
            r.u_hat[3 * i + c] = u(c);
            r.v_hat[3 * i + c] = v(c);
        }
    });
    return r;
}

// Output component order: u0..u2, du_dt0..2, div, curl0..2.
inline constexpr int kFieldComponents = 10;

// Fills buf (full periodic grid) with component `comp` of the solution at
// time s.t + T.
inline void exact_component(const SpectralState& s, double T, int comp, std::vector<cd>& buf) {
    const std::size_t N = s.grid.size();
    buf.assign(N, cd{});
    parallel_for(N, [&](std::size_t i) {
        CVec3 u, v;
        detail::evolve_mode(s, i, T, u, v);
        buf[i] = detail::component_of(u, v, detail::mode_k(s.grid, i), comp);
    });
    detail::Fft3 inv(detail::dims(s.grid), buf, FFTW_BACKWARD);
    inv.run();
}

// Component `comp` at time T of the periodic solution whose initial data
// are the periodization of closed-form Gaussian data; the Fourier
// coefficients are taken analytically, so the data never touch the grid.
inline void exact_gaussian_component(const GaussianData& d, double eps, const MediumModel& medium,
                                     const Grid3& box, double T, int comp, std::vector<cd>& buf) {
    detail::require_constant(medium);
    const Speeds c = eval_speeds(medium, Vec3::Zero());
    const std::size_t N = box.size();
    const double vol = static_cast<double>(N) * box.cell_volume();
    const cd scale = d.amplitude * std::pow(2.0 * kPi * d.sigma * d.sigma, 1.5) / vol;
    const Vec3 k0 = d.k / eps;
    buf.assign(N, cd{});
    parallel_for(N, [&](std::size_t i) {
        const Vec3 k = detail::mode_k(box, i);
        const double g = -0.5 * d.sigma * d.sigma * (k - k0).squaredNorm();
        if (g < -745.0) return;
        const cd s = scale * std::exp(cd(g, -k.dot(d.center - box.point(0, 0, 0))));
        const CVec3 u0 = d.polarization * s, v0 = u0 * (d.u1_factor / eps);
        CVec3 u, v;
        detail::evolve(u0, v0, k, c.c_p, c.c_s, T, u, v);
        buf[i] = detail::component_of(u, v, k, comp);
    });
    detail::Fft3 inv(detail::dims(box), buf, FFTW_BACKWARD);
    inv.run();
}

inline std::vector<cd>& field_slot(WaveField& w, int comp, int& stride, int& offset) {
    if (comp < 3) { stride = 3; offset = comp; return w.u; }
    if (comp < 6) { stride = 3; offset = comp - 3; return w.du_dt; }
    if (comp == 6) { stride = 1; offset = 0; return w.div_u; }
    stride = 3;
    offset = comp - 7;
    return w.curl_u;
}

// Exact solution with derived fields at time s.t + T on the full box.
inline WaveField exact_propagate(const SpectralState& s, double T, double eps = 0.0) {
    WaveField w(s.grid, eps, true);
    w.t = s.t + T;
    std::vector<cd> buf;
    for (int comp = 0; comp < kFieldComponents; ++comp) {
        exact_component(s, T, comp, buf);
        int stride, offset;
        std::vector<cd>& dst = field_slot(w, comp, stride, offset);
        for (std::size_t i = 0; i < buf.size(); ++i) dst[stride * i + offset] = buf[i];
    }
    return w;
}

inline WaveField exact_propagate(const SpectralState& s, double T, const MediumModel& medium,
                                 double eps = 0.0) {
    detail::require_constant(medium);
    return exact_propagate(s, T, eps);
}

// Elastic energy  int rho|u_t|^2 + (lam + 2 mu)|div u|^2 + mu|curl u|^2 dx
// evaluated mode by mode.
inline double spectral_energy(const SpectralState& s) {
    const double vol = static_cast<double>(s.grid.size()) * s.grid.cell_volume();
    const double e = deterministic_sum<double>(s.grid.size(), [&](std::size_t i) {
        const CVec3 u(s.u_hat[3 * i], s.u_hat[3 * i + 1], s.u_hat[3 * i + 2]);
        const CVec3 v = s.v_hat.empty() ? CVec3::Zero()
                                        : CVec3(s.v_hat[3 * i], s.v_hat[3 * i + 1], s.v_hat[3 * i + 2]);
        const CVec3 k = detail::mode_k(s.grid, i).cast<cd>();
        const cd div = k(0) * u(0) + k(1) * u(1) + k(2) * u(2);
        return s.rho * v.squaredNorm() + (s.lam + 2.0 * s.mu) * std::norm(div) +
               s.mu * cross(k, u).squaredNorm();
    });
    return e * vol;
}

// Same functional from grid fields.
inline double grid_energy(const WaveField& w, const MediumModel& m) {
    if (!w.has_derived()) throw Error(ErrorCode::MissingDerivedFields, "energy needs derived fields");
    const NormParts n = norm_parts(w);
    return m.rho0 * n.du_dt + (m.lam + 2.0 * m.mu) * n.div + m.mu * n.curl;
}

}  // namespace fga
