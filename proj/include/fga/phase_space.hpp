#pragma once

#include "fga/grid.hpp"
#include "fga/medium.hpp"
#include "fga/parallel.hpp"
#include "fga/types.hpp"

#include <array>
#include <cmath>
#include <string>
#include <vector>

namespace fga {

struct PhasePoint {
    Vec3 q = Vec3::Zero();
    Vec3 p = Vec3::Zero();
};

struct CutoffRegion {
    double delta = 0.1;

    bool contains(const PhasePoint& z) const {
        const double pn = z.p.norm();
        return z.q.norm() <= 1.0 / delta && pn >= delta && pn <= 1.0 / delta;
    }
};

// Polarization frame (n_p, n_sv, n_sh) attached to a momentum direction.
struct Frame {
    Vec3 np = Vec3::UnitX();
    Vec3 nsv = Vec3::UnitY();
    Vec3 nsh = Vec3::UnitZ();
};

inline constexpr double kAxisTolerance = 1e-8;

// Reference axis for the SV direction: e3, or e1 when p is (anti)parallel to e3.
inline Vec3 reference_axis(const Vec3& p) {
    const Vec3 ph = unit(p);
    return ph.cross(Vec3::UnitZ()).norm() < kAxisTolerance ? Vec3::UnitX() : Vec3::UnitZ();
}

// n_sv is the part of `axis` orthogonal to p, n_sh = n_p x n_sv.
inline Frame convention_frame(const Vec3& p, const Vec3& axis) {
    Frame f;
    f.np = unit(p);
    const Vec3 w = axis - axis.dot(f.np) * f.np;
    if (w.norm() < kAxisTolerance)
        throw Error(ErrorCode::FrameDegenerate, "momentum is parallel to the frame reference axis");
    f.nsv = unit(w);
    f.nsh = f.np.cross(f.nsv);
    return f;
}

inline Frame initial_frame(const Vec3& p) { return convention_frame(p, reference_axis(p)); }

// L2-normalized coherent state (pi eps)^{-3/4} exp(i p.(x-q)/eps - |x-q|^2/(2 eps)).
inline cd gaussian_profile(double eps, const PhasePoint& z, const Vec3& x) {
    const Vec3 r = x - z.q;
    const double norm = std::pow(kPi * eps, -0.75);
    return norm * std::exp(cd(-r.squaredNorm() / (2.0 * eps), z.p.dot(r) / eps));
}

// Normalization of the FBI kernel; makes the transform an isometry in 3D.
inline double fbi_constant(double eps) { return std::pow(2.0, -1.5) * std::pow(kPi * eps, -2.25); }

// Multiplies a_n(t) * alpha_n inside the reconstruction sum.
inline double reconstruction_prefactor(double eps) {
    return std::pow(2.0 * kPi * eps, -4.5) / fbi_constant(eps);
}

// Initial amplitude of every branch.
inline double initial_amplitude() { return std::pow(2.0, 1.5); }

// Product grid over (q, p), stored per dimension as interleaved pairs:
// node (iq, ip) has flat index ((a0 * M1) + a1) * M2 + a2 with
// a_d = iq_d * np_d + ip_d and M_d = nq_d * np_d. Momentum nodes with
// |p| < exclusion_radius are inactive and carry zero weight.
struct PhaseMesh {
    std::array<Axis, 3> q_axes{};
    std::array<Axis, 3> p_axes{};
    double exclusion_radius = 0.0;

    int nq(int d) const { return q_axes[d].n; }
    int np(int d) const { return p_axes[d].n; }
    int pair_count(int d) const { return nq(d) * np(d); }
    std::size_t node_count() const {
        return static_cast<std::size_t>(pair_count(0)) * pair_count(1) * pair_count(2);
    }
    std::size_t q_count() const { return static_cast<std::size_t>(nq(0)) * nq(1) * nq(2); }
    std::size_t p_count() const { return static_cast<std::size_t>(np(0)) * np(1) * np(2); }

    double weight() const {
        double w = 1.0;
        for (int d = 0; d < 3; ++d) w *= q_axes[d].spacing * p_axes[d].spacing;
        return w;
    }
    Vec3 q(const std::array<int, 3>& iq) const {
        return {q_axes[0][iq[0]], q_axes[1][iq[1]], q_axes[2][iq[2]]};
    }
    Vec3 p(const std::array<int, 3>& ip) const {
        return {p_axes[0][ip[0]], p_axes[1][ip[1]], p_axes[2][ip[2]]};
    }
    std::size_t index(const std::array<int, 3>& iq, const std::array<int, 3>& ip) const {
        std::size_t idx = 0;
        for (int d = 0; d < 3; ++d)
            idx = idx * pair_count(d) + static_cast<std::size_t>(iq[d]) * np(d) + ip[d];
        return idx;
    }
    void decode(std::size_t idx, std::array<int, 3>& iq, std::array<int, 3>& ip) const {
        for (int d = 2; d >= 0; --d) {
            const int a = static_cast<int>(idx % pair_count(d));
            idx /= pair_count(d);
            iq[d] = a / np(d);
            ip[d] = a % np(d);
        }
    }
    std::size_t p_flat(const std::array<int, 3>& ip) const {
        return (static_cast<std::size_t>(ip[0]) * np(1) + ip[1]) * np(2) + ip[2];
    }
    std::array<int, 3> p_unflat(std::size_t f) const {
        return {static_cast<int>(f / (static_cast<std::size_t>(np(1)) * np(2))),
                static_cast<int>((f / np(2)) % np(1)), static_cast<int>(f % np(2))};
    }
    std::size_t q_flat(const std::array<int, 3>& iq) const {
        return (static_cast<std::size_t>(iq[0]) * nq(1) + iq[1]) * nq(2) + iq[2];
    }
    std::array<int, 3> q_unflat(std::size_t f) const {
        return {static_cast<int>(f / (static_cast<std::size_t>(nq(1)) * nq(2))),
                static_cast<int>((f / nq(2)) % nq(1)), static_cast<int>(f % nq(2))};
    }
    bool active(const std::array<int, 3>& ip) const { return p(ip).norm() >= exclusion_radius; }

    std::size_t active_node_count() const {
        std::size_t n = 0;
        for (std::size_t f = 0; f < p_count(); ++f)
            if (active(p_unflat(f))) ++n;
        return n * q_count();
    }

    // Largest |p| over active momentum nodes.
    double max_momentum() const {
        double m = 0.0;
        for (std::size_t f = 0; f < p_count(); ++f) {
            const auto ip = p_unflat(f);
            if (active(ip)) m = std::max(m, p(ip).norm());
        }
        return m;
    }

    // n nodes per dimension centred on (q0, p0) with spacings hq, hp.
    static PhaseMesh centered(const Vec3& q0, double hq, int nq_, const Vec3& p0, double hp,
                              int np_, double exclusion) {
        PhaseMesh m;
        for (int d = 0; d < 3; ++d) {
            m.q_axes[d] = Axis::centered(q0(d), hq, nq_);
            m.p_axes[d] = Axis::centered(p0(d), hp, np_);
        }
        m.exclusion_radius = exclusion;
        return m;
    }
};

namespace detail {

// Row-major complex matrices used for the separable contractions.
using RowMat = Eigen::Matrix<cd, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

// K(a, y) = exp(-i p (y - q)/eps - (y - q)^2 / (2 eps)) for pair a = (iq, ip).
inline RowMat fbi_kernel_1d(double eps, const Axis& qa, const Axis& pa, const Axis& ya) {
    RowMat K(qa.n * pa.n, ya.n);
    for (int iq = 0; iq < qa.n; ++iq)
        for (int ip = 0; ip < pa.n; ++ip)
            for (int iy = 0; iy < ya.n; ++iy) {
                const double r = ya[iy] - qa[iq];
                K(iq * pa.n + ip, iy) = std::exp(cd(-r * r / (2.0 * eps), -pa[ip] * r / eps));
            }
    return K;
}

inline void check_nyquist(double spacing, double eps, double pmax, const char* what) {
    if (pmax > 0.0 && spacing > kPi * eps / pmax)
        throw Error(ErrorCode::MeshTooCoarse, std::string(what) + " spacing " +
                                                  std::to_string(spacing) + " exceeds pi*eps/|p|max = " +
                                                  std::to_string(kPi * eps / pmax));
}

inline void zero_inactive(const PhaseMesh& mesh, std::vector<cd>& g) {
    if (mesh.exclusion_radius <= 0.0) return;
    parallel_for(mesh.node_count(), [&](std::size_t idx) {
        std::array<int, 3> iq, ip;
        mesh.decode(idx, iq, ip);
        if (!mesh.active(ip)) g[idx] = cd{};
    });
}

}  // namespace detail

// FBI transform of a scalar field sampled on grid `y`, evaluated on the mesh.
inline std::vector<cd> fbi_forward(double eps, const std::vector<cd>& f, const Grid3& y,
                                   const PhaseMesh& mesh) {
    using detail::RowMat;
    const double pmax = mesh.max_momentum();
    for (int d = 0; d < 3; ++d) detail::check_nyquist(y.axes[d].spacing, eps, pmax, "y-grid");
    const int ny0 = y.axes[0].n, ny1 = y.axes[1].n, ny2 = y.axes[2].n;
    const int M0 = mesh.pair_count(0), M1 = mesh.pair_count(1), M2 = mesh.pair_count(2);
    const RowMat K0 = detail::fbi_kernel_1d(eps, mesh.q_axes[0], mesh.p_axes[0], y.axes[0]);
    const RowMat K1 = detail::fbi_kernel_1d(eps, mesh.q_axes[1], mesh.p_axes[1], y.axes[1]);
    const RowMat K2 = detail::fbi_kernel_1d(eps, mesh.q_axes[2], mesh.p_axes[2], y.axes[2]);

    Eigen::Map<const RowMat> F(f.data(), static_cast<Eigen::Index>(ny0) * ny1, ny2);
    RowMat T1 = F * K2.transpose();  // [y0 y1][a2]
    RowMat T2(static_cast<Eigen::Index>(ny0), static_cast<Eigen::Index>(M1) * M2);
    parallel_for(ny0, [&](std::size_t i0) {
        Eigen::Map<const RowMat> slab(T1.data() + i0 * ny1 * M2, ny1, M2);
        Eigen::Map<RowMat> dst(T2.data() + i0 * static_cast<std::size_t>(M1) * M2, M1, M2);
        dst.noalias() = K1 * slab;
    });
    std::vector<cd> out(mesh.node_count());
    Eigen::Map<RowMat> O(out.data(), M0, static_cast<Eigen::Index>(M1) * M2);
    O.noalias() = K0 * T2;
    const double scale = fbi_constant(eps) * y.cell_volume();
    for (auto& v : out) v *= scale;
    return out;
}

// Adjoint transform: phase-space field g on the mesh to a field on grid x.
inline std::vector<cd> fbi_inverse(double eps, const std::vector<cd>& g, const PhaseMesh& mesh,
                                   const Grid3& x) {
    using detail::RowMat;
    const double pmax = mesh.max_momentum();
    for (int d = 0; d < 3; ++d) detail::check_nyquist(x.axes[d].spacing, eps, pmax, "x-grid");
    const int nx0 = x.axes[0].n, nx1 = x.axes[1].n, nx2 = x.axes[2].n;
    const int M0 = mesh.pair_count(0), M1 = mesh.pair_count(1), M2 = mesh.pair_count(2);
    // Adjoint kernels, transposed to [x][a].
    const RowMat A0 = detail::fbi_kernel_1d(eps, mesh.q_axes[0], mesh.p_axes[0], x.axes[0]).adjoint();
    const RowMat A1 = detail::fbi_kernel_1d(eps, mesh.q_axes[1], mesh.p_axes[1], x.axes[1]).adjoint();
    const RowMat A2 = detail::fbi_kernel_1d(eps, mesh.q_axes[2], mesh.p_axes[2], x.axes[2]).adjoint();

    std::vector<cd> gm = g;
    detail::zero_inactive(mesh, gm);
    Eigen::Map<const RowMat> G(gm.data(), static_cast<Eigen::Index>(M0) * M1, M2);
    RowMat T1 = G * A2.transpose();  // [a0 a1][x2]
    RowMat T2(static_cast<Eigen::Index>(M0), static_cast<Eigen::Index>(nx1) * nx2);
    parallel_for(M0, [&](std::size_t a0) {
        Eigen::Map<const RowMat> slab(T1.data() + a0 * M1 * nx2, M1, nx2);
        Eigen::Map<RowMat> dst(T2.data() + a0 * static_cast<std::size_t>(nx1) * nx2, nx1, nx2);
        dst.noalias() = A1 * slab;
    });
    std::vector<cd> out(x.size());
    Eigen::Map<RowMat> O(out.data(), nx0, static_cast<Eigen::Index>(nx1) * nx2);
    O.noalias() = A0 * T2;
    const double scale = fbi_constant(eps) * mesh.weight();
    for (auto& v : out) v *= scale;
    return out;
}

namespace detail {
inline double smooth_f(double t) { return t > 0.0 ? std::exp(-1.0 / t) : 0.0; }
// 0 for t <= 0, 1 for t >= 1, C-infinity in between.
inline double smooth_step(double t) {
    if (t <= 0.0) return 0.0;
    if (t >= 1.0) return 1.0;
    const double a = smooth_f(t), b = smooth_f(1.0 - t);
    return a / (a + b);
}
}  // namespace detail

// Equals 1 on K_delta and 0 outside K_{delta/2}.
inline double cutoff_chi(const PhasePoint& z, double delta) {
    const double qn = z.q.norm(), pn = z.p.norm();
    const double inv = 1.0 / delta;
    const double fq = 1.0 - detail::smooth_step((qn - inv) / inv);
    const double flo = detail::smooth_step((pn - 0.5 * delta) / (0.5 * delta));
    const double fhi = 1.0 - detail::smooth_step((pn - inv) / inv);
    return fq * flo * fhi;
}

// Sum of |g|^2 dq dp over mesh nodes outside K_delta, including the
// excluded ball around p = 0. `ncomp` interleaved components per node.
inline double high_freq_energy_outside(double eps, const std::vector<cd>& g, const PhaseMesh& mesh,
                                       double delta, int ncomp = 1) {
    (void)eps;
    const CutoffRegion K{delta};
    const double s = deterministic_sum<double>(mesh.node_count(), [&](std::size_t idx) {
        std::array<int, 3> iq, ip;
        mesh.decode(idx, iq, ip);
        if (K.contains({mesh.q(iq), mesh.p(ip)})) return 0.0;
        double acc = 0.0;
        for (int c = 0; c < ncomp; ++c) acc += std::norm(g[ncomp * idx + c]);
        return acc;
    });
    return s * mesh.weight();
}

// Total |g|^2 dq dp over all nodes.
inline double phase_mass(const std::vector<cd>& g, const PhaseMesh& mesh, int ncomp = 1) {
    const double s = deterministic_sum<double>(mesh.node_count(), [&](std::size_t idx) {
        double acc = 0.0;
        for (int c = 0; c < ncomp; ++c) acc += std::norm(g[ncomp * idx + c]);
        return acc;
    });
    return s * mesh.weight();
}

// Closed-form Gaussian-times-plane-wave initial data
//   u0(x) = amplitude * polarization * exp(i k.(x-c)/eps - |x-c|^2/(2 sigma^2)),
//   u1(x) = (u1_factor / eps) * u0(x).
struct GaussianData {
    Vec3 center = Vec3::Zero();
    Vec3 k = Vec3::UnitX();
    double sigma = 1.0;
    cd amplitude = 1.0;
    CVec3 polarization = CVec3(1.0, 0.0, 0.0);
    cd u1_factor = 0.0;

    static GaussianData coherent_state(double eps, const Vec3& q0, const Vec3& p0, const CVec3& pol) {
        GaussianData d;
        d.center = q0;
        d.k = p0;
        d.sigma = std::sqrt(eps);
        d.amplitude = std::pow(kPi * eps, -0.75);
        d.polarization = pol;
        return d;
    }
    static GaussianData wkb(const Vec3& c, const Vec3& k, double sigma, const CVec3& pol) {
        GaussianData d;
        d.center = c;
        d.k = k;
        d.sigma = sigma;
        d.polarization = pol;
        return d;
    }

    cd scalar(double eps, const Vec3& x) const {
        const Vec3 r = x - center;
        return amplitude * std::exp(cd(-r.squaredNorm() / (2.0 * sigma * sigma), k.dot(r) / eps));
    }
    CVec3 u0(double eps, const Vec3& x) const { return polarization * scalar(eps, x); }
    CVec3 u1(double eps, const Vec3& x) const { return (u1_factor / eps) * u0(eps, x); }

    // Exact FBI transform of the scalar profile.
    cd fbi_scalar(double eps, const Vec3& q, const Vec3& p) const {
        const double a = 1.0 / (2.0 * sigma * sigma) + 1.0 / (2.0 * eps);
        cd expo = 0.0;
        for (int d = 0; d < 3; ++d) {
            const double qs = q(d) - center(d);
            const cd b(qs / eps, (k(d) - p(d)) / eps);
            expo += b * b / (4.0 * a) + cd(-qs * qs / (2.0 * eps), p(d) * qs / eps);
        }
        return fbi_constant(eps) * amplitude * std::pow(kPi / a, 1.5) * std::exp(expo);
    }

    VectorField sample_u0(double eps, const Grid3& g) const {
        VectorField f(g);
        parallel_for(g.size(), [&](std::size_t i) {
            const CVec3 v = u0(eps, g.point(i));
            for (int c = 0; c < 3; ++c) f.at(i, c) = v(c);
        });
        return f;
    }
    VectorField sample_u1(double eps, const Grid3& g) const {
        VectorField f = sample_u0(eps, g);
        for (auto& v : f.data) v *= u1_factor / eps;
        return f;
    }

    // Spread of |FBI|^2 in q and p: amplitude standard deviations.
    double q_spread(double eps) const { return std::sqrt(sigma * sigma + eps); }
    double p_spread(double eps) const { return std::sqrt(eps * eps / (sigma * sigma) + eps); }
};

// Mesh adapted to closed-form data. Both spacings are factor * sqrt(2 eps),
// the width of the coherent-state kernel, and each axis covers `extent`
// spreads of the transformed data around (center, k).
inline PhaseMesh mesh_for(const GaussianData& d, double eps, double spacing_factor, double extent,
                          double delta) {
    const double h = spacing_factor * std::sqrt(2.0 * eps);
    const int nq = 2 * static_cast<int>(std::lround(extent * d.q_spread(eps) / h)) + 1;
    const int np = 2 * static_cast<int>(std::lround(extent * d.p_spread(eps) / h)) + 1;
    return PhaseMesh::centered(d.center, h, nq, d.k, h, np, 0.5 * delta);
}

// Coarser mesh for phase-space mass diagnostics: spacing = factor * spread.
inline PhaseMesh mass_mesh_for(const GaussianData& d, double eps, double spacing_factor, double extent,
                               double delta) {
    const int n = 2 * static_cast<int>(std::lround(extent / spacing_factor)) + 1;
    return PhaseMesh::centered(d.center, spacing_factor * d.q_spread(eps), n, d.k,
                               spacing_factor * d.p_spread(eps), n, 0.5 * delta);
}

enum AmpBranch { kPPlus = 0, kPMinus, kSVPlus, kSVMinus, kSHPlus, kSHMinus, kBranchCount };

inline const char* amp_branch_name(int b) {
    static const char* names[] = {"P+", "P-", "SV+", "SV-", "SH+", "SH-"};
    return names[b];
}

// Per-node initial amplitudes for the six branches plus the per-momentum
// reference frame.
struct AmplitudeField {
    PhaseMesh mesh;
    double eps = 0.0;
    double delta = 0.0;  // cutoff parameter; 0 disables the cutoff
    std::array<std::vector<cd>, kBranchCount> alpha;
    std::vector<Frame> frames;  // indexed by p_flat

    double max_abs(int b) const {
        double m = 0.0;
        for (const cd& v : alpha[b]) m = std::max(m, std::abs(v));
        return m;
    }
};

namespace detail {

// alpha from FBI images F0 = F u0 and F1 = F u1 (3 interleaved components each).
template <class FbiAt>
AmplitudeField assemble_alpha(double eps, const PhaseMesh& mesh, const MediumModel& medium,
                              double delta, FbiAt&& fbi_at) {
    AmplitudeField a;
    a.mesh = mesh;
    a.eps = eps;
    a.delta = delta;
    for (auto& v : a.alpha) v.assign(mesh.node_count(), cd{});
    a.frames.resize(mesh.p_count());
    for (std::size_t f = 0; f < mesh.p_count(); ++f) {
        const auto ip = mesh.p_unflat(f);
        if (mesh.active(ip)) a.frames[f] = initial_frame(mesh.p(ip));
    }
    parallel_for(mesh.node_count(), [&](std::size_t idx) {
        std::array<int, 3> iq, ip;
        mesh.decode(idx, iq, ip);
        if (!mesh.active(ip)) return;
        const Vec3 q = mesh.q(iq), p = mesh.p(ip);
        const double chi = delta > 0.0 ? cutoff_chi({q, p}, delta) : 1.0;
        if (chi == 0.0) return;
        CVec3 F0, F1;
        fbi_at(idx, q, p, F0, F1);
        const Frame& fr = a.frames[mesh.p_flat(ip)];
        const Speeds c = eval_speeds(medium, q);
        const double pn = p.norm();
        auto split = [&](const Vec3& n, double speed, int plus) {
            const cd a0 = n.cast<cd>().dot(F0);  // Eigen conjugates the left operand; n is real
            const cd a1 = kI * eps * n.cast<cd>().dot(F1) / (speed * pn);
            a.alpha[plus][idx] = 0.5 * chi * (a0 + a1);
            a.alpha[plus + 1][idx] = 0.5 * chi * (a0 - a1);
        };
        split(fr.np, c.c_p, kPPlus);
        split(fr.nsv, c.c_s, kSVPlus);
        split(fr.nsh, c.c_s, kSHPlus);
    });
    return a;
}

}  // namespace detail

// Decomposition of sampled initial data by FBI quadrature. u0 and u1 must
// share a grid. delta > 0 multiplies alpha by the cutoff chi_delta.
inline AmplitudeField decompose_initial(double eps, const VectorField& u0, const VectorField& u1,
                                        const PhaseMesh& mesh, const MediumModel& medium,
                                        double delta = 0.0) {
    if (!(u0.grid == u1.grid)) throw Error(ErrorCode::GridMismatch, "u0 and u1 grids differ");
    std::array<std::vector<cd>, 3> F0, F1;
    for (int c = 0; c < 3; ++c) {
        F0[c] = fbi_forward(eps, u0.component(c), u0.grid, mesh);
        F1[c] = fbi_forward(eps, u1.component(c), u1.grid, mesh);
    }
    return detail::assemble_alpha(eps, mesh, medium, delta,
                                  [&](std::size_t idx, const Vec3&, const Vec3&, CVec3& a, CVec3& b) {
                                      for (int c = 0; c < 3; ++c) {
                                          a(c) = F0[c][idx];
                                          b(c) = F1[c][idx];
                                      }
                                  });
}

// Same decomposition with the FBI images evaluated in closed form.
inline AmplitudeField decompose_closed_form(double eps, const GaussianData& data,
                                            const PhaseMesh& mesh, const MediumModel& medium,
                                            double delta = 0.0) {
    return detail::assemble_alpha(eps, mesh, medium, delta,
                                  [&](std::size_t, const Vec3& q, const Vec3& p, CVec3& a, CVec3& b) {
                                      const cd s = data.fbi_scalar(eps, q, p);
                                      a = data.polarization * s;
                                      b = data.polarization * (s * data.u1_factor / eps);
                                  });
}

// FBI image of closed-form data, 3 interleaved components per node.
inline std::vector<cd> fbi_closed_form(double eps, const GaussianData& data, const PhaseMesh& mesh) {
    std::vector<cd> g(3 * mesh.node_count());
    parallel_for(mesh.node_count(), [&](std::size_t idx) {
        std::array<int, 3> iq, ip;
        mesh.decode(idx, iq, ip);
        const cd s = data.fbi_scalar(eps, mesh.q(iq), mesh.p(ip));
        for (int c = 0; c < 3; ++c) g[3 * idx + c] = data.polarization(c) * s;
    });
    return g;
}

}  // namespace fga
