#pragma once

#include "fga/dynamics.hpp"
#include "fga/ensemble.hpp"
#include "fga/grid.hpp"
#include "fga/parallel.hpp"
#include "fga/phase_space.hpp"

#include <array>
#include <cmath>
#include <vector>

namespace fga {

struct WaveField {
    Grid3 grid;
    double eps = 0.0;
    double t = 0.0;
    std::vector<cd> u;       // 3 per node
    std::vector<cd> du_dt;   // 3 per node, empty when absent
    std::vector<cd> div_u;   // 1 per node
    std::vector<cd> curl_u;  // 3 per node

    WaveField() = default;
    WaveField(const Grid3& g, double eps_, bool derived) : grid(g), eps(eps_), u(3 * g.size()) {
        if (derived) {
            du_dt.assign(3 * g.size(), cd{});
            div_u.assign(g.size(), cd{});
            curl_u.assign(3 * g.size(), cd{});
        }
    }
    bool has_derived() const { return !du_dt.empty(); }
};

// Phi = (i/2)|y-q|^2 - p.(y-q) + (i/2)|x-Q|^2 + P.(x-Q).
inline cd phase_value(const RayState& s, const Vec3& y, const Vec3& x) {
    const Vec3 ry = y - s.origin.q, rx = x - s.Q;
    return cd(-s.origin.p.dot(ry) + s.P.dot(rx), 0.5 * (ry.squaredNorm() + rx.squaredNorm()));
}

struct ReconstructOptions {
    double r_cut = 6.0;
    bool derived = true;
    bool lattice = true;  // separable evaluation of translation-shared groups
};

namespace detail {

using RowMatC = Eigen::Matrix<cd, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

// Output rows: 0-2 u, 3-5 du_dt, 6 div, 7-9 curl. Columns: basis sums
// S_G = sum c G and S_Hk = sum c (x_k - Q_k) G.
using CoefMatrix = Eigen::Matrix<cd, 10, 4>;

inline CoefMatrix packet_coefficients(const CVec3& V, const CVec3& dV, const Vec3& P, const Vec3& Qt,
                                      const Vec3& Pt, double eps) {
    CoefMatrix M = CoefMatrix::Zero();
    const cd ie = kI / eps;
    const CVec3 Pc = P.cast<cd>();
    const cd PV = Pc.dot(V);  // P real, so no conjugation effect
    const CVec3 PxV = cross(Pc, V);
    const CVec3 w = (Pt.cast<cd>() - kI * Qt.cast<cd>());
    const double PQt = P.dot(Qt);
    for (int c = 0; c < 3; ++c) {
        M(c, 0) = V(c);
        M(3 + c, 0) = dV(c) - ie * PQt * V(c);
        for (int k = 0; k < 3; ++k) M(3 + c, 1 + k) = ie * V(c) * w(k);
        M(7 + c, 0) = ie * PxV(c);
    }
    M(6, 0) = ie * PV;
    for (int k = 0; k < 3; ++k) M(6, 1 + k) = -V(k) / eps;
    M(7, 2) = -V(2) / eps;
    M(7, 3) = V(1) / eps;
    M(8, 3) = -V(0) / eps;
    M(8, 1) = V(2) / eps;
    M(9, 1) = -V(1) / eps;
    M(9, 2) = V(0) / eps;
    return M;
}

struct Channel {
    CoefMatrix M;
    const std::vector<cd>* coef;
};

// Amplitude vectors of the channels of a group, with the prefactor folded in.
inline std::vector<Channel> group_channels(const RayGroup& g, const MediumModel& medium, double eps,
                                           bool derived) {
    const RayState& s = g.state;
    const double K = reconstruction_prefactor(eps);
    const Frame f = current_frame(s);
    Vec3 Qt = Vec3::Zero(), Pt = Vec3::Zero();
    FrameRates fr{Vec3::Zero(), Vec3::Zero(), Vec3::Zero()};
    AmplitudeRates ar;
    if (derived) {
        const FlowRates fl = flow_rhs(s, medium);
        Qt = fl.dQ;
        Pt = fl.dP;
        fr = frame_rhs(s, medium);
        ar = amplitude_rhs(s, medium);
    }
    const CVec3 np = f.np.cast<cd>(), nsv = f.nsv.cast<cd>(), nsh = f.nsh.cast<cd>();
    std::vector<Channel> ch;
    if (s.branch.family == Family::P) {
        const CVec3 V = K * s.amp_p * np;
        const CVec3 dV = K * (ar.damp_p * np + s.amp_p * fr.dnp.cast<cd>());
        ch.push_back({packet_coefficients(V, dV, s.P, Qt, Pt, eps), &g.c0});
        return ch;
    }
    for (int col = 0; col < 2; ++col) {
        const cd u0 = s.amp_s(0, col), u1 = s.amp_s(1, col);
        const CVec3 V = K * (u0 * nsv + u1 * nsh);
        const CVec3 dV = K * (ar.damp_s(0, col) * nsv + u0 * fr.dnsv.cast<cd>() +
                              ar.damp_s(1, col) * nsh + u1 * fr.dnsh.cast<cd>());
        ch.push_back({packet_coefficients(V, dV, s.P, Qt, Pt, eps), col == 0 ? &g.c0 : &g.c1});
    }
    return ch;
}

// Index range [lo, hi) of axis nodes within [a, b].
inline std::pair<int, int> axis_window(const Axis& ax, double a, double b) {
    const int lo = std::max(0, static_cast<int>(std::ceil((a - ax.origin) / ax.spacing - 1e-12)));
    const int hi = std::min(ax.n, static_cast<int>(std::floor((b - ax.origin) / ax.spacing + 1e-12)) + 1);
    return {lo, std::max(lo, hi)};
}

inline void accumulate(WaveField& w, std::size_t node, const Eigen::Matrix<cd, 10, 1>& v) {
    for (int c = 0; c < 3; ++c) w.u[3 * node + c] += v(c);
    if (!w.has_derived()) return;
    for (int c = 0; c < 3; ++c) w.du_dt[3 * node + c] += v(3 + c);
    w.div_u[node] += v(6);
    for (int c = 0; c < 3; ++c) w.curl_u[3 * node + c] += v(7 + c);
}

// One packet of the direct sum: centre, momentum and folded coefficients.
struct DirectPacket {
    Vec3 Q, P;
    CoefMatrix M;
};

inline void collect_direct(std::vector<DirectPacket>& out, const RayGroup& g, const PhaseMesh& mesh,
                           const std::vector<Channel>& ch) {
    const Vec3 d = g.displacement();
    for (std::size_t n = 0; n < g.iq.size(); ++n) {
        DirectPacket pk{mesh.q(g.iq[n]) + d, g.state.P, CoefMatrix::Zero()};
        for (const auto& c : ch) pk.M += (*c.coef)[n] * c.M;
        out.push_back(pk);
    }
}

// Per-packet sum over the truncation cube of each packet. Work is split
// over first-axis grid slabs; every node sees the packets in list order.
inline void add_direct(WaveField& w, const std::vector<DirectPacket>& pk, double eps, double r_cut) {
    if (pk.empty()) return;
    const double R = r_cut * std::sqrt(eps);
    const Axis& a0 = w.grid.axes[0];
    std::vector<std::vector<std::size_t>> by_slab(a0.n);
    for (std::size_t n = 0; n < pk.size(); ++n) {
        const auto [lo, hi] = axis_window(a0, pk[n].Q(0) - R, pk[n].Q(0) + R);
        for (int i = lo; i < hi; ++i) by_slab[i].push_back(n);
    }
    parallel_for(static_cast<std::size_t>(a0.n), [&](std::size_t si) {
        const int i = static_cast<int>(si);
        std::array<std::vector<cd>, 2> gk;
        std::array<std::vector<double>, 2> rk;
        for (std::size_t n : by_slab[i]) {
            const DirectPacket& p = pk[n];
            const double r0 = a0[i] - p.Q(0);
            const cd g0 = std::exp(cd(-r0 * r0 / (2.0 * eps), p.P(0) * r0 / eps));
            std::array<std::pair<int, int>, 2> win;
            for (int k = 0; k < 2; ++k) {
                const Axis& ax = w.grid.axes[k + 1];
                win[k] = axis_window(ax, p.Q(k + 1) - R, p.Q(k + 1) + R);
                gk[k].clear();
                rk[k].clear();
                for (int j = win[k].first; j < win[k].second; ++j) {
                    const double r = ax[j] - p.Q(k + 1);
                    rk[k].push_back(r);
                    gk[k].push_back(std::exp(cd(-r * r / (2.0 * eps), p.P(k + 1) * r / eps)));
                }
            }
            for (int j = win[0].first; j < win[0].second; ++j) {
                const int b = j - win[0].first;
                const cd g01 = g0 * gk[0][b];
                for (int k = win[1].first; k < win[1].second; ++k) {
                    const int c = k - win[1].first;
                    const cd G = g01 * gk[1][c];
                    const Eigen::Vector4cd S(G, r0 * G, rk[0][b] * G, rk[1][c] * G);
                    accumulate(w, w.grid.index(i, j, k), p.M * S);
                }
            }
        }
    });
}

// Separable evaluation for a translation-shared group: 1D packet profiles
// per axis are contracted against the dense q-lattice of coefficients.
inline void add_group_lattice(WaveField& w, const RayGroup& g, const PhaseMesh& mesh,
                              const std::vector<Channel>& ch, double eps, double r_cut) {
    const double R = r_cut * std::sqrt(eps);
    const Vec3 d = g.displacement();
    const Vec3& P = g.state.P;
    std::array<int, 3> lo{INT32_MAX, INT32_MAX, INT32_MAX}, hi{-1, -1, -1};
    for (const auto& iq : g.iq)
        for (int k = 0; k < 3; ++k) {
            lo[k] = std::min(lo[k], iq[k]);
            hi[k] = std::max(hi[k], iq[k]);
        }
    std::array<int, 3> L;
    std::array<std::pair<int, int>, 3> win;
    std::array<RowMatC, 3> Gm, Hm;  // [x][l]
    for (int k = 0; k < 3; ++k) {
        L[k] = hi[k] - lo[k] + 1;
        const Axis& qa = mesh.q_axes[k];
        win[k] = axis_window(w.grid.axes[k], qa[lo[k]] + d(k) - R, qa[hi[k]] + d(k) + R);
        const int W = win[k].second - win[k].first;
        Gm[k] = RowMatC::Zero(W, L[k]);
        Hm[k] = RowMatC::Zero(W, L[k]);
        for (int x = 0; x < W; ++x)
            for (int l = 0; l < L[k]; ++l) {
                const double r = w.grid.axes[k][win[k].first + x] - (qa[lo[k] + l] + d(k));
                if (std::abs(r) > R) continue;
                const cd G = std::exp(cd(-r * r / (2.0 * eps), P(k) * r / eps));
                Gm[k](x, l) = G;
                Hm[k](x, l) = r * G;
            }
    }
    const int W0 = win[0].second - win[0].first, W1 = win[1].second - win[1].first,
              W2 = win[2].second - win[2].first;
    if (W0 <= 0 || W1 <= 0 || W2 <= 0) return;

    for (const auto& c : ch) {
        RowMatC C = RowMatC::Zero(L[0], static_cast<Eigen::Index>(L[1]) * L[2]);
        for (std::size_t n = 0; n < g.iq.size(); ++n) {
            const auto& iq = g.iq[n];
            C(iq[0] - lo[0], (iq[1] - lo[1]) * L[2] + (iq[2] - lo[2])) = (*c.coef)[n];
        }
        // contract axis 0: [x0][l1 l2]
        const RowMatC TG = Gm[0] * C, TH = Hm[0] * C;
        // contract axis 1 per x0 into [x1][l2] slabs, then axis 2.
        const RowMatC G2t = Gm[2].transpose(), H2t = Hm[2].transpose();
        const CoefMatrix& M = c.M;
        parallel_for(W0, [&](std::size_t x0) {
            Eigen::Map<const RowMatC> sg(TG.data() + x0 * L[1] * L[2], L[1], L[2]);
            Eigen::Map<const RowMatC> sh(TH.data() + x0 * L[1] * L[2], L[1], L[2]);
            const RowMatC A = Gm[1] * sg;   // G0 G1
            const RowMatC B = Hm[1] * sg;   // G0 H1
            const RowMatC Cc = Gm[1] * sh;  // H0 G1
            const RowMatC SG = A * G2t, SH2 = A * H2t, SH1 = B * G2t, SH0 = Cc * G2t;
            for (int x1 = 0; x1 < W1; ++x1)
                for (int x2 = 0; x2 < W2; ++x2) {
                    const Eigen::Vector4cd S(SG(x1, x2), SH0(x1, x2), SH1(x1, x2), SH2(x1, x2));
                    accumulate(w,
                               w.grid.index(win[0].first + static_cast<int>(x0), win[1].first + x1,
                                            win[2].first + x2),
                               M * S);
                }
        });
    }
}

}  // namespace detail

// Frozen Gaussian sum on grid x at the ensemble's current time.
inline WaveField reconstruct(const PacketEnsemble& e, const MediumModel& medium, const Grid3& x,
                             const ReconstructOptions& opt = {}) {
    if (e.mesh.node_count() == 0 || !(e.eps > 0.0))
        throw Error(ErrorCode::EmptyEnsemble, "ensemble was not built from a phase mesh");
    double pmax = 0.0;
    for (const auto& g : e.groups) pmax = std::max(pmax, g.state.P.norm());
    for (int k = 0; k < 3; ++k)
        if (pmax > 0.0 && x.axes[k].spacing > kPi * e.eps / pmax)
            throw Error(ErrorCode::NyquistViolation,
                        "dx = " + std::to_string(x.axes[k].spacing) +
                            " exceeds pi*eps/|P|max = " + std::to_string(kPi * e.eps / pmax));
    WaveField w(x, e.eps, opt.derived);
    w.t = e.t;
    std::vector<detail::DirectPacket> direct;
    for (const auto& g : e.groups) {
        const auto ch = detail::group_channels(g, medium, e.eps, opt.derived);
        if (opt.lattice && g.iq.size() > 1)
            detail::add_group_lattice(w, g, e.mesh, ch, e.eps, opt.r_cut);
        else
            detail::collect_direct(direct, g, e.mesh, ch);
    }
    detail::add_direct(w, direct, e.eps, opt.r_cut);
    return w;
}

inline WaveField reconstruct_derived(const PacketEnsemble& e, const MediumModel& medium,
                                     const Grid3& x, ReconstructOptions opt = {}) {
    opt.derived = true;
    return reconstruct(e, medium, x, opt);
}

// Squared L2 norms (midpoint rule) of the four field groups.
struct NormParts {
    double u = 0.0, du_dt = 0.0, div = 0.0, curl = 0.0;

    NormParts& operator+=(const NormParts& o) {
        u += o.u;
        du_dt += o.du_dt;
        div += o.div;
        curl += o.curl;
        return *this;
    }
};

inline double sq_norm(const std::vector<cd>& v, double dV) {
    return dV * deterministic_sum<double>(v.size(), [&](std::size_t i) { return std::norm(v[i]); });
}

inline NormParts norm_parts(const WaveField& w) {
    const double dV = w.grid.cell_volume();
    NormParts n;
    n.u = sq_norm(w.u, dV);
    if (w.has_derived()) {
        n.du_dt = sq_norm(w.du_dt, dV);
        n.div = sq_norm(w.div_u, dV);
        n.curl = sq_norm(w.curl_u, dV);
    }
    return n;
}

inline double energy_from_parts(const NormParts& n, double eps) {
    return eps * (std::sqrt(n.du_dt) + std::sqrt(n.div) + std::sqrt(n.curl));
}

inline double energy_seminorm(const WaveField& w) {
    if (!w.has_derived()) throw Error(ErrorCode::MissingDerivedFields, "energy seminorm needs derived fields");
    return energy_from_parts(norm_parts(w), w.eps);
}

inline double l2_norm(const WaveField& w) { return std::sqrt(norm_parts(w).u); }

enum class ErrorMode { L2, Energy };

struct FieldError {
    double error = 0.0;
    double relative = 0.0;
};

inline WaveField difference(const WaveField& a, const WaveField& b) {
    if (!(a.grid == b.grid) || a.eps != b.eps)
        throw Error(ErrorCode::GridMismatch, "fields live on different grids or eps");
    WaveField d = a;
    auto sub = [](std::vector<cd>& x, const std::vector<cd>& y) {
        for (std::size_t i = 0; i < x.size(); ++i) x[i] -= y[i];
    };
    sub(d.u, b.u);
    if (a.has_derived() && b.has_derived()) {
        sub(d.du_dt, b.du_dt);
        sub(d.div_u, b.div_u);
        sub(d.curl_u, b.curl_u);
    } else {
        d.du_dt.clear();
        d.div_u.clear();
        d.curl_u.clear();
    }
    return d;
}

// ||a - b|| and ||a - b|| / ||b||.
inline FieldError field_error(const WaveField& a, const WaveField& b, ErrorMode mode) {
    if (mode == ErrorMode::Energy && (!a.has_derived() || !b.has_derived()))
        throw Error(ErrorCode::MissingDerivedFields, "energy error needs derived fields");
    const WaveField d = difference(a, b);
    FieldError r;
    double ref;
    if (mode == ErrorMode::L2) {
        r.error = l2_norm(d);
        ref = l2_norm(b);
    } else {
        r.error = energy_seminorm(d);
        ref = energy_seminorm(b);
    }
    r.relative = ref > 0.0 ? r.error / ref : 0.0;
    return r;
}

}  // namespace fga
