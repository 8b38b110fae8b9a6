#pragma once

#include "fga/medium.hpp"
#include "fga/phase_space.hpp"
#include "fga/types.hpp"

#include <cmath>
#include <string>
#include <vector>

namespace fga {

enum class Sign { Plus, Minus };

struct Branch {
    Family family = Family::P;
    Sign sign = Sign::Plus;

    double s() const { return sign == Sign::Plus ? 1.0 : -1.0; }
    std::string name() const {
        return std::string(family == Family::P ? "P" : "S") + (sign == Sign::Plus ? "+" : "-");
    }
};

inline bool operator==(const Branch& a, const Branch& b) {
    return a.family == b.family && a.sign == b.sign;
}

enum class FrameMode { Convention, ParallelTransport };

inline constexpr double kDetZFloor = 1e-12;

// One Gaussian packet. Jacobian blocks use the row convention
// (dzQ)_{jk} = d Q_k / d z_j with d_z = d_q - i d_p. The real blocks dqQ,
// dpQ, dqP, dpP are carried alongside for the symplectic check.
// For family S, amp_s is the 2x2 propagator acting on (a_sv, a_sh).
struct RayState {
    Branch branch;
    FrameMode frame_mode = FrameMode::Convention;
    double t = 0.0;
    PhasePoint origin;
    Vec3 Q = Vec3::Zero();
    Vec3 P = Vec3::UnitX();
    CMat3 dzQ = CMat3::Identity();
    CMat3 dzP = -kI * CMat3::Identity();
    Mat3 dqQ = Mat3::Identity(), dpQ = Mat3::Zero();
    Mat3 dqP = Mat3::Zero(), dpP = Mat3::Identity();
    cd amp_p = initial_amplitude();
    CMat2 amp_s = initial_amplitude() * CMat2::Identity();
    Frame frame;
    Vec3 ref_axis = Vec3::UnitZ();
    double momentum_floor = 0.0;

    CMat3 Z() const { return dzQ + kI * dzP; }

    // Physical S amplitude vector for initial coefficients (b_sv, b_sh),
    // normalized so that b = (1, 0) starts at N_sv.
    CVec3 s_vector(cd b_sv, cd b_sh) const {
        const Eigen::Vector2cd a = amp_s * Eigen::Vector2cd(b_sv, b_sh) / initial_amplitude();
        return a(0) * frame.nsv.cast<cd>() + a(1) * frame.nsh.cast<cd>();
    }
};

inline RayState make_ray(const Branch& b, const PhasePoint& z, FrameMode mode = FrameMode::Convention,
                         double momentum_floor = 0.0) {
    RayState s;
    s.branch = b;
    s.frame_mode = mode;
    s.origin = z;
    s.Q = z.q;
    s.P = z.p;
    s.ref_axis = reference_axis(z.p);
    s.frame = convention_frame(z.p, s.ref_axis);
    s.momentum_floor = momentum_floor;
    return s;
}

struct FlowRates {
    Vec3 dQ, dP;
};

struct VariationalRates {
    CMat3 ddzQ, ddzP;
};

struct FrameRates {
    Vec3 dnp, dnsv, dnsh;
};

struct AmplitudeRates {
    cd damp_p = 0.0;
    CMat2 damp_s = CMat2::Zero();
    double coupling = 0.0;  // dN_sh/dt . N_sv
};

namespace detail {

inline void check_momentum(const RayState& s) {
    const double pn = s.P.norm();
    if (!(pn > 0.0) || pn < s.momentum_floor || !s.P.allFinite())
        throw Error(ErrorCode::MomentumCollapse, "|P| = " + std::to_string(pn) + " below floor " +
                                                     std::to_string(s.momentum_floor));
}

template <class M>
std::pair<M, M> variational_blocks(const M& dQ, const M& dP, double sg, const SpeedJet& j,
                                   const Vec3& P) {
    const double pn = P.norm();
    const Mat3 gP = j.grad * P.transpose() / pn;
    const Mat3 proj = (Mat3::Identity() / pn - P * P.transpose() / (pn * pn * pn)) * j.c;
    const Mat3 Pg = P * j.grad.transpose() / pn;
    const Mat3 H = pn * j.hess;
    M a = sg * (dQ * gP + dP * proj);
    M b = -sg * (dQ * H + dP * Pg);
    return {a, b};
}

}  // namespace detail

inline FlowRates flow_rhs(const RayState& s, const MediumModel& m) {
    detail::check_momentum(s);
    const SpeedJet j = eval_speed_jet(m, s.Q, s.branch.family);
    const double pn = s.P.norm(), sg = s.branch.s();
    return {sg * j.c * s.P / pn, -sg * j.grad * pn};
}

inline VariationalRates variational_rhs(const RayState& s, const MediumModel& m) {
    detail::check_momentum(s);
    const SpeedJet j = eval_speed_jet(m, s.Q, s.branch.family);
    auto [a, b] = detail::variational_blocks<CMat3>(s.dzQ, s.dzP, s.branch.s(), j, s.P);
    return {a, b};
}

// Frame currently in use: algebraic from P in Convention mode, carried
// otherwise (with n_p always P/|P|).
inline Frame current_frame(const RayState& s) {
    if (s.frame_mode == FrameMode::Convention) return convention_frame(s.P, s.ref_axis);
    Frame f = s.frame;
    f.np = unit(s.P);
    return f;
}

inline FrameRates frame_rhs(const RayState& s, const MediumModel& m) {
    const FlowRates fl = flow_rhs(s, m);
    const Frame f = current_frame(s);
    const double pn = s.P.norm();
    FrameRates r;
    r.dnp = (fl.dP - f.np * f.np.dot(fl.dP)) / pn;
    if (s.frame_mode == FrameMode::ParallelTransport) {
        r.dnsv = -f.nsv.dot(r.dnp) * f.np;
        r.dnsh = -f.nsh.dot(r.dnp) * f.np;
        return r;
    }
    const Vec3& a = s.ref_axis;
    const Vec3 w = a - a.dot(f.np) * f.np;
    const Vec3 dw = -a.dot(r.dnp) * f.np - a.dot(f.np) * r.dnp;
    const double wn = w.norm();
    r.dnsv = (dw - f.nsv * f.nsv.dot(dw)) / wn;
    r.dnsh = r.dnp.cross(f.nsv) + f.np.cross(r.dnsv);
    return r;
}

inline AmplitudeRates amplitude_rhs(const RayState& s, const MediumModel& m) {
    detail::check_momentum(s);
    const CMat3 Z = s.Z();
    const cd det = Z.determinant();
    if (!(std::abs(det) >= kDetZFloor))
        throw Error(ErrorCode::SingularZ, "|det Z| = " + std::to_string(std::abs(det)));
    const SpeedJet j = eval_speed_jet(m, s.Q, s.branch.family);
    const VariationalRates v = variational_rhs(s, m);
    const CMat3 dZ = v.ddzQ + kI * v.ddzP;
    const cd h = s.branch.s() * j.grad.dot(s.P) / s.P.norm() + 0.5 * (Z.inverse() * dZ).trace();
    AmplitudeRates r;
    if (s.branch.family == Family::P) {
        r.damp_p = s.amp_p * h;
        return r;
    }
    const FrameRates fr = frame_rhs(s, m);
    const Frame f = current_frame(s);
    if (s.frame_mode == FrameMode::Convention) r.coupling = fr.dnsh.dot(f.nsv);
    CMat2 G;
    G << h, -r.coupling, r.coupling, h;
    r.damp_s = G * s.amp_s;
    return r;
}

namespace detail {

inline constexpr int kPacked = 71;
using Packed = Eigen::Matrix<cd, kPacked, 1>;

template <class M>
void put(Packed& v, int& o, const M& x) {
    for (Eigen::Index i = 0; i < x.size(); ++i) v(o++) = cd(x.data()[i]);
}
template <class M>
void take(const Packed& v, int& o, M& x) {
    using S = typename M::Scalar;
    for (Eigen::Index i = 0; i < x.size(); ++i) {
        if constexpr (std::is_same_v<S, cd>) x.data()[i] = v(o++);
        else x.data()[i] = v(o++).real();
    }
}

inline Packed pack(const RayState& s) {
    Packed v;
    int o = 0;
    put(v, o, s.Q);
    put(v, o, s.P);
    put(v, o, s.dzQ);
    put(v, o, s.dzP);
    put(v, o, s.dqQ);
    put(v, o, s.dqP);
    put(v, o, s.dpQ);
    put(v, o, s.dpP);
    put(v, o, s.amp_s);
    v(o++) = s.amp_p;
    put(v, o, s.frame.nsv);
    put(v, o, s.frame.nsh);
    return v;
}

inline void unpack(const Packed& v, RayState& s) {
    int o = 0;
    take(v, o, s.Q);
    take(v, o, s.P);
    take(v, o, s.dzQ);
    take(v, o, s.dzP);
    take(v, o, s.dqQ);
    take(v, o, s.dqP);
    take(v, o, s.dpQ);
    take(v, o, s.dpP);
    take(v, o, s.amp_s);
    s.amp_p = v(o++);
    take(v, o, s.frame.nsv);
    take(v, o, s.frame.nsh);
    s.frame.np = unit(s.P);
    if (s.frame_mode == FrameMode::Convention) s.frame = convention_frame(s.P, s.ref_axis);
}

inline Packed rates(const RayState& s, const MediumModel& m) {
    const FlowRates fl = flow_rhs(s, m);
    const VariationalRates vz = variational_rhs(s, m);
    const SpeedJet j = eval_speed_jet(m, s.Q, s.branch.family);
    const double sg = s.branch.s();
    auto [aq, cq] = variational_blocks<Mat3>(s.dqQ, s.dqP, sg, j, s.P);
    auto [ap, cp] = variational_blocks<Mat3>(s.dpQ, s.dpP, sg, j, s.P);
    const AmplitudeRates am = amplitude_rhs(s, m);
    Packed v;
    int o = 0;
    put(v, o, fl.dQ);
    put(v, o, fl.dP);
    put(v, o, vz.ddzQ);
    put(v, o, vz.ddzP);
    put(v, o, aq);
    put(v, o, cq);
    put(v, o, ap);
    put(v, o, cp);
    put(v, o, am.damp_s);
    v(o++) = am.damp_p;
    if (s.frame_mode == FrameMode::ParallelTransport) {
        const FrameRates fr = frame_rhs(s, m);
        put(v, o, fr.dnsv);
        put(v, o, fr.dnsh);
    } else {
        put(v, o, Vec3::Zero().eval());
        put(v, o, Vec3::Zero().eval());
    }
    return v;
}

inline RayState shifted(const RayState& s, const Packed& v) {
    RayState r = s;
    unpack(v, r);
    return r;
}

// One classical RK4 step of signed length h.
inline RayState rk4(const RayState& s, const MediumModel& m, double h) {
    const Packed y = pack(s);
    const Packed k1 = rates(s, m);
    const Packed k2 = rates(shifted(s, y + 0.5 * h * k1), m);
    const Packed k3 = rates(shifted(s, y + 0.5 * h * k2), m);
    const Packed k4 = rates(shifted(s, y + h * k3), m);
    RayState r = shifted(s, y + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4));
    r.t = s.t + h;
    return r;
}

}  // namespace detail

inline RayState step(const RayState& s, const MediumModel& m, double dt) {
    if (!(dt > 0.0) || !std::isfinite(dt))
        throw Error(ErrorCode::InvalidStep, "step size must be positive and finite, got " +
                                                std::to_string(dt));
    return detail::rk4(s, m, dt);
}

struct Trajectory {
    std::vector<RayState> samples;
    double dt = 0.0;
    std::string integrator = "rk4";
};

// Advances s to time t_end with equal steps no longer than dt.
inline RayState advance_to(const RayState& s, const MediumModel& m, double dt, double t_end) {
    if (!(dt > 0.0) || !std::isfinite(dt))
        throw Error(ErrorCode::InvalidStep, "step size must be positive and finite");
    const double span = t_end - s.t;
    if (span <= 0.0) return s;
    const long n = std::max(1L, static_cast<long>(std::ceil(span / dt - 1e-9)));
    const double h = span / static_cast<double>(n);
    RayState r = s;
    const double t0 = s.t;
    for (long i = 0; i < n; ++i) {
        r = detail::rk4(r, m, h);
        r.t = t0 + h * static_cast<double>(i + 1);
    }
    r.t = t_end;
    return r;
}

// Samples at the given strictly increasing times (t >= s.t).
inline Trajectory integrate(const RayState& s, const MediumModel& m, double dt,
                            const std::vector<double>& times) {
    Trajectory tr;
    tr.dt = dt;
    RayState cur = s;
    double last = -INFINITY;
    for (double t : times) {
        if (!(t > last)) throw Error(ErrorCode::InvalidStep, "sample times must increase strictly");
        last = t;
        cur = advance_to(cur, m, dt, t);
        tr.samples.push_back(cur);
    }
    return tr;
}

// -- diagnostics ----------------------------------------------------------

inline double hamiltonian(const RayState& s, const MediumModel& m) {
    return eval_speed_jet(m, s.Q, s.branch.family).c * s.P.norm();
}

inline double hamiltonian_drift(const RayState& s, const MediumModel& m) {
    const double h0 = eval_speed_jet(m, s.origin.q, s.branch.family).c * s.origin.p.norm();
    return std::abs(hamiltonian(s, m) - h0) / h0;
}

inline double symplectic_residual(const RayState& s) {
    Eigen::Matrix<double, 6, 6> J, S = Eigen::Matrix<double, 6, 6>::Zero();
    J << s.dqQ.transpose(), s.dpQ.transpose(), s.dqP.transpose(), s.dpP.transpose();
    S.topRightCorner<3, 3>() = Mat3::Identity();
    S.bottomLeftCorner<3, 3>() = -Mat3::Identity();
    return (J.transpose() * S * J - S).cwiseAbs().maxCoeff();
}

inline double coupling_symmetry_residual(const RayState& s) {
    const CMat3 Z = s.Z();
    if (!(std::abs(Z.determinant()) >= kDetZFloor)) throw Error(ErrorCode::SingularZ, "Z singular");
    const CMat3 M = Z.inverse() * s.dzQ;
    return (M - M.transpose()).cwiseAbs().maxCoeff();
}

struct ZCondition {
    cd det;
    double cond;
};

inline ZCondition z_condition(const RayState& s) {
    const CMat3 Z = s.Z();
    Eigen::JacobiSVD<CMat3> svd(Z);
    const auto sv = svd.singularValues();
    return {Z.determinant(), sv(0) / sv(2)};
}

inline cd trace_rate(const RayState& s, const MediumModel& m) {
    const CMat3 Z = s.Z();
    if (!(std::abs(Z.determinant()) >= kDetZFloor)) throw Error(ErrorCode::SingularZ, "Z singular");
    const VariationalRates v = variational_rhs(s, m);
    return (Z.inverse() * (v.ddzQ + kI * v.ddzP)).trace();
}

// |tr(Z^-1 dZ/dt) - d/dt log det Z|, the derivative taken by a fourth-order
// central difference of det Z over micro-steps of length h.
inline double trace_identity_residual(const RayState& s, const MediumModel& m, double h = 1e-6) {
    const cd tr = trace_rate(s, m);
    auto det_at = [&](double dt) { return detail::rk4(s, m, dt).Z().determinant(); };
    const cd d0 = s.Z().determinant();
    const cd ddet = (8.0 * (det_at(h) - det_at(-h)) - (det_at(2 * h) - det_at(-2 * h))) / (12.0 * h);
    return std::abs(tr - ddet / d0);
}

inline double jacobian_consistency(const RayState& s) {
    const CMat3 a = s.dqQ.cast<cd>() - kI * s.dpQ.cast<cd>();
    const CMat3 b = s.dqP.cast<cd>() - kI * s.dpP.cast<cd>();
    return std::max((s.dzQ - a).cwiseAbs().maxCoeff(), (s.dzP - b).cwiseAbs().maxCoeff());
}

inline double frame_orthonormality(const RayState& s) {
    const Frame f = current_frame(s);
    const Vec3 v[3] = {f.np, f.nsv, f.nsh};
    double e = 0.0;
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) e = std::max(e, std::abs(v[i].dot(v[j]) - (i == j ? 1.0 : 0.0)));
    return e;
}

// Largest delta with (Q, P) in K_delta.
inline double confinement_delta(const Vec3& Q, const Vec3& P) {
    const double qn = Q.norm(), pn = P.norm();
    return std::min({qn > 0.0 ? 1.0 / qn : INFINITY, pn, 1.0 / pn});
}

}  // namespace fga
