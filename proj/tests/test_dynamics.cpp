#include "fga/dynamics.hpp"

#include <gtest/gtest.h>

#include <random>

using namespace fga;

namespace {

const Branch kPp{Family::P, Sign::Plus}, kPm{Family::P, Sign::Minus};
const Branch kSp{Family::S, Sign::Plus}, kSm{Family::S, Sign::Minus};

MediumModel homogeneous() { return MediumModel::constant(2.0, 1.0, 1.0); }
MediumModel lens() { return MediumModel::gaussian_density(2.0, 1.0, 1.0, 0.5, 0.6, Vec3(0.1, -0.2, 0.0)); }

double hamiltonian_at(const Branch& b, const MediumModel& m, const Vec3& q, const Vec3& p) {
    return b.s() * eval_speed_jet(m, q, b.family).c * p.norm();
}

PhasePoint seed() { return {Vec3(-0.3, 0.1, 0.05), Vec3(0.8, 0.3, -0.4)}; }

template <class M>
double max_abs(const M& a) {
    return a.cwiseAbs().maxCoeff();
}

// Distance between two states in every evolved component.
double state_distance(const RayState& a, const RayState& b) {
    return std::max({max_abs(a.Q - b.Q), max_abs(a.P - b.P), max_abs(a.dzQ - b.dzQ), max_abs(a.dzP - b.dzP),
                     std::abs(a.amp_p - b.amp_p), max_abs(a.amp_s - b.amp_s)});
}

}  // namespace

TEST(Flow, ConstantMediumExamples) {
    RayState s = make_ray(kPp, {Vec3::Zero(), Vec3(0, 0, 1)});
    FlowRates f = flow_rhs(s, homogeneous());
    EXPECT_EQ(f.dQ, Vec3(0, 0, 2));
    EXPECT_EQ(f.dP, Vec3::Zero());
    s.branch = kPm;
    f = flow_rhs(s, homogeneous());
    EXPECT_EQ(f.dQ, Vec3(0, 0, -2));
}

TEST(Flow, MatchesHamiltonianFiniteDifferences) {
    std::mt19937 rng(21);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    const auto m = lens();
    const double h = 1e-5;
    for (int i = 0; i < 20; ++i) {
        const Vec3 q(u(rng), u(rng), u(rng)), p(u(rng) + 1.5, u(rng), u(rng));
        for (const Branch& b : {kSp, kPm}) {
            RayState s = make_ray(b, {q, p});
            const FlowRates f = flow_rhs(s, m);
            Vec3 dHdp, dHdq;
            for (int k = 0; k < 3; ++k) {
                Vec3 e = Vec3::Zero();
                e(k) = h;
                dHdp(k) = (hamiltonian_at(b, m, q, p + e) - hamiltonian_at(b, m, q, p - e)) / (2 * h);
                dHdq(k) = (hamiltonian_at(b, m, q + e, p) - hamiltonian_at(b, m, q - e, p)) / (2 * h);
            }
            EXPECT_LE((f.dQ - dHdp).norm(), 1e-7 * f.dQ.norm());
            EXPECT_LE((f.dP + dHdq).norm(), 1e-7 * std::max(f.dP.norm(), 1e-3));
        }
    }
}

TEST(Flow, MomentumCollapse) {
    RayState s = make_ray(kPp, {Vec3::Zero(), Vec3(0.01, 0, 0)}, FrameMode::Convention, 0.05);
    try {
        flow_rhs(s, homogeneous());
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::MomentumCollapse);
    }
    s.P = Vec3::Zero();
    s.momentum_floor = 0.0;
    EXPECT_THROW(flow_rhs(s, homogeneous()), Error);
}

TEST(Variational, ConstantMediumRates) {
    const RayState s = make_ray(kPp, {Vec3::Zero(), Vec3(0.6, 0.0, 0.8)});
    const VariationalRates v = variational_rhs(s, homogeneous());
    EXPECT_EQ(max_abs(v.ddzP), 0.0);
    const Vec3 ph = s.P.normalized();
    const CMat3 expect = 2.0 * s.dzP * (Mat3::Identity() - ph * ph.transpose()).cast<cd>() / s.P.norm();
    EXPECT_LE(max_abs(v.ddzQ - expect), 1e-15);
}

TEST(Variational, MatchesFlowMapFiniteDifferences) {
    const auto m = lens();
    const double h = 1e-5;
    for (const Branch& b : {kPp, kSm}) {
        const PhasePoint z = seed();
        const VariationalRates v = variational_rhs(make_ray(b, z), m);
        CMat3 dQ, dP;
        for (int j = 0; j < 3; ++j) {
            Vec3 e = Vec3::Zero();
            e(j) = h;
            auto rate = [&](const Vec3& q, const Vec3& p) { return flow_rhs(make_ray(b, {q, p}), m); };
            const FlowRates qp = rate(z.q + e, z.p), qm = rate(z.q - e, z.p);
            const FlowRates pp = rate(z.q, z.p + e), pm = rate(z.q, z.p - e);
            for (int k = 0; k < 3; ++k) {
                dQ(j, k) = cd((qp.dQ(k) - qm.dQ(k)) / (2 * h), -(pp.dQ(k) - pm.dQ(k)) / (2 * h));
                dP(j, k) = cd((qp.dP(k) - qm.dP(k)) / (2 * h), -(pp.dP(k) - pm.dP(k)) / (2 * h));
            }
        }
        EXPECT_LE(max_abs(v.ddzQ - dQ), 1e-6);
        EXPECT_LE(max_abs(v.ddzP - dP), 1e-6);
    }
}

TEST(Variational, ConstantMediumClosedFormStaysSymmetric) {
    const PhasePoint z{Vec3(0.1, 0.2, 0.3), Vec3(0.3, -0.9, 0.2)};
    const RayState s0 = make_ray(kSp, z);
    const Trajectory tr = integrate(s0, homogeneous(), 0.01, {0.25, 0.5, 1.0});
    const Vec3 ph = z.p.normalized();
    const Mat3 perp = Mat3::Identity() - ph * ph.transpose();
    for (const RayState& s : tr.samples) {
        const CMat3 expect = CMat3::Identity() - kI * (s.t / z.p.norm()) * perp.cast<cd>();
        EXPECT_LE(max_abs(s.dzQ - expect), 1e-13);
        EXPECT_LE(max_abs(s.dzQ - s.dzQ.transpose()), 1e-15);
    }
}

TEST(Amplitude, ConstantMediumPClosedForm) {
    RayState s = make_ray(kPp, {Vec3::Zero(), Vec3(0.0, 1.0, 0.0)});
    s = advance_to(s, homogeneous(), 1e-2, 1.0);
    const cd det = s.Z().determinant();
    EXPECT_LE(std::abs(det - cd(0, -16)), 1e-10);
    const cd expect = std::pow(2.0, 1.5) * cd(1.0, -1.0);
    EXPECT_LE(std::abs(s.amp_p - expect), 1e-6);
    EXPECT_LE(std::abs(s.amp_p - initial_amplitude() * std::sqrt(det / 8.0)), 1e-6);
}

TEST(Amplitude, ParallelTransportDecouplesS) {
    RayState s = make_ray(kSp, seed(), FrameMode::ParallelTransport);
    for (const auto& m : {homogeneous(), lens()}) {
        const RayState e = advance_to(s, m, 1e-2, 1.0);
        EXPECT_EQ(amplitude_rhs(e, m).coupling, 0.0);
        EXPECT_LE(std::abs(e.amp_s(0, 1)), 1e-10 * std::abs(e.amp_s(0, 0)));
        EXPECT_LE(std::abs(e.amp_s(1, 0)), 1e-10 * std::abs(e.amp_s(0, 0)));
        const CVec3 v = e.s_vector(1.0, 0.5);
        const cd ratio = v.dot(e.frame.nsv.cast<cd>()) / v.dot(e.frame.nsh.cast<cd>());
        EXPECT_LE(std::abs(ratio - 2.0), 1e-10);
    }
}

TEST(Amplitude, ZeroStaysZero) {
    for (const Branch& b : {kPp, kSm}) {
        RayState s = make_ray(b, seed());
        s.amp_p = 0.0;
        s.amp_s.setZero();
        const RayState e = advance_to(s, lens(), 1e-2, 1.0);
        EXPECT_EQ(e.amp_p, cd(0.0));
        EXPECT_EQ(max_abs(e.amp_s), 0.0);
    }
}

TEST(Amplitude, SingularZRejected) {
    RayState s = make_ray(kPp, seed());
    s.dzQ.setZero();
    s.dzP.setZero();
    try {
        amplitude_rhs(s, lens());
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::SingularZ);
    }
    EXPECT_THROW(coupling_symmetry_residual(s), Error);
}

// The physical S polarization does not depend on how the frame is carried.
TEST(Amplitude, SPolarizationIsFrameCovariant) {
    for (const Branch& b : {kSp, kSm}) {
        const RayState a = advance_to(make_ray(b, seed(), FrameMode::Convention), lens(), 1e-3, 1.0);
        const RayState p = advance_to(make_ray(b, seed(), FrameMode::ParallelTransport), lens(), 1e-3, 1.0);
        for (auto [bsv, bsh] : {std::pair<cd, cd>{1.0, 0.0}, {0.0, 1.0}, {cd(0.3, 0.4), cd(-1.0, 0.2)}}) {
            const CVec3 va = a.s_vector(bsv, bsh), vp = p.s_vector(bsv, bsh);
            EXPECT_LE((va - vp).norm(), 1e-8 * va.norm());
            EXPECT_LE(std::abs(va.dot(a.P.normalized().cast<cd>())), 1e-12 * va.norm());
        }
    }
    // the convention frame genuinely rotates on this ray
    const RayState s = advance_to(make_ray(kSp, seed()), lens(), 1e-3, 0.5);
    EXPECT_GT(std::abs(amplitude_rhs(s, lens()).coupling), 1e-4);
}

TEST(Frame, DerivativeIdentities) {
    for (FrameMode mode : {FrameMode::Convention, FrameMode::ParallelTransport}) {
        const Trajectory tr = integrate(make_ray(kSp, seed(), mode), lens(), 1e-3, {0.2, 0.6, 1.0});
        for (const RayState& s : tr.samples) {
            const FrameRates r = frame_rhs(s, lens());
            const Frame f = current_frame(s);
            EXPECT_LE(std::abs(r.dnp.dot(f.np)), 1e-14);
            EXPECT_LE(std::abs(r.dnsh.dot(f.nsv) + r.dnsv.dot(f.nsh)), 1e-12);
            EXPECT_LE(std::abs(r.dnsv.dot(f.nsv)), 1e-12);
            EXPECT_LE(frame_orthonormality(s), 1e-10);
        }
    }
    const RayState c = make_ray(kSp, seed());
    const FrameRates r = frame_rhs(c, homogeneous());
    EXPECT_EQ(r.dnp, Vec3::Zero());
    EXPECT_EQ(r.dnsv, Vec3::Zero());
    EXPECT_EQ(r.dnsh, Vec3::Zero());
}

TEST(Frame, ConventionFrameDegenerateOnAxis) {
    try {
        convention_frame(Vec3(0, 0, 1), Vec3::UnitZ());
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::FrameDegenerate);
    }
}

TEST(Step, RejectsNonPositiveOrNonFinite) {
    const RayState s = make_ray(kPp, seed());
    for (double dt : {0.0, -1e-3, std::nan(""), double(INFINITY)}) {
        try {
            step(s, lens(), dt);
            FAIL();
        } catch (const Error& e) {
            EXPECT_EQ(e.code(), ErrorCode::InvalidStep);
        }
    }
    EXPECT_THROW(integrate(s, lens(), 1e-2, {0.5, 0.5}), Error);
}

TEST(Step, ConstantMediumRayIsExact) {
    const PhasePoint z{Vec3(0.1, -0.2, 0.3), Vec3(0.3, 0.4, 1.2)};
    for (const Branch& b : {kPp, kPm, kSp}) {
        RayState s = make_ray(b, z);
        for (int i = 0; i < 37; ++i) s = step(s, homogeneous(), 0.027);
        const double c = b.family == Family::P ? 2.0 : 1.0;
        EXPECT_LE(max_abs(s.Q - (z.q + b.s() * c * s.t * z.p.normalized())), 1e-12);
        EXPECT_NEAR(s.t, 37 * 0.027, 1e-14);
    }
}

TEST(Step, FourthOrderConvergence) {
    const RayState s0 = make_ray(kSp, seed());
    const auto m = lens();
    const double dt = 0.1;
    const RayState ref = advance_to(s0, m, dt / 32, 1.0);
    const double e1 = state_distance(advance_to(s0, m, dt, 1.0), ref);
    const double e2 = state_distance(advance_to(s0, m, dt / 2, 1.0), ref);
    EXPECT_GT(e1 / e2, 12.0);
    EXPECT_LT(e1 / e2, 20.0);
}

TEST(Diagnostics, InitialState) {
    const RayState s = make_ray(kPp, seed());
    EXPECT_EQ(symplectic_residual(s), 0.0);
    EXPECT_EQ(coupling_symmetry_residual(s), 0.0);
    const ZCondition zc = z_condition(s);
    EXPECT_LE(std::abs(zc.det - 8.0), 1e-14);
    EXPECT_NEAR(zc.cond, 1.0, 1e-14);
    EXPECT_EQ(jacobian_consistency(s), 0.0);
}

TEST(Diagnostics, ConstantMediumClosedForms) {
    const PhasePoint z{Vec3::Zero(), Vec3(1.0, 0.0, 0.0)};
    for (const Branch& b : {kPp, kPm}) {
        const RayState s = advance_to(make_ray(b, z), homogeneous(), 1e-2, 1.0);
        EXPECT_LE(symplectic_residual(s), 1e-12);
        EXPECT_LE(coupling_symmetry_residual(s), 1e-13);
        EXPECT_LE(std::abs(z_condition(s).det - cd(0, -16 * b.s())), 1e-10);
    }
    const RayState h = advance_to(make_ray(kPp, z), homogeneous(), 1e-2, 0.5);
    const double c = 2.0, t = 0.5;
    const cd closed = -2.0 * kI * c / (2.0 - kI * c * t);
    EXPECT_LE(std::abs(trace_rate(h, homogeneous()) - closed), 1e-12);
    EXPECT_LE(trace_identity_residual(h, homogeneous()), 1e-9);
}

TEST(Diagnostics, TraceIdentityGenericMedium) {
    for (const Branch& b : {kPp, kPm, kSp}) {
        const RayState s = make_ray(b, seed());
        EXPECT_LE(trace_identity_residual(s, lens()), 1e-6) << b.name();
        const RayState e = advance_to(s, lens(), 1e-3, 0.7);
        EXPECT_LE(trace_identity_residual(e, lens()), 1e-6) << b.name();
    }
}

TEST(Diagnostics, LensTrajectoryBudgets) {
    const auto m = lens();
    std::vector<double> times;
    for (int i = 1; i <= 10; ++i) times.push_back(0.1 * i);
    for (const Branch& b : {kPp, kSm}) {
        const Trajectory tr = integrate(make_ray(b, seed()), m, 1e-3, times);
        for (const RayState& s : tr.samples) {
            EXPECT_LE(hamiltonian_drift(s, m), 1e-8);
            EXPECT_LE(symplectic_residual(s), 1e-8);
            EXPECT_LE(coupling_symmetry_residual(s), 1e-8);
            EXPECT_LE(jacobian_consistency(s), 1e-12);
        }
    }
}

TEST(Diagnostics, DetZFloorOnConfinedTrajectories) {
    const auto m = lens();
    const double delta = 0.1;
    std::mt19937 rng(9);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    int tested = 0;
    while (tested < 12) {
        const Vec3 q = 2.0 * Vec3(u(rng), u(rng), u(rng)), p = 3.0 * Vec3(u(rng), u(rng), u(rng));
        if (confinement_delta(q, p) < delta) continue;
        ++tested;
        const Branch b = tested % 2 ? kPp : kSm;
        const Trajectory tr = integrate(make_ray(b, {q, p}), m, 1e-2, {0.25, 0.5, 0.75, 1.0});
        for (const RayState& s : tr.samples) {
            const ZCondition zc = z_condition(s);
            EXPECT_GE(std::abs(zc.det), 1e-6);
            EXPECT_TRUE(std::isfinite(zc.cond));
            EXPECT_GE(s.P.norm(), delta / 2);
        }
    }
}
