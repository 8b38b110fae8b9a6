#pragma once

#include "fga/dynamics.hpp"
#include "fga/medium.hpp"
#include "fga/parallel.hpp"
#include "fga/phase_space.hpp"

#include <array>
#include <vector>

namespace fga {

// Packets that share one momentum node and one branch. In a constant
// medium every packet of the group follows the same trajectory up to a
// translation, so a single RayState seeded at q_ref serves all of them.
// Otherwise the group holds exactly one packet.
struct RayGroup {
    RayState state;
    Vec3 q_ref = Vec3::Zero();
    std::vector<std::array<int, 3>> iq;
    std::vector<cd> c0;  // P: alpha_P;  S: alpha_SV
    std::vector<cd> c1;  // S: alpha_SH; empty for P
    std::size_t p_index = 0;

    Vec3 displacement() const { return state.Q - q_ref; }
};

struct EnsembleOptions {
    double prune_tol = 1e-5;  // relative to the largest |alpha| over all branches
    FrameMode frame_mode = FrameMode::Convention;
    double momentum_floor = 0.0;
};

struct PacketEnsemble {
    PhaseMesh mesh;
    double eps = 0.0;
    double t = 0.0;
    bool translation_shared = false;
    std::vector<RayGroup> groups;

    std::size_t packet_count() const {
        std::size_t n = 0;
        for (const auto& g : groups) n += g.iq.size();
        return n;
    }
};

namespace detail {
struct BranchSpec {
    Branch branch;
    int a;  // AmpBranch of c0
    int b;  // AmpBranch of c1, -1 for P
};
inline const std::array<BranchSpec, 4>& branch_specs() {
    static const std::array<BranchSpec, 4> s = {{{{Family::P, Sign::Plus}, kPPlus, -1},
                                                 {{Family::P, Sign::Minus}, kPMinus, -1},
                                                 {{Family::S, Sign::Plus}, kSVPlus, kSHPlus},
                                                 {{Family::S, Sign::Minus}, kSVMinus, kSHMinus}}};
    return s;
}
}  // namespace detail

inline PacketEnsemble build_ensemble(const AmplitudeField& amp, const MediumModel& medium,
                                     const EnsembleOptions& opt = {}) {
    const PhaseMesh& mesh = amp.mesh;
    PacketEnsemble e;
    e.mesh = mesh;
    e.eps = amp.eps;
    e.translation_shared = medium.is_constant();
    double amax = 0.0;
    for (int b = 0; b < kBranchCount; ++b) amax = std::max(amax, amp.max_abs(b));
    if (amax == 0.0) return e;
    const double thr = opt.prune_tol * amax;
    const double w = mesh.weight();
    const Vec3 q_center(0.5 * (mesh.q_axes[0][0] + mesh.q_axes[0].last()),
                        0.5 * (mesh.q_axes[1][0] + mesh.q_axes[1].last()),
                        0.5 * (mesh.q_axes[2][0] + mesh.q_axes[2].last()));

    for (const auto& spec : detail::branch_specs()) {
        for (std::size_t pf = 0; pf < mesh.p_count(); ++pf) {
            const auto ip = mesh.p_unflat(pf);
            if (!mesh.active(ip)) continue;
            RayGroup g;
            g.p_index = pf;
            for (std::size_t qf = 0; qf < mesh.q_count(); ++qf) {
                const auto iq = mesh.q_unflat(qf);
                const std::size_t idx = mesh.index(iq, ip);
                const cd a = amp.alpha[spec.a][idx];
                const cd b = spec.b >= 0 ? amp.alpha[spec.b][idx] : cd{};
                if (std::max(std::abs(a), std::abs(b)) <= thr) continue;
                if (e.translation_shared) {
                    g.iq.push_back(iq);
                    g.c0.push_back(w * a);
                    if (spec.b >= 0) g.c1.push_back(w * b);
                } else {
                    RayGroup one;
                    one.p_index = pf;
                    one.q_ref = mesh.q(iq);
                    one.iq = {iq};
                    one.c0 = {w * a};
                    if (spec.b >= 0) one.c1 = {w * b};
                    one.state = make_ray(spec.branch, {one.q_ref, mesh.p(ip)}, opt.frame_mode,
                                         opt.momentum_floor);
                    e.groups.push_back(std::move(one));
                }
            }
            if (e.translation_shared && !g.iq.empty()) {
                g.q_ref = q_center;
                g.state = make_ray(spec.branch, {q_center, mesh.p(ip)}, opt.frame_mode,
                                   opt.momentum_floor);
                e.groups.push_back(std::move(g));
            }
        }
    }
    return e;
}

// Advances every group to time T.
inline void propagate(PacketEnsemble& e, const MediumModel& medium, double dt, double T) {
    parallel_for(e.groups.size(), [&](std::size_t i) {
        e.groups[i].state = advance_to(e.groups[i].state, medium, dt, T);
    });
    e.t = T;
}

}  // namespace fga
