#pragma once

#include "fga/config.hpp"
#include "fga/dynamics.hpp"
#include "fga/ensemble.hpp"
#include "fga/hyperbolic.hpp"
#include "fga/io.hpp"
#include "fga/phase_space.hpp"
#include "fga/reference.hpp"
#include "fga/synthesis.hpp"

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

namespace fga {

inline constexpr int kExitOk = 0;
inline constexpr int kExitConfig = 2;
inline constexpr int kExitBudget = 3;
inline constexpr int kExitUnsupported = 4;

struct OutputFile {
    std::string name;
    std::string bytes;
};

// Everything a run produces; the caller writes the files once the run is
// complete.
struct RunReport {
    int exit_code = kExitOk;
    std::vector<OutputFile> files;
    std::vector<std::string> messages;
};

inline Provenance provenance(const FgaConfig& c) { return {hash_hex(c.hash), kVersion}; }

// -- shared pipeline ------------------------------------------------------

struct Prepared {
    double eps = 0.0;
    GaussianData data;
    AmplitudeField amp;
    PacketEnsemble ensemble;
};

inline PhaseMesh config_mesh(const FgaConfig& c, double eps, double factor_scale = 1.0) {
    return mesh_for(c.initial.data(eps), eps, c.mesh.spacing_factor * factor_scale, c.mesh.extent, c.delta);
}

inline EnsembleOptions ensemble_options(const FgaConfig& c) {
    return {c.synthesis.prune_tol, c.dynamics.frame_mode, c.momentum_floor()};
}

inline Prepared prepare(const FgaConfig& c, double eps, double factor_scale = 1.0) {
    Prepared p;
    p.eps = eps;
    p.data = c.initial.data(eps);
    p.amp = decompose_closed_form(eps, p.data, config_mesh(c, eps, factor_scale), c.medium, c.delta);
    p.ensemble = build_ensemble(p.amp, c.medium, ensemble_options(c));
    return p;
}

// Smallest 2^a 3^b 5^c not below n.
inline int fft_size(int n) {
    for (int m = std::max(n, 1);; ++m) {
        int r = m;
        for (int f : {2, 3, 5})
            while (r % f == 0) r /= f;
        if (r == 1) return m;
    }
}

inline int box_points(const FgaConfig& c, double eps, double pmax) {
    if (c.mesh.box_n > 0) return c.mesh.box_n;
    if (!(pmax > 0.0)) return 16;
    const double dx = c.mesh.dx_factor * kPi * eps / pmax;
    return fft_size(static_cast<int>(std::ceil(c.mesh.box_length / dx)));
}

// Box nodes that any packet of the ensemble can reach, clipped to the box.
inline Grid3 packet_window(const PacketEnsemble& e, const Grid3& box, double r_cut) {
    const double R = r_cut * std::sqrt(e.eps);
    Vec3 lo = Vec3::Constant(INFINITY), hi = Vec3::Constant(-INFINITY);
    for (const auto& g : e.groups) {
        const Vec3 d = g.displacement();
        for (int k = 0; k < 3; ++k) {
            const Axis& qa = e.mesh.q_axes[k];
            lo(k) = std::min(lo(k), qa.origin + d(k) - R);
            hi(k) = std::max(hi(k), qa.last() + d(k) + R);
        }
    }
    Grid3 w;
    for (int k = 0; k < 3; ++k) {
        const Axis& a = box.axes[k];
        int i0 = 0, i1 = 0;
        if (std::isfinite(lo(k))) {
            i0 = std::clamp(static_cast<int>(std::floor((lo(k) - a.origin) / a.spacing)), 0, a.n - 1);
            i1 = std::clamp(static_cast<int>(std::ceil((hi(k) - a.origin) / a.spacing)), 0, a.n - 1);
        }
        w.axes[k] = {a[i0], a.spacing, i1 - i0 + 1};
    }
    return w;
}

// -- decompose ------------------------------------------------------------

struct TailRow {
    double eps, tail, total, ratio;
    bool high_frequency;
    std::array<double, kBranchCount> max_alpha;
};

inline RunReport run_decompose(const FgaConfig& c, std::vector<TailRow>* rows_out = nullptr) {
    RunReport rep;
    const Provenance prov = provenance(c);
    std::vector<std::string> cols = {"eps", "delta", "tail_mass", "total_mass", "tail_ratio", "classification"};
    for (int b = 0; b < kBranchCount; ++b) cols.push_back(std::string("max_abs_alpha_") + amp_branch_name(b));
    Csv csv(prov, cols);
    const auto eps_list = c.eps_values();
    for (std::size_t i = 0; i < eps_list.size(); ++i) {
        const double eps = eps_list[i];
        const GaussianData d = c.initial.data(eps);
        const PhaseMesh mesh = config_mesh(c, eps);
        const AmplitudeField amp = decompose_closed_form(eps, d, mesh, c.medium, c.delta);
        const std::vector<cd> g = fbi_closed_form(eps, d, mesh);
        TailRow r{eps, high_freq_energy_outside(eps, g, mesh, c.delta, 3), phase_mass(g, mesh, 3), 0.0, true, {}};
        r.ratio = r.total > 0.0 ? r.tail / r.total : 0.0;
        r.high_frequency = r.ratio <= c.tail_tol;
        std::vector<std::string> cells = {fmt(eps), fmt(c.delta), fmt(r.tail), fmt(r.total), fmt(r.ratio),
                                          r.high_frequency ? "asymptotically_high_frequency"
                                                           : "NOT_asymptotically_high_frequency"};
        for (int b = 0; b < kBranchCount; ++b) {
            r.max_alpha[b] = amp.max_abs(b);
            cells.push_back(fmt(r.max_alpha[b]));
        }
        csv.row_strings(cells);
        if (!r.high_frequency)
            rep.messages.push_back("eps = " + fmt(eps) + ": tail ratio " + fmt(r.ratio) +
                                   " outside K_delta; data are NOT asymptotically high frequency");
        rep.files.push_back({"amplitudes_" + std::to_string(i) + ".fgaampl", encode_amplitudes(amp, prov)});
        if (rows_out) rows_out->push_back(r);
    }
    rep.files.insert(rep.files.begin(), {"decompose.csv", csv.text()});
    return rep;
}

// -- propagate ------------------------------------------------------------

inline RunReport run_propagate(const FgaConfig& c) {
    RunReport rep;
    const Provenance prov = provenance(c);
    Csv csv(prov, {"eps", "t", "group", "branch", "Qx", "Qy", "Qz", "Px", "Py", "Pz", "a11_re", "a11_im",
                   "a12_re", "a12_im", "a21_re", "a21_im", "a22_re", "a22_im", "detZ_re", "detZ_im",
                   "symplectic", "hamiltonian_drift", "coupling_symmetry"});
    for (double eps : c.eps_values()) {
        Prepared p = prepare(c, eps);
        for (double t : c.dynamics.times()) {
            propagate(p.ensemble, c.medium, c.dynamics.dt, t);
            for (std::size_t gi = 0; gi < p.ensemble.groups.size(); ++gi) {
                const RayState& s = p.ensemble.groups[gi].state;
                const CMat2 a = s.branch.family == Family::P ? CMat2(CMat2::Identity() * s.amp_p) : s.amp_s;
                const cd det = s.Z().determinant();
                csv.row_strings({fmt(eps), fmt(t), std::to_string(gi), s.branch.name(), fmt(s.Q(0)), fmt(s.Q(1)),
                                 fmt(s.Q(2)), fmt(s.P(0)), fmt(s.P(1)), fmt(s.P(2)), fmt(a(0, 0).real()),
                                 fmt(a(0, 0).imag()), fmt(a(0, 1).real()), fmt(a(0, 1).imag()),
                                 fmt(a(1, 0).real()), fmt(a(1, 0).imag()), fmt(a(1, 1).real()),
                                 fmt(a(1, 1).imag()), fmt(det.real()), fmt(det.imag()),
                                 fmt(symplectic_residual(s)), fmt(hamiltonian_drift(s, c.medium)),
                                 fmt(coupling_symmetry_residual(s))});
            }
        }
    }
    rep.files.push_back({"trajectories.csv", csv.text()});
    return rep;
}

// -- reconstruct ----------------------------------------------------------

inline ReconstructOptions reconstruct_options(const FgaConfig& c, bool derived = true) {
    return {c.synthesis.r_cut, derived, c.synthesis.lattice};
}

inline RunReport run_reconstruct(const FgaConfig& c) {
    RunReport rep;
    const Provenance prov = provenance(c);
    Csv csv(prov, {"eps", "t", "file", "n0", "n1", "n2", "l2_norm", "energy_seminorm"});
    const auto eps_list = c.eps_values();
    for (std::size_t i = 0; i < eps_list.size(); ++i) {
        const double eps = eps_list[i];
        Prepared p = prepare(c, eps);
        const int N = box_points(c, eps, p.amp.mesh.max_momentum());
        const Grid3 box = periodic_grid(c.mesh.box_length, N);
        const auto times = c.dynamics.times();
        for (std::size_t j = 0; j < times.size(); ++j) {
            propagate(p.ensemble, c.medium, c.dynamics.dt, times[j]);
            const Grid3 win = packet_window(p.ensemble, box, c.synthesis.r_cut);
            const WaveField w = reconstruct(p.ensemble, c.medium, win, reconstruct_options(c));
            const std::string name = "field_" + std::to_string(i) + "_" + std::to_string(j) + ".fgagrid";
            csv.row_strings({fmt(eps), fmt(times[j]), name, std::to_string(win.axes[0].n),
                             std::to_string(win.axes[1].n), std::to_string(win.axes[2].n), fmt(l2_norm(w)),
                             fmt(energy_seminorm(w))});
            rep.files.push_back({name, encode_grid(w, prov)});
        }
    }
    rep.files.insert(rep.files.begin(), {"reconstruct.csv", csv.text()});
    return rep;
}

// -- converge -------------------------------------------------------------

struct ConvergePoint {
    double eps = 0.0, T = 0.0;
    double energy_error = 0.0, l2_error = 0.0;
    double energy_ref = 0.0, l2_ref = 0.0;
    int box_n = 0;
    std::array<int, 3> window{};
    std::size_t groups = 0;

    double energy_relative() const { return energy_ref > 0.0 ? energy_error / energy_ref : 0.0; }
    double l2_relative() const { return l2_ref > 0.0 ? l2_error / l2_ref : 0.0; }
};

// FGA against the exact periodic solution on the full box at time T. The
// FGA sum lives on the window of box nodes its packets reach; outside it
// the FGA field is zero and the exact field counts in full.
inline ConvergePoint converge_point(const FgaConfig& c, double eps, double T, double factor_scale = 1.0,
                                    bool derived = true) {
    detail::require_constant(c.medium);
    ConvergePoint r;
    r.eps = eps;
    r.T = T;
    Prepared p = prepare(c, eps, factor_scale);
    r.groups = p.ensemble.groups.size();
    r.box_n = box_points(c, eps, p.amp.mesh.max_momentum());
    const Grid3 box = periodic_grid(c.mesh.box_length, r.box_n);
    propagate(p.ensemble, c.medium, c.dynamics.dt, T);
    const Grid3 win = packet_window(p.ensemble, box, c.synthesis.r_cut);
    for (int k = 0; k < 3; ++k) r.window[k] = win.axes[k].n;
    WaveField w = p.ensemble.groups.empty() ? WaveField(win, eps, derived)
                                            : reconstruct(p.ensemble, c.medium, win, reconstruct_options(c, derived));
    std::array<int, 3> off;
    for (int k = 0; k < 3; ++k)
        off[k] = static_cast<int>(std::lround((win.axes[k].origin - box.axes[k].origin) / box.axes[k].spacing));

    std::array<double, 4> err{}, ref{};  // u, du_dt, div, curl
    std::vector<cd> buf;
    const int ncomp = derived ? kFieldComponents : 3;
    const int n0 = box.axes[0].n, n1 = box.axes[1].n, n2 = box.axes[2].n;
    for (int comp = 0; comp < ncomp; ++comp) {
        exact_gaussian_component(p.data, eps, c.medium, box, T, comp, buf);
        int stride, offset;
        const std::vector<cd>& f = field_slot(w, comp, stride, offset);
        std::vector<std::array<double, 2>> slab(n0);
        parallel_for(n0, [&](std::size_t i) {
            double e = 0.0, s = 0.0;
            const int wi = static_cast<int>(i) - off[0];
            const bool in0 = wi >= 0 && wi < win.axes[0].n;
            for (int j = 0; j < n1; ++j) {
                const int wj = j - off[1];
                const bool in1 = in0 && wj >= 0 && wj < win.axes[1].n;
                for (int k = 0; k < n2; ++k) {
                    const cd ex = buf[box.index(static_cast<int>(i), j, k)];
                    const int wk = k - off[2];
                    cd fg = 0.0;
                    if (in1 && wk >= 0 && wk < win.axes[2].n) fg = f[stride * win.index(wi, wj, wk) + offset];
                    e += std::norm(fg - ex);
                    s += std::norm(ex);
                }
            }
            slab[i] = {e, s};
        });
        const int part = comp < 3 ? 0 : comp < 6 ? 1 : comp == 6 ? 2 : 3;
        for (const auto& v : slab) {
            err[part] += v[0];
            ref[part] += v[1];
        }
    }
    const double dV = box.cell_volume();
    for (int k = 0; k < 4; ++k) {
        err[k] *= dV;
        ref[k] *= dV;
    }
    r.l2_error = std::sqrt(err[0]);
    r.l2_ref = std::sqrt(ref[0]);
    if (derived) {
        r.energy_error = eps * (std::sqrt(err[1]) + std::sqrt(err[2]) + std::sqrt(err[3]));
        r.energy_ref = eps * (std::sqrt(ref[1]) + std::sqrt(ref[2]) + std::sqrt(ref[3]));
    }
    return r;
}

// Least-squares slope of log y against log x.
inline double loglog_slope(const std::vector<double>& x, const std::vector<double>& y) {
    const std::size_t n = x.size();
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (std::size_t i = 0; i < n; ++i) {
        const double a = std::log(x[i]), b = std::log(y[i]);
        sx += a;
        sy += b;
        sxx += a * a;
        sxy += a * b;
    }
    return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

struct ConvergeResult {
    std::vector<ConvergePoint> points;
    double slope = NAN;
    bool slope_checked = false;
    bool finite = true, monotone = true;
    bool pass = true;
};

inline RunReport run_converge(const FgaConfig& c, ConvergeResult* out = nullptr) {
    if (!c.medium.is_constant())
        throw Error(ErrorCode::VariableMediumUnsupported, "converge needs a constant medium");
    RunReport rep;
    const Provenance prov = provenance(c);
    ConvergeResult res;
    for (double eps : c.eps_values()) res.points.push_back(converge_point(c, eps, c.dynamics.T));

    std::vector<double> ex, ey;
    for (std::size_t i = 0; i < res.points.size(); ++i) {
        const ConvergePoint& p = res.points[i];
        res.finite = res.finite && std::isfinite(p.energy_error) && std::isfinite(p.l2_error);
        ex.push_back(p.eps);
        ey.push_back(p.energy_error);
        if (i > 0 && p.eps < res.points[i - 1].eps && !(p.energy_error < res.points[i - 1].energy_error))
            res.monotone = false;
    }
    res.slope_checked = c.dynamics.T > 0.0 && res.points.size() >= 2;
    if (res.slope_checked) {
        bool positive = true;
        for (double e : ey) positive = positive && e > 0.0;
        res.slope = positive ? loglog_slope(ex, ey) : NAN;
        res.pass = res.finite && res.monotone && res.slope >= c.min_slope;
    }

    Csv table(prov, {"eps", "T", "energy_error", "l2_error", "energy_relative", "l2_relative", "box_n",
                     "fitted_slope"});
    Csv errors(prov, {"eps", "T", "mode", "error", "relative_error"});
    for (const ConvergePoint& p : res.points) {
        table.row_strings({fmt(p.eps), fmt(p.T), fmt(p.energy_error), fmt(p.l2_error), fmt(p.energy_relative()),
                           fmt(p.l2_relative()), std::to_string(p.box_n), fmt(res.slope)});
        errors.row_strings({fmt(p.eps), fmt(p.T), "energy", fmt(p.energy_error), fmt(p.energy_relative())});
        errors.row_strings({fmt(p.eps), fmt(p.T), "l2", fmt(p.l2_error), fmt(p.l2_relative())});
    }
    rep.files.push_back({"converge.csv", table.text()});
    rep.files.push_back({"errors.csv", errors.text()});
    if (res.slope_checked) {
        rep.messages.push_back("fitted slope " + fmt(res.slope) + (res.pass ? " (pass)" : " (budget exceeded)"));
        if (!res.pass) rep.exit_code = kExitBudget;
    } else {
        rep.messages.push_back("slope test skipped");
    }
    if (out) *out = res;
    return rep;
}

// -- validate -------------------------------------------------------------

// Portable uniform draws in [0, 1) from a 64-bit generator.
class Uniform {
public:
    explicit Uniform(std::uint64_t seed) : s_(seed) {}
    double operator()() {
        // splitmix64
        std::uint64_t z = (s_ += 0x9e3779b97f4a7c15ull);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
        z ^= z >> 31;
        return static_cast<double>(z >> 11) * 0x1.0p-53;
    }
    double operator()(double a, double b) { return a + (b - a) * (*this)(); }

private:
    std::uint64_t s_;
};

inline Vec3 random_direction(Uniform& u) {
    for (;;) {
        const Vec3 v(u(-1, 1), u(-1, 1), u(-1, 1));
        const double n = v.norm();
        if (n > 0.1 && n <= 1.0) return v / n;
    }
}

struct ValidateRow {
    double t;
    int ray;
    std::string branch, diagnostic;
    double value, budget;
    bool pass;
};

// Relative gap between the physical S amplitude vectors of two runs that
// differ only in the frame mode.
inline double frame_covariance(const RayState& a, const RayState& b) {
    double r = 0.0;
    for (int k = 0; k < 2; ++k) {
        const CVec3 va = a.s_vector(k == 0 ? 1.0 : 0.0, k == 0 ? 0.0 : 1.0);
        const CVec3 vb = b.s_vector(k == 0 ? 1.0 : 0.0, k == 0 ? 0.0 : 1.0);
        r = std::max(r, (va - vb).norm() / va.norm());
    }
    return r;
}

inline double expected_eigenvalue(EigenLabel l, double c_p, double c_s, double pn) {
    switch (l) {
        case EigenLabel::Zero: return 0.0;
        case EigenLabel::PPlus: return c_p * pn;
        case EigenLabel::PMinus: return -c_p * pn;
        case EigenLabel::SPlus1:
        case EigenLabel::SPlus2: return c_s * pn;
        default: return -c_s * pn;
    }
}

inline RunReport run_validate(const FgaConfig& c, std::vector<ValidateRow>* rows_out = nullptr) {
    RunReport rep;
    const Provenance prov = provenance(c);
    const ValidateSpec& v = c.validate;
    const MediumModel& m = c.medium;
    const double floor = c.momentum_floor();
    const double T = c.dynamics.T > 0.0 ? c.dynamics.T : 1.0;
    std::vector<double> times;
    for (int k = 1; k <= v.samples; ++k) times.push_back(T * k / v.samples);

    Uniform rng(c.seed);
    const Branch branches[4] = {{Family::P, Sign::Plus}, {Family::P, Sign::Minus}, {Family::S, Sign::Plus},
                                {Family::S, Sign::Minus}};
    struct Seed {
        Branch b;
        PhasePoint z;
    };
    std::vector<Seed> seeds;
    for (int i = 0; i < v.rays; ++i) {
        const Vec3 q = m.center + Vec3(rng(-0.5, 0.5), rng(-0.5, 0.5), rng(-0.5, 0.5));
        const Vec3 p = rng(0.6, 1.4) * random_direction(rng);
        seeds.push_back({branches[i % 4], {q, p}});
    }

    std::vector<std::vector<ValidateRow>> per_ray(seeds.size());
    parallel_for(seeds.size(), [&](std::size_t i) {
        const Seed& sd = seeds[i];
        const Trajectory tc = integrate(make_ray(sd.b, sd.z, FrameMode::Convention, floor), m, c.dynamics.dt, times);
        Trajectory tp;
        if (sd.b.family == Family::S)
            tp = integrate(make_ray(sd.b, sd.z, FrameMode::ParallelTransport, floor), m, c.dynamics.dt, times);
        auto& rows = per_ray[i];
        for (std::size_t k = 0; k < times.size(); ++k) {
            const RayState& s = tc.samples[k];
            auto add = [&](const char* name, double value, double budget, bool pass) {
                rows.push_back({times[k], static_cast<int>(i), sd.b.name(), name, value, budget, pass});
            };
            auto le = [&](const char* name, double value, double budget) {
                add(name, value, budget, value <= budget);
            };
            le("hamiltonian_drift", hamiltonian_drift(s, m), v.hamiltonian);
            le("symplectic", symplectic_residual(s), v.symplectic);
            le("coupling_symmetry", coupling_symmetry_residual(s), v.coupling);
            const ZCondition zc = z_condition(s);
            add("abs_det_z", std::abs(zc.det), v.det_floor, std::abs(zc.det) >= v.det_floor);
            add("cond_z", zc.cond, INFINITY, std::isfinite(zc.cond));
            le("trace_identity", trace_identity_residual(s, m), v.trace);
            le("jacobian_consistency", jacobian_consistency(s), v.symplectic);
            le("frame_orthonormality", frame_orthonormality(s), v.covariance);
            if (sd.b.family == Family::S) le("frame_covariance", frame_covariance(s, tp.samples[k]), v.covariance);
        }
    });

    Csv csv(prov, {"t", "ray", "branch", "diagnostic", "value", "budget", "pass"});
    bool ok = true;
    for (const auto& rows : per_ray)
        for (const ValidateRow& r : rows) {
            csv.row_strings({fmt(r.t), std::to_string(r.ray), r.branch, r.diagnostic, fmt(r.value), fmt(r.budget),
                             r.pass ? "1" : "0"});
            ok = ok && r.pass;
            if (rows_out) rows_out->push_back(r);
        }

    Csv eig(prov, {"sample", "eigenpair", "H", "spectrum_error", "right_residual", "left_residual", "budget",
                   "pass"});
    for (int i = 0; i < v.eigen_samples; ++i) {
        const Vec3 q = m.center + Vec3(rng(-0.5, 0.5), rng(-0.5, 0.5), rng(-0.5, 0.5));
        const Vec3 p = rng(0.2, 2.0) * random_direction(rng);
        const EigenSystem es = eigenpairs(q, p, m);
        const Speeds sp = eval_speeds(m, q);
        const SymbolMatrix S = assemble_symbol(p, sp.c_p, sp.c_s);
        for (const EigenPair& e : es.pairs) {
            const double spec = std::abs(e.H - expected_eigenvalue(e.label, sp.c_p, sp.c_s, p.norm()));
            const double rr = right_residual(S, e), lr = left_residual(S, e);
            const bool pass = std::max({spec, rr, lr}) <= v.eigen;
            ok = ok && pass;
            eig.row_strings({std::to_string(i), to_string(e.label), fmt(e.H), fmt(spec), fmt(rr), fmt(lr),
                             fmt(v.eigen), pass ? "1" : "0"});
        }
    }
    rep.files.push_back({"validate.csv", csv.text()});
    rep.files.push_back({"eigenpairs.csv", eig.text()});
    if (!ok) {
        rep.exit_code = kExitBudget;
        rep.messages.push_back("one or more diagnostics exceed their budget");
    }
    return rep;
}

inline RunReport run_mode(const std::string& mode, const FgaConfig& c) {
    if (mode == "decompose") return run_decompose(c);
    if (mode == "propagate") return run_propagate(c);
    if (mode == "reconstruct") return run_reconstruct(c);
    if (mode == "converge") return run_converge(c);
    if (mode == "validate") return run_validate(c);
    throw Error(ErrorCode::ConfigError, "unknown mode '" + mode + "'");
}

}  // namespace fga
