#pragma once

#include "fga/medium.hpp"
#include "fga/types.hpp"

#include <array>
#include <cmath>
#include <string>
#include <vector>

namespace fga {

using Mat7 = Eigen::Matrix<double, 7, 7>;
using Vec7 = Eigen::Matrix<double, 7, 1>;

// Unknowns X = (v1, v2, v3, div u, curl u_1..3); entries are 1-based (row, col).
struct SparseEntry {
    int row, col;
    double coef_cp2, coef_cs2, coef_one;  // value = coef_cp2 c_p^2 + coef_cs2 c_s^2 + coef_one
};

inline const std::array<std::array<SparseEntry, 6>, 3>& symbol_entries() {
    static const std::array<std::array<SparseEntry, 6>, 3> e = {{
        {{{1, 4, 1, 0, 0}, {2, 7, 0, 1, 0}, {3, 6, 0, -1, 0}, {4, 1, 0, 0, 1}, {7, 2, 0, 0, 1}, {6, 3, 0, 0, -1}}},
        {{{1, 7, 0, -1, 0}, {2, 4, 1, 0, 0}, {3, 5, 0, 1, 0}, {4, 2, 0, 0, 1}, {5, 3, 0, 0, 1}, {7, 1, 0, 0, -1}}},
        {{{1, 6, 0, 1, 0}, {2, 5, 0, -1, 0}, {3, 4, 1, 0, 0}, {4, 3, 0, 0, 1}, {6, 1, 0, 0, 1}, {5, 2, 0, 0, -1}}},
    }};
    return e;
}

// The coefficient matrix multiplying d/dx_axis.
inline Mat7 axis_matrix(int axis, double c_p, double c_s) {
    Mat7 M = Mat7::Zero();
    for (const auto& t : symbol_entries()[axis])
        M(t.row - 1, t.col - 1) = t.coef_cp2 * c_p * c_p + t.coef_cs2 * c_s * c_s + t.coef_one;
    return M;
}

struct SymbolMatrix {
    Mat7 entries = Mat7::Zero();
    double c_p = 0.0, c_s = 0.0;
};

inline SymbolMatrix assemble_symbol(const Vec3& p, double c_p, double c_s) {
    SymbolMatrix s;
    s.c_p = c_p;
    s.c_s = c_s;
    for (int a = 0; a < 3; ++a) s.entries += p(a) * axis_matrix(a, c_p, c_s);
    return s;
}

enum class EigenLabel { Zero, PPlus, PMinus, SPlus1, SPlus2, SMinus1, SMinus2 };

inline const char* to_string(EigenLabel l) {
    switch (l) {
        case EigenLabel::Zero: return "zero";
        case EigenLabel::PPlus: return "p+";
        case EigenLabel::PMinus: return "p-";
        case EigenLabel::SPlus1: return "s+_1";
        case EigenLabel::SPlus2: return "s+_2";
        case EigenLabel::SMinus1: return "s-_1";
        case EigenLabel::SMinus2: return "s-_2";
    }
    return "?";
}

struct EigenPair {
    double H = 0.0;
    Vec7 R = Vec7::Zero();
    Vec7 L = Vec7::Zero();
    EigenLabel label = EigenLabel::Zero;
};

struct RepairRecord {
    EigenLabel label;
    char side;                // 'R' or 'L'
    double printed_residual;  // relative residual of the printed candidate
    double repaired_residual;
};

struct EigenSystem {
    std::array<EigenPair, 7> pairs;
    std::vector<RepairRecord> repairs;
    bool rotated = false;  // produced through the generic-frame fallback
};

inline double right_residual(const SymbolMatrix& S, const EigenPair& e) {
    return (S.entries * e.R - e.H * e.R).norm() / e.R.norm();
}
inline double left_residual(const SymbolMatrix& S, const EigenPair& e) {
    return (e.L.transpose() * S.entries - e.H * e.L.transpose()).norm() / e.L.norm();
}

// max |L_m . R_n - delta_mn|
inline double biorthonormality_residual(const EigenSystem& es) {
    double r = 0.0;
    for (int m = 0; m < 7; ++m)
        for (int n = 0; n < 7; ++n)
            r = std::max(r, std::abs(es.pairs[m].L.dot(es.pairs[n].R) - (m == n ? 1.0 : 0.0)));
    return r;
}

inline constexpr double kEigenTolerance = 1e-10;

namespace detail {

// Orthonormal basis of the null space of A.
inline Eigen::MatrixXd null_space(const Mat7& A, double scale) {
    Eigen::JacobiSVD<Mat7> svd(A, Eigen::ComputeFullV);
    const auto& sv = svd.singularValues();
    int rank = 0;
    for (int i = 0; i < 7; ++i)
        if (sv(i) > 1e-10 * std::max(1.0, scale)) ++rank;
    return svd.matrixV().rightCols(7 - rank);
}

// The printed left/right candidates for |p| > 0 in the order of EigenLabel.
inline void printed_candidates(const Vec3& p, double c_p, double c_s, std::array<double, 7>& H,
                               std::array<Vec7, 7>& R, std::array<Vec7, 7>& L) {
    const double p1 = p(0), p2 = p(1), p3 = p(2), pn = p.norm();
    R[0] << 0, 0, 0, 0, p1, p2, p3;
    L[0] = R[0] / (pn * pn);
    H[0] = 0.0;
    for (int s = 0; s < 2; ++s) {
        const double Hp = (s == 0 ? 1.0 : -1.0) * c_p * pn;
        H[1 + s] = Hp;
        R[1 + s] << p1, p2, p3, Hp / (c_p * c_p), 0, 0, 0;
        L[1 + s] << p1, p2, p3, Hp, 0, 0, 0;
        L[1 + s] *= c_p * c_p / (2.0 * Hp);
    }
    for (int s = 0; s < 2; ++s) {
        const double Hs = (s == 0 ? 1.0 : -1.0) * c_s * pn;
        const int i1 = 3 + 2 * s, i2 = 4 + 2 * s;
        H[i1] = H[i2] = Hs;
        R[i1] << -c_s * p1 * p2, c_s * (p1 * p1 + p3 * p3), c_s * p2 * p3, 0, -p3 * Hs, 0, p1 * Hs;
        L[i1] << p2 * p2 + p3 * p3, -p1 * p2, -p1 * p3, 0, 0, p3 * Hs, -p2 * Hs;
        L[i1] *= -1.0 / (Hs * p1 * p2);
        R[i2] << c_s * p1 * p3, c_s * p2 * p3, -c_s * (p1 * p1 + p2 * p2), 0, -p2 * Hs, p1 * Hs, 0;
        // printed with six entries; read with a trailing zero
        L[i2] << p2 * p1, -p1 * p1 - p3 * p3, p3 * p2, 0, p3 * Hs, -p1 * Hs, 0;
        L[i2] *= -1.0 / (Hs * p2 * p3);
    }
}

inline EigenSystem printed_system(const Vec3& p, double c_p, double c_s) {
    const SymbolMatrix S = assemble_symbol(p, c_p, c_s);
    std::array<double, 7> H;
    std::array<Vec7, 7> R, L;
    printed_candidates(p, c_p, c_s, H, R, L);
    EigenSystem es;
    const double scale = S.entries.norm();
    for (int n = 0; n < 7; ++n) {
        EigenPair& e = es.pairs[n];
        e.H = H[n];
        e.R = R[n];
        e.L = L[n];
        e.label = static_cast<EigenLabel>(n);
        const double rr = right_residual(S, e), lr = left_residual(S, e);
        if (rr > kEigenTolerance) {
            const Eigen::MatrixXd N = null_space(S.entries - e.H * Mat7::Identity(), scale);
            e.R = N * (N.transpose() * e.R);
            es.repairs.push_back({e.label, 'R', rr, right_residual(S, e)});
        }
        if (lr > kEigenTolerance) {
            const Eigen::MatrixXd N = null_space(S.entries.transpose() - e.H * Mat7::Identity(), scale);
            e.L = N * (N.transpose() * e.L);
            es.repairs.push_back({e.label, 'L', lr, left_residual(S, e)});
        }
    }
    // Biorthonormalize inside each eigenspace: L <- G^{-1} L with G = L R.
    auto fix = [&](std::vector<int> idx) {
        const int m = static_cast<int>(idx.size());
        Eigen::MatrixXd G(m, m), Lm(m, 7);
        for (int a = 0; a < m; ++a) {
            Lm.row(a) = es.pairs[idx[a]].L.transpose();
            for (int b = 0; b < m; ++b) G(a, b) = es.pairs[idx[a]].L.dot(es.pairs[idx[b]].R);
        }
        const Eigen::MatrixXd Ln = G.fullPivLu().solve(Lm);
        for (int a = 0; a < m; ++a) es.pairs[idx[a]].L = Ln.row(a).transpose();
    };
    fix({0});
    fix({1});
    fix({2});
    fix({3, 4});
    fix({5, 6});
    return es;
}

// A proper rotation that gives p' = Rot p with no vanishing component.
inline Mat3 generic_rotation(const Vec3& p) {
    const double pn = p.norm();
    const std::array<Vec3, 3> axes = {Vec3(1, 2, 3).normalized(), Vec3(-2, 1, 5).normalized(),
                                      Vec3(3, -1, 2).normalized()};
    for (const Vec3& a : axes)
        for (double ang : {0.7, 1.1, 0.3}) {
            const Mat3 Rot = Eigen::AngleAxisd(ang, a).toRotationMatrix();
            const Vec3 q = Rot * p;
            if (q.cwiseAbs().minCoeff() > 1e-3 * pn) return Rot;
        }
    return Mat3::Identity();
}

}  // namespace detail

inline bool generic_momentum(const Vec3& p, double tol = 1e-12) {
    return p.cwiseAbs().minCoeff() > tol * std::max(1.0, p.norm());
}

// Printed eigenvectors, validated against the symbol, repaired by
// projection where they fail, and biorthonormalized.
inline EigenSystem paper_eigenpairs(const Vec3& q, const Vec3& p, const MediumModel& medium) {
    if (!generic_momentum(p))
        throw Error(ErrorCode::DegenerateComponent, "some momentum component vanishes");
    const Speeds c = eval_speeds(medium, q);
    return detail::printed_system(p, c.c_p, c.c_s);
}

// Eigen system for any p != 0. Degenerate momenta are rotated to a generic
// frame with X -> blockdiag(Rot, 1, Rot) X, under which the symbol is
// covariant, and the vectors rotated back.
inline EigenSystem eigenpairs(const Vec3& q, const Vec3& p, const MediumModel& medium) {
    if (generic_momentum(p)) return paper_eigenpairs(q, p, medium);
    const Mat3 Rot = detail::generic_rotation(p);
    const Speeds c = eval_speeds(medium, q);
    EigenSystem es = detail::printed_system(Rot * p, c.c_p, c.c_s);
    Mat7 T = Mat7::Identity();
    T.block<3, 3>(0, 0) = Rot;
    T.block<3, 3>(4, 4) = Rot;
    for (auto& e : es.pairs) {
        e.R = T.transpose() * e.R;
        e.L = T.transpose() * e.L;
    }
    es.rotated = true;
    return es;
}

}  // namespace fga
