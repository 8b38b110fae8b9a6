#include "fga/hyperbolic.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <random>

using namespace fga;

namespace {

Vec3 random_generic(std::mt19937& rng) {
    std::uniform_real_distribution<double> u(0.2, 2.0);
    std::bernoulli_distribution flip(0.5);
    Vec3 p;
    for (int k = 0; k < 3; ++k) p(k) = (flip(rng) ? -1.0 : 1.0) * u(rng);
    return p;
}

std::vector<double> sorted_eigenvalues(const Mat7& A) {
    Eigen::EigenSolver<Mat7> es(A);
    std::vector<double> v;
    for (int i = 0; i < 7; ++i) {
        EXPECT_LE(std::abs(es.eigenvalues()(i).imag()), 1e-10);
        v.push_back(es.eigenvalues()(i).real());
    }
    std::sort(v.begin(), v.end());
    return v;
}

std::vector<double> expected_spectrum(double cp, double cs, double pn) {
    std::vector<double> v = {-cp * pn, -cs * pn, -cs * pn, 0.0, cs * pn, cs * pn, cp * pn};
    return v;
}

void expect_valid(const SymbolMatrix& S, const EigenSystem& es) {
    for (const EigenPair& e : es.pairs) {
        EXPECT_LE(right_residual(S, e), kEigenTolerance) << to_string(e.label);
        EXPECT_LE(left_residual(S, e), kEigenTolerance) << to_string(e.label);
    }
    EXPECT_LE(biorthonormality_residual(es), 1e-12);
}

}  // namespace

TEST(Symbol, ZeroMomentumGivesZeroMatrix) {
    EXPECT_EQ(assemble_symbol(Vec3::Zero(), 2.0, 1.0).entries, Mat7::Zero());
}

TEST(Symbol, AxisEntries) {
    const Mat7& S = assemble_symbol(Vec3(1, 0, 0), 2.0, 1.0).entries;
    EXPECT_EQ(S(0, 3), 4.0);
    EXPECT_EQ(S(3, 0), 1.0);
    EXPECT_EQ(S(2, 5), -1.0);
    EXPECT_EQ(S(5, 2), -1.0);
    EXPECT_EQ(S(1, 6), 1.0);
    EXPECT_EQ(S(6, 1), 1.0);
}

TEST(Symbol, SparsityPattern) {
    std::mt19937 rng(1);
    const Mat7 S = assemble_symbol(random_generic(rng), 2.0, 1.0).entries;
    EXPECT_EQ((S.array() != 0.0).count(), 18);
    for (int a = 0; a < 3; ++a) EXPECT_EQ((axis_matrix(a, 2.0, 1.0).array() != 0.0).count(), 6);
}

TEST(Symbol, SpectrumMatchesGeneralSolver) {
    std::mt19937 rng(2);
    for (int i = 0; i < 20; ++i) {
        const Vec3 p = random_generic(rng);
        const double cp = 1.5 + 0.1 * i, cs = 0.7;
        const auto ev = sorted_eigenvalues(assemble_symbol(p, cp, cs).entries);
        const auto ex = expected_spectrum(cp, cs, p.norm());
        for (int k = 0; k < 7; ++k) EXPECT_NEAR(ev[k], ex[k], 1e-10);
    }
}

TEST(Symbol, UnweightedSumHasScaledSpectrum) {
    const Mat7 M = axis_matrix(0, 2.0, 1.0) + axis_matrix(1, 2.0, 1.0) + axis_matrix(2, 2.0, 1.0);
    const auto ev = sorted_eigenvalues(M);
    const auto ex = expected_spectrum(2.0, 1.0, std::sqrt(3.0));
    for (int k = 0; k < 7; ++k) EXPECT_NEAR(ev[k], ex[k], 1e-10);
    EXPECT_EQ(M, assemble_symbol(Vec3(1, 1, 1), 2.0, 1.0).entries);
}

TEST(Symbol, SEigenspaceHasDimensionTwoPerSign) {
    std::mt19937 rng(3);
    for (int i = 0; i < 10; ++i) {
        const Vec3 p = random_generic(rng);
        const Mat7 S = assemble_symbol(p, 2.0, 1.0).entries;
        for (double s : {1.0, -1.0}) {
            const Mat7 A = S - s * p.norm() * Mat7::Identity();
            EXPECT_EQ(detail::null_space(A, S.norm()).cols(), 2);
        }
        EXPECT_EQ(detail::null_space(S, S.norm()).cols(), 1);
    }
}

TEST(Symbol, RotationCovariance) {
    std::mt19937 rng(4);
    const Vec3 p = random_generic(rng);
    const Mat3 Rot = Eigen::AngleAxisd(0.9, Vec3(1, -2, 0.5).normalized()).toRotationMatrix();
    Mat7 T = Mat7::Identity();
    T.block<3, 3>(0, 0) = Rot;
    T.block<3, 3>(4, 4) = Rot;
    const Mat7 lhs = assemble_symbol(Rot * p, 2.0, 1.0).entries;
    const Mat7 rhs = T * assemble_symbol(p, 2.0, 1.0).entries * T.transpose();
    EXPECT_LE((lhs - rhs).cwiseAbs().maxCoeff(), 1e-13);
}

TEST(PrintedEigenpairs, DiagonalMomentum) {
    const auto m = MediumModel::constant(2.0, 1.0, 1.0);
    const Vec3 p = Vec3(1, 1, 1) / std::sqrt(3.0);
    const EigenSystem es = paper_eigenpairs(Vec3::Zero(), p, m);
    const std::array<double, 7> H = {0.0, 2.0, -2.0, 1.0, 1.0, -1.0, -1.0};
    for (int n = 0; n < 7; ++n) {
        EXPECT_NEAR(es.pairs[n].H, H[n], 1e-14);
        EXPECT_EQ(es.pairs[n].label, static_cast<EigenLabel>(n));
    }
    EXPECT_FALSE(es.rotated);
    expect_valid(assemble_symbol(p, 2.0, 1.0), es);
}

TEST(PrintedEigenpairs, RandomMomentaInLensMedium) {
    const auto m = MediumModel::gaussian_density(2.0, 1.0, 1.0, 0.5, 0.6, Vec3(0.1, -0.2, 0.0));
    std::mt19937 rng(5);
    for (int i = 0; i < 25; ++i) {
        const Vec3 q = 0.3 * random_generic(rng), p = random_generic(rng);
        const EigenSystem es = paper_eigenpairs(q, p, m);
        const Speeds c = eval_speeds(m, q);
        const SymbolMatrix S = assemble_symbol(p, c.c_p, c.c_s);
        expect_valid(S, es);
        EXPECT_LE((S.entries * es.pairs[0].R).norm(), 1e-12 * es.pairs[0].R.norm());
    }
}

// The printed forms that need repair, with the residual they had.
TEST(PrintedEigenpairs, RepairsAreLogged) {
    std::mt19937 rng(6);
    const Vec3 p = random_generic(rng);
    const EigenSystem es = detail::printed_system(p, 2.0, 1.0);
    ASSERT_FALSE(es.repairs.empty());
    bool rs1 = false, ls2 = false;
    for (const RepairRecord& r : es.repairs) {
        EXPECT_GT(r.printed_residual, kEigenTolerance);
        EXPECT_LE(r.repaired_residual, kEigenTolerance);
        if (r.side == 'R' && (r.label == EigenLabel::SPlus1 || r.label == EigenLabel::SMinus1)) rs1 = true;
        if (r.side == 'L' && (r.label == EigenLabel::SPlus2 || r.label == EigenLabel::SMinus2)) ls2 = true;
    }
    EXPECT_TRUE(rs1);
    EXPECT_TRUE(ls2);
    for (const RepairRecord& r : es.repairs)
        EXPECT_TRUE(r.label != EigenLabel::Zero && r.label != EigenLabel::PPlus && r.label != EigenLabel::PMinus);
}

TEST(PrintedEigenpairs, DegenerateComponentRaises) {
    const auto m = MediumModel::constant(2.0, 1.0, 1.0);
    try {
        paper_eigenpairs(Vec3::Zero(), Vec3(1, 0, 1), m);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::DegenerateComponent);
    }
}

TEST(Eigenpairs, RotatedFallbackForDegenerateMomenta) {
    const auto m = MediumModel::constant(2.0, 1.0, 1.0);
    for (const Vec3& p : {Vec3(1, 0, 0), Vec3(0, 0.5, 0.5), Vec3(0, 0, -2), Vec3(0.3, -0.7, 0)}) {
        const EigenSystem es = eigenpairs(Vec3::Zero(), p, m);
        EXPECT_TRUE(es.rotated);
        expect_valid(assemble_symbol(p, 2.0, 1.0), es);
    }
}

TEST(Eigenpairs, Homogeneity) {
    const auto m = MediumModel::gaussian_density(2.0, 1.0, 1.0, 0.5, 0.6, Vec3(0.1, -0.2, 0.0));
    std::mt19937 rng(8);
    const Vec3 q = 0.2 * random_generic(rng), p = random_generic(rng);
    const EigenSystem base = eigenpairs(q, p, m);
    for (double s : {2.0, 10.0}) {
        const EigenSystem sc = eigenpairs(q, s * p, m);
        for (int n = 0; n < 7; ++n) EXPECT_NEAR(sc.pairs[n].H, s * base.pairs[n].H, 1e-12 * s);
    }
}
