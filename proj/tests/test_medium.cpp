#include "fga/medium.hpp"

#include <gtest/gtest.h>

#include <random>

using namespace fga;

namespace {

MediumModel lens() { return MediumModel::gaussian_density(2.0, 1.0, 1.0, 0.5, 0.6, Vec3(0.1, -0.2, 0.0)); }

Vec3 random_point(std::mt19937& rng, double r) {
    std::uniform_real_distribution<double> u(-r, r);
    return {u(rng), u(rng), u(rng)};
}

}  // namespace

TEST(Medium, ConstantSpeeds) {
    const auto s = eval_speeds(MediumModel::constant(2.0, 1.0, 1.0), Vec3(3.0, -1.0, 7.0));
    EXPECT_DOUBLE_EQ(s.c_p, 2.0);
    EXPECT_DOUBLE_EQ(s.c_s, 1.0);
    const auto t = eval_speeds(MediumModel::constant(0.0, 1.0, 4.0), Vec3::Zero());
    EXPECT_NEAR(t.c_p, std::sqrt(0.5), 1e-15);
    EXPECT_NEAR(t.c_s, 0.5, 1e-15);
}

TEST(Medium, SmoothSpeedsMatchBruteForce) {
    const auto m = MediumModel::gaussian_density(2.0, 1.0, 1.0, 0.1, 1.0, Vec3::Zero());
    std::mt19937 rng(7);
    for (int i = 0; i < 10; ++i) {
        const Vec3 x = random_point(rng, 2.0);
        const double rho = 1.0 + 0.1 * std::exp(-x.squaredNorm());
        const auto s = eval_speeds(m, x);
        EXPECT_NEAR(s.c_p, std::sqrt(4.0 / rho), 1e-14);
        EXPECT_NEAR(s.c_s, std::sqrt(1.0 / rho), 1e-14);
    }
}

TEST(Medium, ConstantJetIsExactlyZero) {
    const auto m = MediumModel::constant(2.0, 1.0, 3.0);
    for (Family f : {Family::P, Family::S}) {
        const auto j = eval_speed_jet(m, Vec3(0.3, 0.2, 0.1), f);
        EXPECT_TRUE((j.grad.array() == 0.0).all());
        EXPECT_TRUE((j.hess.array() == 0.0).all());
    }
}

TEST(Medium, GradientMatchesFiniteDifferences) {
    const auto m = lens();
    const Vec3 x(0.3, 0.0, 0.0);
    const auto j = eval_speed_jet(m, x, Family::S);
    const double h = 1e-5;
    Vec3 fd;
    for (int k = 0; k < 3; ++k) {
        Vec3 e = Vec3::Zero();
        e(k) = h;
        fd(k) = (eval_speeds(m, x + e).c_s - eval_speeds(m, x - e).c_s) / (2 * h);
    }
    EXPECT_LE((fd - j.grad).norm(), 1e-8 * j.grad.norm());
}

TEST(Medium, HessianMatchesFiniteDifferences) {
    const auto m = lens();
    std::mt19937 rng(11);
    for (int i = 0; i < 10; ++i) {
        const Vec3 x = random_point(rng, 0.8);
        for (Family f : {Family::P, Family::S}) {
            const auto j = eval_speed_jet(m, x, f);
            const double h = 1e-4;
            Mat3 fd;
            for (int k = 0; k < 3; ++k) {
                Vec3 e = Vec3::Zero();
                e(k) = h;
                fd.col(k) = (eval_speed_jet(m, x + e, f).grad - eval_speed_jet(m, x - e, f).grad) / (2 * h);
            }
            EXPECT_LE((fd - j.hess).norm(), 1e-6 * j.hess.norm()) << "point " << i;
            EXPECT_TRUE(j.hess == j.hess.transpose());
        }
    }
}

TEST(Medium, SpeedOrderingHolds) {
    const auto m = lens();
    std::mt19937 rng(3);
    for (int i = 0; i < 50; ++i) {
        const auto s = eval_speeds(m, random_point(rng, 3.0));
        EXPECT_GT(s.c_p, s.c_s);
        EXPECT_GT(s.c_s, 0.0);
    }
}

TEST(Medium, NonPhysicalMaterialRaises) {
    auto expect_code = [](const MediumModel& m) {
        try {
            eval_speeds(m, Vec3::Zero());
            FAIL() << "no error";
        } catch (const Error& e) {
            EXPECT_EQ(e.code(), ErrorCode::NonPhysicalMaterial);
        }
    };
    expect_code(MediumModel::constant(2.0, 1.0, -1.0));
    expect_code(MediumModel::constant(2.0, 0.0, 1.0));
    expect_code(MediumModel::constant(-3.0, 1.0, 1.0));
    // lambda + 2 mu > 0 but c_p <= c_s
    expect_code(MediumModel::constant(-1.5, 1.0, 1.0));
    expect_code(MediumModel::gaussian_density(2.0, 1.0, 1.0, -1.5, 1.0, Vec3::Zero()));
}
