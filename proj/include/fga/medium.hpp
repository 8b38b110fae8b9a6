#pragma once

#include "fga/types.hpp"

#include <cmath>
#include <sstream>

namespace fga {

enum class Family { P, S };

enum class MediumKind { Constant, SmoothAnalytic };

// Isotropic elastic medium. SmoothAnalytic carries constant Lamé parameters
// and a Gaussian density bump
//   rho(x) = rho0 * (1 + amplitude * exp(-|x - center|^2 / width^2)).
struct MediumModel {
    MediumKind kind = MediumKind::Constant;
    double lam = 2.0;
    double mu = 1.0;
    double rho0 = 1.0;
    double amplitude = 0.0;
    double width = 1.0;
    Vec3 center = Vec3::Zero();

    static MediumModel constant(double lam, double mu, double rho) {
        MediumModel m;
        m.lam = lam;
        m.mu = mu;
        m.rho0 = rho;
        return m;
    }

    static MediumModel gaussian_density(double lam, double mu, double rho0, double amplitude,
                                        double width, const Vec3& center) {
        MediumModel m;
        m.kind = MediumKind::SmoothAnalytic;
        m.lam = lam;
        m.mu = mu;
        m.rho0 = rho0;
        m.amplitude = amplitude;
        m.width = width;
        m.center = center;
        return m;
    }

    bool is_constant() const { return kind == MediumKind::Constant; }

    double rho(const Vec3& x) const {
        if (is_constant()) return rho0;
        return rho0 * (1.0 + amplitude * std::exp(-(x - center).squaredNorm() / (width * width)));
    }

    double modulus(Family f) const { return f == Family::P ? lam + 2.0 * mu : mu; }
};

struct Speeds {
    double c_p;
    double c_s;
};

struct SpeedJet {
    double c;
    Vec3 grad;
    Mat3 hess;
};

namespace detail {
inline void check_material(const MediumModel& m, const Vec3& x, double rho) {
    auto fail = [&](const char* why) {
        std::ostringstream os;
        os << why << " at x=(" << x(0) << "," << x(1) << "," << x(2) << ")";
        throw Error(ErrorCode::NonPhysicalMaterial, os.str());
    };
    if (!x.allFinite()) fail("non-finite evaluation point");
    if (!(rho > 0.0) || !std::isfinite(rho)) fail("density must be positive");
    if (!(m.mu > 0.0)) fail("shear modulus must be positive");
    if (!(m.lam + 2.0 * m.mu > 0.0)) fail("lambda + 2 mu must be positive");
    // c_p > c_s requires lambda + mu > 0
    if (!(m.lam + m.mu > 0.0)) fail("speed ordering c_p > c_s violated");
}
}  // namespace detail

inline Speeds eval_speeds(const MediumModel& m, const Vec3& x) {
    const double rho = m.rho(x);
    detail::check_material(m, x, rho);
    return {std::sqrt((m.lam + 2.0 * m.mu) / rho), std::sqrt(m.mu / rho)};
}

inline SpeedJet eval_speed_jet(const MediumModel& m, const Vec3& x, Family family) {
    const double rho = m.rho(x);
    detail::check_material(m, x, rho);
    const double K = m.modulus(family);
    SpeedJet jet{std::sqrt(K / rho), Vec3::Zero(), Mat3::Zero()};
    if (m.is_constant()) return jet;

    const Vec3 r = x - m.center;
    const double w2 = m.width * m.width;
    const double e = m.rho0 * m.amplitude * std::exp(-r.squaredNorm() / w2);
    const Vec3 drho = e * (-2.0 / w2) * r;
    const double sK = std::sqrt(K);
    const double rm32 = std::pow(rho, -1.5), rm52 = std::pow(rho, -2.5);
    jet.grad = -0.5 * sK * rm32 * drho;
    for (int i = 0; i < 3; ++i) {
        for (int j = i; j < 3; ++j) {
            const double d2rho = e * (4.0 * r(i) * r(j) / (w2 * w2) - (i == j ? 2.0 / w2 : 0.0));
            const double h = 0.75 * sK * rm52 * drho(i) * drho(j) - 0.5 * sK * rm32 * d2rho;
            jet.hess(i, j) = h;
            jet.hess(j, i) = h;
        }
    }
    return jet;
}

}  // namespace fga
