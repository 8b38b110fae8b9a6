#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <complex>
#include <stdexcept>
#include <string>

namespace fga {

using cd = std::complex<double>;
using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;
using CVec3 = Eigen::Vector3cd;
using CMat3 = Eigen::Matrix3cd;
using CMat2 = Eigen::Matrix2cd;

inline constexpr double kPi = 3.14159265358979323846;
inline constexpr cd kI{0.0, 1.0};

inline constexpr const char* kVersion = "fga-elastic 0.1.0";

enum class ErrorCode {
    NonPhysicalMaterial,
    MeshTooCoarse,
    FrameDegenerate,
    MomentumCollapse,
    SingularZ,
    InvalidStep,
    NyquistViolation,
    EmptyEnsemble,
    MissingDerivedFields,
    GridMismatch,
    VariableMediumUnsupported,
    DegenerateComponent,
    ConfigError,
};

inline const char* to_string(ErrorCode c) {
    switch (c) {
        case ErrorCode::NonPhysicalMaterial: return "NonPhysicalMaterial";
        case ErrorCode::MeshTooCoarse: return "MeshTooCoarse";
        case ErrorCode::FrameDegenerate: return "FrameDegenerate";
        case ErrorCode::MomentumCollapse: return "MomentumCollapse";
        case ErrorCode::SingularZ: return "SingularZ";
        case ErrorCode::InvalidStep: return "InvalidStep";
        case ErrorCode::NyquistViolation: return "NyquistViolation";
        case ErrorCode::EmptyEnsemble: return "EmptyEnsemble";
        case ErrorCode::MissingDerivedFields: return "MissingDerivedFields";
        case ErrorCode::GridMismatch: return "GridMismatch";
        case ErrorCode::VariableMediumUnsupported: return "VariableMediumUnsupported";
        case ErrorCode::DegenerateComponent: return "DegenerateComponent";
        case ErrorCode::ConfigError: return "ConfigError";
    }
    return "Unknown";
}

class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& what)
        : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}
    ErrorCode code() const { return code_; }

private:
    ErrorCode code_;
};

// Unit vector along v; v must be nonzero.
inline Vec3 unit(const Vec3& v) { return v / v.norm(); }

// Eigen conjugates complex cross products; this one does not.
inline CVec3 cross(const CVec3& a, const CVec3& b) {
    return {a(1) * b(2) - a(2) * b(1), a(2) * b(0) - a(0) * b(2), a(0) * b(1) - a(1) * b(0)};
}

}  // namespace fga
