#pragma once

#include <array>
#include <cmath>
#include <stdexcept>
#include <string>
#include <string_view>

namespace shapelab {

/// Failure categories raised across the toolkit. The CLI maps them onto
/// process exit codes (see exit_code()).
enum class ErrorCode {
    // configuration
    ConfigInvalid,
    // mesh
    NonPositiveRadius,
    MeshQualityFailure,
    DegenerateStrip,
    ComponentNotFound,
    SingularTriangle,
    MeshFoldOver,
    EmptyBoundary,
    // solver
    NoConvergence,
    IndefiniteMass,
    AmbiguousCluster,
    OptimizerStall,
    ProjectionDiverged,
    ZeroGradient,
    BracketNotFound,
    // precondition
    VolumeMismatch,
    CenteringFailed,
    AllZeroFunction,
    DomainError,
    InvalidArgument,
    // anything else
    Internal,
};

std::string_view to_string(ErrorCode code);

class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& what)
        : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

    [[nodiscard]] ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

/// 0 ok, 1 config, 2 solver, 3 mesh, 4 precondition, 5 internal.
int exit_code(ErrorCode code);

struct Vec2 {
    double x = 0.0;
    double y = 0.0;

    constexpr Vec2 operator+(Vec2 o) const { return {x + o.x, y + o.y}; }
    constexpr Vec2 operator-(Vec2 o) const { return {x - o.x, y - o.y}; }
    constexpr Vec2 operator*(double s) const { return {x * s, y * s}; }
    constexpr Vec2 operator/(double s) const { return {x / s, y / s}; }
    constexpr Vec2& operator+=(Vec2 o) { x += o.x; y += o.y; return *this; }
    constexpr Vec2& operator-=(Vec2 o) { x -= o.x; y -= o.y; return *this; }
    constexpr bool operator==(const Vec2&) const = default;
};

constexpr Vec2 operator*(double s, Vec2 v) { return v * s; }
constexpr double dot(Vec2 a, Vec2 b) { return a.x * b.x + a.y * b.y; }
constexpr double cross(Vec2 a, Vec2 b) { return a.x * b.y - a.y * b.x; }
inline double norm(Vec2 a) { return std::hypot(a.x, a.y); }

/// Upper bound on worker threads: SHAPELAB_THREADS if set and positive,
/// else the hardware concurrency (at least 1).
int thread_cap();

inline constexpr double kPi = 3.14159265358979323846264338327950288;

}  // namespace shapelab
