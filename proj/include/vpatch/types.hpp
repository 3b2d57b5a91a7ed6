#pragma once

#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

namespace vpatch {

inline constexpr double kPi = std::numbers::pi;
inline constexpr double kTwoPi = 2.0 * std::numbers::pi;

/// Point in the universal cover R+ x R of the half cylinder.  x1 is the
/// distance from the wall, x2 is the unwrapped vertical coordinate.
struct CoverPoint {
    double x1 = 0.0;
    double x2 = 0.0;

    friend CoverPoint operator+(CoverPoint a, CoverPoint b) { return {a.x1 + b.x1, a.x2 + b.x2}; }
    friend CoverPoint operator-(CoverPoint a, CoverPoint b) { return {a.x1 - b.x1, a.x2 - b.x2}; }
    friend CoverPoint operator*(double s, CoverPoint a) { return {s * a.x1, s * a.x2}; }
    friend bool operator==(CoverPoint, CoverPoint) = default;
};

/// Point on the half cylinder itself; x2 is an angle in [-pi, pi).
struct CylPoint {
    double x1 = 0.0;
    double x2 = 0.0;
    friend bool operator==(CylPoint, CylPoint) = default;
};

struct Vec2 {
    double u1 = 0.0;
    double u2 = 0.0;

    Vec2& operator+=(Vec2 o) {
        u1 += o.u1;
        u2 += o.u2;
        return *this;
    }
    friend Vec2 operator+(Vec2 a, Vec2 b) { return {a.u1 + b.u1, a.u2 + b.u2}; }
    friend Vec2 operator-(Vec2 a, Vec2 b) { return {a.u1 - b.u1, a.u2 - b.u2}; }
    friend Vec2 operator*(double s, Vec2 a) { return {s * a.u1, s * a.u2}; }
    double norm() const { return std::hypot(u1, u2); }
};

inline double distance(CoverPoint a, CoverPoint b) { return std::hypot(a.x1 - b.x1, a.x2 - b.x2); }

// Error hierarchy.  Every failure raised by the library derives from Error so
// that callers (the CLI in particular) can map them to exit codes.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class SingularInputError : public Error {
public:
    using Error::Error;
};
class DegenerateSegmentError : public Error {
public:
    using Error::Error;
};
class DegeneratePolygonError : public Error {
public:
    using Error::Error;
};
class ParameterRangeError : public Error {
public:
    using Error::Error;
};
class GridMismatchError : public Error {
public:
    using Error::Error;
};
class DomainError : public Error {
public:
    using Error::Error;
};

/// Raised by the time integrator; carries the reason tag written to the
/// failure manifest.
class NumericalAbort : public Error {
public:
    NumericalAbort(std::string reason, const std::string& what)
        : Error(what), reason_(std::move(reason)) {}
    const std::string& reason() const { return reason_; }

private:
    std::string reason_;
};

}  // namespace vpatch
