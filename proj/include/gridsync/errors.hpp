#pragma once

#include <stdexcept>
#include <string>

namespace gridsync {

/// Base class for all library errors.
struct Error : std::runtime_error {
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

/// Malformed network or device data (bad bus ids, dimension mismatch,
/// parameter validation failure).
struct StructuralError : Error {
    using Error::Error;
};

/// Input file could not be parsed; carries a 1-based line number.
struct ParseError : Error {
    ParseError(const std::string& msg, int line_no)
        : Error(msg + " (line " + std::to_string(line_no) + ")"), line(line_no) {}
    int line;
};

/// A required section is absent from a case file.
struct MissingSection : Error {
    using Error::Error;
};

/// The algebraic Jacobian dg/dz is numerically singular: the state is at or
/// near the impasse surface.
struct SingularAlgebraicJacobian : Error {
    using Error::Error;
};

/// Newton iteration failed to converge.
struct NewtonDivergence : Error {
    using Error::Error;
};

/// The equilibrium Newton matrix is singular and no pin was supplied;
/// signals a continuum of equilibria.
struct RankDeficientWithoutPin : Error {
    using Error::Error;
};

/// dg/dx2 lost full column rank where a left inverse was required.
struct RankDeficiency : Error {
    using Error::Error;
};

/// A trailing-window check was asked for a window longer than the trajectory.
struct WindowTooLong : Error {
    using Error::Error;
};

/// No built-in certificate exists for this device kind.
struct UnknownDeviceKind : Error {
    using Error::Error;
};

/// The system failed the modular-structure sparsity check.
struct NotModular : Error {
    using Error::Error;
};

/// A combined verdict was requested but a premise is missing.
struct ClaimUnavailable : Error {
    using Error::Error;
};

}  // namespace gridsync
