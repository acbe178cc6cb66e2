#pragma once

#include <stdexcept>
#include <string>

namespace cdshear {

// Base class for all library errors.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

// Input/specification problems (bad parameters, malformed problem files).
class ValidationError : public Error {
public:
    using Error::Error;
};

class InvalidParameter : public ValidationError {
public:
    using ValidationError::ValidationError;
};

// Evaluation outside the material's xi-domain.
class DomainError : public Error {
public:
    using Error::Error;
};

// zeta outside the range of dV (no conjugate point exists).
class RangeError : public Error {
public:
    using Error::Error;
};

// Conjugation requested for an affine material (dV is constant; the
// conjugate is an indicator function, not a function of zeta).
class DegenerateConjugate : public Error {
public:
    using Error::Error;
};

// Dual algebraic equation produced no admissible root for tau_sq > 0.
class NoBranch : public Error {
public:
    using Error::Error;
};

// Energy evaluation requested at zeta = 0.
class DegenerateBranch : public Error {
public:
    using Error::Error;
};

// Pure Neumann boundary data with nonzero net traction.
class ForceImbalance : public ValidationError {
public:
    using ValidationError::ValidationError;
};

// Iterative linear solver exceeded its iteration cap.
class SolverDivergence : public Error {
public:
    using Error::Error;
};

// Sub-level set reaches the sampling box boundary.
class BoxTooSmall : public Error {
public:
    using Error::Error;
};

class IoError : public Error {
public:
    using Error::Error;
};

}  // namespace cdshear
