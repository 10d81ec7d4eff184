#pragma once

#include <stdexcept>
#include <string>

namespace ckn {

/// Base class for all library errors.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Parameter pair outside the admissible region, or an operation applied
/// outside the region where it is defined.
class InvalidParams : public Error {
public:
    using Error::Error;
};

/// Bracketed root search found no sign change in the requested interval.
class NoRoot : public Error {
public:
    using Error::Error;
};

/// find_root called with f(lo) * f(hi) >= 0.
class NoBracket : public Error {
public:
    using Error::Error;
};

/// An iterative scheme (quadrature, eigensolver) exhausted its budget.
class NoConvergence : public Error {
public:
    using Error::Error;
};

/// Endpoint sampling of an integrand contradicts its declared tail exponents.
class BadTails : public Error {
public:
    using Error::Error;
};

/// Expansion fit attempted on a signal below quadrature noise.
class FitDegenerate : public Error {
public:
    using Error::Error;
};

} // namespace ckn
