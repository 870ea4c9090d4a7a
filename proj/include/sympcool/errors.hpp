#pragma once

#include <stdexcept>
#include <string>

namespace sympcool {

/// Base class of every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A precondition on an argument was violated (negative count, T <= 0, ...).
class DomainError : public Error {
public:
    using Error::Error;
};

/// The hyperfine state is a low-field seeker only if (-1)^F mF > 0.
class AntiTrapped : public Error {
public:
    using Error::Error;
};

/// G^2/B0 <= C: the radial curvature is not confining.
class RadialUnconfined : public Error {
public:
    using Error::Error;
};

/// 3 alpha <= 1: the buffer phase-space density has no interior maximum.
class NoInteriorPeak : public Error {
public:
    using Error::Error;
};

/// The adaptive ODE stepper could not meet its tolerance.
class StepFailure : public Error {
public:
    using Error::Error;
};

/// A relaxation series does not decay enough to be fitted.
class InsufficientDecay : public Error {
public:
    using Error::Error;
};

/// A configuration violates a resolution or consistency requirement.
class ConfigError : public Error {
public:
    using Error::Error;
};

}  // namespace sympcool
