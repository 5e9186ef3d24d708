#pragma once

#include <stdexcept>
#include <string>

namespace bridgesteer {

/// Base class for all library errors.
struct Error : std::runtime_error {
    explicit Error(const std::string& what) : std::runtime_error(what) {}
};

struct GridTooSmall : Error {
    using Error::Error;
};
struct ZeroAmplitude : Error {
    using Error::Error;
};
struct Overflow : Error {
    using Error::Error;
};
struct NonpositiveDensity : Error {
    using Error::Error;
};
struct DegenerateDenominator : Error {
    using Error::Error;
};
struct SchemeInstability : Error {
    using Error::Error;
};
struct NoConvergence : Error {
    using Error::Error;
};
struct NonpositivePhi : Error {
    using Error::Error;
};
struct InvalidDensity : Error {
    using Error::Error;
};
struct DriftBlowup : Error {
    using Error::Error;
};
struct SliceNotSaved : Error {
    using Error::Error;
};
struct ConfigError : Error {
    using Error::Error;
};

}  // namespace bridgesteer
