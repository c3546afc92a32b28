#pragma once

#include <stdexcept>
#include <string>

namespace situ3d {

// Base for all domain errors raised by this library.
struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct DegenerateInput : Error {
    using Error::Error;
};
struct NotARotation : Error {
    using Error::Error;
};
struct VerticalHeading : Error {
    using Error::Error;
};
struct EmptyCloud : Error {
    using Error::Error;
};
struct NoRealTokens : Error {
    using Error::Error;
};
struct ShapeMismatch : Error {
    using Error::Error;
};
struct NonFinite : Error {
    using Error::Error;
};
struct UnknownToken : Error {
    using Error::Error;
};
struct EmptyQuestion : Error {
    using Error::Error;
};
struct UnknownMode : Error {
    using Error::Error;
};
struct PlacementFailure : Error {
    using Error::Error;
};
struct AmbiguousEpisode : Error {
    using Error::Error;
};
struct SchemaError : Error {
    using Error::Error;
};
struct LengthMismatch : Error {
    using Error::Error;
};
struct ConfigError : Error {
    using Error::Error;
};
struct IoError : Error {
    using Error::Error;
};

} // namespace situ3d
