// Exception hierarchy shared by all shnn components.
#pragma once

#include <stdexcept>
#include <string>

namespace shnn {

struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct ParseError : Error {
    using Error::Error;
};
struct ValidationError : Error {
    using Error::Error;
};
struct ShapeError : Error {
    using Error::Error;
};
struct WidthError : Error {
    using Error::Error;
};
struct HostMismatch : Error {
    using Error::Error;
};
struct SingularBlock : Error {
    using Error::Error;
};
struct NotSymmetric : Error {
    using Error::Error;
};
struct TooLarge : Error {
    using Error::Error;
};
struct AllZeroSpectrum : Error {
    using Error::Error;
};
struct DegeneratePoint : Error {
    using Error::Error;
};
struct ConfigError : Error {
    using Error::Error;
};
struct UnsupportedOp : Error {
    using Error::Error;
};
struct IoError : Error {
    using Error::Error;
};

}  // namespace shnn
