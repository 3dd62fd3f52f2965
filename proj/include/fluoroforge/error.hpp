#pragma once

#include <stdexcept>
#include <string>

namespace fluoroforge {

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Malformed or missing input files.
class LoadError : public Error {
public:
    using Error::Error;
};

// Parity violations, non-watertight meshes, undefined projections.
class GeometryError : public Error {
public:
    using Error::Error;
};

class ViewUnavailable : public Error {
public:
    using Error::Error;
};

class ConfigError : public Error {
public:
    using Error::Error;
};

// Shape or id mismatch between paired inputs.
class MismatchError : public Error {
public:
    using Error::Error;
};

// A metric is undefined for its inputs (e.g. distance to an empty set).
class UndefinedMetric : public Error {
public:
    using Error::Error;
};

}  // namespace fluoroforge
