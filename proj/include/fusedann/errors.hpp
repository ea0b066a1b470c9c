#pragma once

#include <stdexcept>
#include <string>

namespace fusedann {

/// Base class for all errors raised by this library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Vector/block dimensions do not line up (m out of [1, d], mismatched lengths).
class InvalidDimensionError : public Error {
public:
    using Error::Error;
};

class InvalidArgumentError : public Error {
public:
    using Error::Error;
};

class EmptyDatasetError : public Error {
public:
    using Error::Error;
};

/// Two distinct attribute classes share the same attribute vector (sigma_min = 0).
class DegenerateSeparationError : public Error {
public:
    using Error::Error;
};

class UnknownAttributeError : public Error {
public:
    using Error::Error;
};

class InvalidPriorityError : public Error {
public:
    using Error::Error;
};

/// Range bounds violate l <= u component-wise.
class InvalidRangeError : public Error {
public:
    using Error::Error;
};

/// Operation requires a segment with distinct endpoints.
class DegenerateLineError : public Error {
public:
    using Error::Error;
};

/// Requested search radius exceeds what a cylindrical index was built for.
/// Rebuild the index with a larger slack or use a smaller radius.
class RadiusTooLargeError : public Error {
public:
    using Error::Error;
};

/// Malformed input file; message carries the byte offset where parsing failed.
class ParseError : public Error {
public:
    using Error::Error;
};

/// Index file cannot be loaded (bad magic, checksum, version, truncation).
class LoadError : public Error {
public:
    using Error::Error;
};

} // namespace fusedann
