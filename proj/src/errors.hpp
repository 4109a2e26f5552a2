#ifndef HOMM_ERRORS_HPP
#define HOMM_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace homm {

// Base class for all library errors.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// A caller violated a documented precondition (bad dimensions, out-of-range
// labels, unnormalized probability rows, invalid configuration values).
class ContractError : public Error {
public:
    using Error::Error;
};

// An exact-tensor operation would exceed the configured memory cap.
class CapacityError : public Error {
public:
    using Error::Error;
};

// Malformed input text (CSV rows, config files). Messages carry 1-based
// line numbers where applicable.
class ParseError : public Error {
public:
    using Error::Error;
};

// A computation produced a non-finite value.
class NumericError : public Error {
public:
    using Error::Error;
};

// Filesystem failure (missing file, unwritable directory).
class IoError : public Error {
public:
    using Error::Error;
};

} // namespace homm

#endif
