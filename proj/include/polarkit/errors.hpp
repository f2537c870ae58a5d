#pragma once

#include <stdexcept>
#include <string>

namespace polarkit {

// Input that violates a documented precondition. The CLI maps these to exit code 2.
class ValidationError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Filesystem failures. The CLI maps these to exit code 3.
class IoError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class InvalidLane : public ValidationError {
public:
    using ValidationError::ValidationError;
};

class NearHorizontalAnchor : public ValidationError {
public:
    using ValidationError::ValidationError;
};

class InvalidK : public ValidationError {
public:
    using ValidationError::ValidationError;
};

class ShapeError : public ValidationError {
public:
    using ValidationError::ValidationError;
};

class MissingO2OScores : public ValidationError {
public:
    using ValidationError::ValidationError;
};

class InfeasibleAssignment : public ValidationError {
public:
    using ValidationError::ValidationError;
};

class InvalidInput : public ValidationError {
public:
    using ValidationError::ValidationError;
};

class TooFewRows : public ValidationError {
public:
    using ValidationError::ValidationError;
};

class InvalidSpec : public ValidationError {
public:
    using ValidationError::ValidationError;
};

class ParseError : public ValidationError {
public:
    using ValidationError::ValidationError;
};

class VersionError : public ValidationError {
public:
    using ValidationError::ValidationError;
};

}  // namespace polarkit
