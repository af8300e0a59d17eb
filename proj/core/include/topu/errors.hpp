#pragma once

#include <stdexcept>
#include <string>

namespace topu {

// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class MandatoryPointBlocked : public Error {
public:
    using Error::Error;
};

class NoPath : public Error {
public:
    using Error::Error;
};

class UnknownTask : public Error {
public:
    using Error::Error;
};

class UnknownEdge : public Error {
public:
    using Error::Error;
};

class OutOfRangeProbability : public Error {
public:
    using Error::Error;
};

class InvalidCost : public Error {
public:
    using Error::Error;
};

class DegenerateModel : public Error {
public:
    using Error::Error;
};

class DegenerateFanout : public Error {
public:
    using Error::Error;
};

class EmptyTrg : public Error {
public:
    using Error::Error;
};

class NoTasks : public Error {
public:
    using Error::Error;
};

class JointPlanFailure : public Error {
public:
    using Error::Error;
};

class MissingStrategy : public Error {
public:
    using Error::Error;
};

// Configuration problem; `field` is a dotted path such as "sim.robot_speed".
class ValidationError : public Error {
public:
    ValidationError(std::string field, const std::string& message)
        : Error(field + ": " + message), field_(std::move(field)) {}

    const std::string& field() const noexcept { return field_; }

private:
    std::string field_;
};

}  // namespace topu
