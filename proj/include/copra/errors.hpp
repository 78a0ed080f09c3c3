#pragma once

#include <stdexcept>
#include <string>

namespace copra {

/// Base class for all library errors.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

class UnknownProblem : public Error {
public:
    explicit UnknownProblem(const std::string& name)
        : Error("unknown problem name: " + name) {}
};

class InvalidDimension : public Error {
public:
    explicit InvalidDimension(const std::string& msg) : Error(msg) {}
};

class DegenerateSignal : public Error {
public:
    explicit DegenerateSignal(const std::string& msg) : Error(msg) {}
};

class InvalidMatrix : public Error {
public:
    explicit InvalidMatrix(const std::string& msg) : Error(msg) {}
};

class FactorizationFailed : public Error {
public:
    explicit FactorizationFailed(const std::string& msg) : Error(msg) {}
};

class InvalidThresholdConstant : public Error {
public:
    explicit InvalidThresholdConstant(const std::string& msg) : Error(msg) {}
};

class OutOfDomain : public Error {
public:
    explicit OutOfDomain(const std::string& msg) : Error(msg) {}
};

class SingularSystem : public Error {
public:
    explicit SingularSystem(const std::string& msg) : Error(msg) {}
};

class NoConvergence : public Error {
public:
    explicit NoConvergence(const std::string& msg) : Error(msg) {}
};

class DerivativeVanished : public Error {
public:
    explicit DerivativeVanished(const std::string& msg) : Error(msg) {}
};

class NoCorner : public Error {
public:
    explicit NoCorner(const std::string& msg) : Error(msg) {}
};

class InvalidCovariance : public Error {
public:
    explicit InvalidCovariance(const std::string& msg) : Error(msg) {}
};

class DegenerateCovariance : public Error {
public:
    explicit DegenerateCovariance(const std::string& msg) : Error(msg) {}
};

class Undefined : public Error {
public:
    explicit Undefined(const std::string& msg) : Error(msg) {}
};

class IoError : public Error {
public:
    explicit IoError(const std::string& msg) : Error(msg) {}
};

}  // namespace copra
