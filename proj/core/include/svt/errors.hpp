#pragma once

#include <stdexcept>
#include <string>

namespace svt {

// Base class for all library errors.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& what) : std::runtime_error(what) {}
};

class ShapeMismatchError : public Error {
public:
    explicit ShapeMismatchError(const std::string& what) : Error(what) {}
};

class NonBinaryInputError : public Error {
public:
    explicit NonBinaryInputError(const std::string& what) : Error(what) {}
};

class ZeroVectorError : public Error {
public:
    explicit ZeroVectorError(const std::string& what) : Error(what) {}
};

class DomainError : public Error {
public:
    explicit DomainError(const std::string& what) : Error(what) {}
};

class EmptyMemoryError : public Error {
public:
    explicit EmptyMemoryError(const std::string& what) : Error(what) {}
};

class VariantWeightMismatchError : public Error {
public:
    explicit VariantWeightMismatchError(const std::string& what) : Error(what) {}
};

class ConfigError : public Error {
public:
    explicit ConfigError(const std::string& what) : Error(what) {}
};

class GraphError : public Error {
public:
    explicit GraphError(const std::string& what) : Error(what) {}
};

class DivergenceError : public Error {
public:
    explicit DivergenceError(const std::string& what) : Error(what) {}
};

class IoError : public Error {
public:
    explicit IoError(const std::string& what) : Error(what) {}
};

} // namespace svt
