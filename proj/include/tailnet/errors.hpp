#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace tailnet {

/// Argument outside the mathematical domain of an operation.
class DomainError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Model object violates its invariants (non-PD matrix, trivial rows, ...).
class ModelError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Requested size exceeds a documented enumeration cap.
class CapacityError : public std::invalid_argument {
public:
    CapacityError(const std::string& what, std::size_t limit)
        : std::invalid_argument(what), limit_(limit) {}
    std::size_t limit() const { return limit_; }

private:
    std::size_t limit_;
};

/// Quadratic program enumeration did not isolate a unique index set.
class DegeneracyError : public std::runtime_error {
public:
    DegeneracyError(const std::string& what, std::vector<std::uint32_t> candidates)
        : std::runtime_error(what), candidates_(std::move(candidates)) {}
    const std::vector<std::uint32_t>& candidates() const { return candidates_; }

private:
    std::vector<std::uint32_t> candidates_;
};

/// Too few tail observations for a trustworthy empirical estimate.
class ReliabilityError : public std::runtime_error {
public:
    ReliabilityError(const std::string& what, std::size_t count)
        : std::runtime_error(what), count_(count) {}
    std::size_t count() const { return count_; }

private:
    std::size_t count_;
};

/// Operation called for a case that does not match the model structure.
class DispatchError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Scenario document does not match the expected schema.
class SchemaError : public std::invalid_argument {
public:
    SchemaError(const std::string& path, const std::string& msg)
        : std::invalid_argument(path + ": " + msg), path_(path) {}
    const std::string& path() const { return path_; }

private:
    std::string path_;
};

} // namespace tailnet
