#pragma once

#include <stdexcept>
#include <string>
#include <utility>
#include <variant>

namespace mdiotbc {

// A parameter combination for which a formula has no meaningful value.
// `factor` names the quantity that went non-positive.
struct Infeasible {
    std::string factor;
    std::string detail;
};

template <class T>
class Feasible {
public:
    Feasible(T value) : v_(std::move(value)) {}
    Feasible(Infeasible why) : v_(std::move(why)) {}

    bool ok() const { return std::holds_alternative<T>(v_); }
    explicit operator bool() const { return ok(); }

    const T& value() const {
        if (!ok()) {
            const auto& w = std::get<Infeasible>(v_);
            throw std::logic_error("value() on infeasible result (" + w.factor + ": " + w.detail + ")");
        }
        return std::get<T>(v_);
    }
    const Infeasible& why() const { return std::get<Infeasible>(v_); }

private:
    std::variant<T, Infeasible> v_;
};

class ValidityViolation : public std::runtime_error {
public:
    explicit ValidityViolation(const std::string& what) : std::runtime_error(what) {}
};

class ScaleExceeded : public std::runtime_error {
public:
    explicit ScaleExceeded(const std::string& what) : std::runtime_error(what) {}
};

class DegenerateIntensities : public std::runtime_error {
public:
    explicit DegenerateIntensities(const std::string& what) : std::runtime_error(what) {}
};

class NoProgress : public std::runtime_error {
public:
    explicit NoProgress(const std::string& what) : std::runtime_error(what) {}
};

// Thrown where a run cannot proceed because the parameters admit no
// solution. Carries the same diagnostic as the Feasible result it came from.
class InfeasibleError : public std::runtime_error {
public:
    explicit InfeasibleError(Infeasible why)
        : std::runtime_error("infeasible (" + why.factor + "): " + why.detail), why_(std::move(why)) {}
    const Infeasible& why() const { return why_; }

private:
    Infeasible why_;
};

// Raised when a protocol phase is invoked out of order. This is a caller bug,
// distinct from a protocol abort.
class PhaseError : public std::logic_error {
public:
    explicit PhaseError(const std::string& what) : std::logic_error(what) {}
};

}  // namespace mdiotbc
