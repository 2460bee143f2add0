#pragma once
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace freeconv {

/// Base error carrying a stable machine-readable code alongside the message.
class Error : public std::runtime_error {
public:
    Error(std::string code, const std::string& message)
        : std::runtime_error(message), code_(std::move(code)) {}
    const std::string& code() const { return code_; }

private:
    std::string code_;
};

/// Syntax error in a measure file; line/column are 1-based.
class ParseError : public Error {
public:
    ParseError(int line, int column, const std::string& message)
        : Error("parse", "line " + std::to_string(line) + ", col " + std::to_string(column) + ": " + message),
          line_(line), column_(column) {}
    int line() const { return line_; }
    int column() const { return column_; }

private:
    int line_, column_;
};

struct Violation {
    std::string code;    // e.g. "duplicate-position", "total-mass"
    std::string detail;
};

/// A measure failed its construction invariants; all violations are listed.
class ValidationError : public Error {
public:
    explicit ValidationError(std::vector<Violation> violations)
        : Error("invalid-measure", join(violations)), violations_(std::move(violations)) {}
    explicit ValidationError(Violation violation)
        : ValidationError(std::vector<Violation>{std::move(violation)}) {}
    const std::vector<Violation>& violations() const { return violations_; }

private:
    static std::string join(const std::vector<Violation>& v) {
        std::string s = "invalid measure:";
        for (const auto& x : v) s += " [" + x.code + "] " + x.detail + ";";
        return s;
    }
    std::vector<Violation> violations_;
};

/// Evaluation point outside the transform's domain.
class DomainError : public Error {
public:
    explicit DomainError(const std::string& message) : Error("domain", message) {}
};

/// Adaptive quadrature stopped short of the requested tolerance.
class QuadratureError : public Error {
public:
    QuadratureError(double requested, double achieved)
        : Error("quadrature-tolerance",
                "quadrature reached " + std::to_string(achieved) + " of requested " + std::to_string(requested)),
          requested_(requested), achieved_(achieved) {}
    double requested() const { return requested_; }
    double achieved() const { return achieved_; }

private:
    double requested_, achieved_;
};

}  // namespace freeconv
