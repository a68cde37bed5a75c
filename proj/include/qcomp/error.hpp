// error.hpp - exception types shared by all qcomp modules
#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace qcomp {

// Operand shapes do not fit together (dims, site lists, channel ends).
class dimension_error : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

// A domain invariant does not hold. invariant() names it, e.g. "hermitian",
// "row-stochastic", "completeness".
class invariant_error : public std::invalid_argument {
public:
    invariant_error(std::string invariant, const std::string& detail)
        : std::invalid_argument(invariant + ": " + detail), invariant_(std::move(invariant)) {}

    const std::string& invariant() const noexcept { return invariant_; }

private:
    std::string invariant_;
};

// A requested computation exceeds a configured size cap.
class capacity_error : public std::length_error {
public:
    capacity_error(const std::string& what, double cap)
        : std::length_error(what), cap_(cap) {}

    double cap() const noexcept { return cap_; }

private:
    double cap_;
};

}  // namespace qcomp
