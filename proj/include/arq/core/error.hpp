#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace arq {

// Base for every error the library raises on purpose.
struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct InvalidArgument : Error {
    using Error::Error;
};

struct ParseError : Error {
    using Error::Error;
};

// m(s,a) has no defined value: a state without observations under alpha = 0.
struct DegenerateBehavior : Error {
    using Error::Error;
};

struct DivergenceError : Error {
    using Error::Error;
};

struct NanLossError : Error {
    NanLossError(const std::string& what, std::vector<std::size_t> batch_indices)
        : Error(what), offending(std::move(batch_indices)) {}
    std::vector<std::size_t> offending;
};

inline void require(bool cond, const std::string& msg) {
    if (!cond) throw InvalidArgument(msg);
}

}  // namespace arq
