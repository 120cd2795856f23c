#pragma once

#include <stdexcept>
#include <string>

namespace minexp {

// Invalid user input, malformed file, or violated call contract.
// The CLI maps this to exit code 1.
class input_error : public std::runtime_error {
public:
    explicit input_error(const std::string& what) : std::runtime_error(what) {}
};

// Q-learning produced a non-finite loss. The CLI maps this to exit code 2.
class divergence_error : public std::runtime_error {
public:
    explicit divergence_error(const std::string& what) : std::runtime_error(what) {}
};

inline constexpr const char* kToolName = "minexp";
inline constexpr const char* kToolVersion = "0.1.0";

}  // namespace minexp
