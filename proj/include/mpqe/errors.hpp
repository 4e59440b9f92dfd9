#ifndef MPQE_ERRORS_HPP
#define MPQE_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace mpqe {

/// Invalid user-supplied parameter or configuration value.
class config_error : public std::invalid_argument {
public:
    explicit config_error(const std::string& what) : std::invalid_argument(what) {}
};

/// The simulation produced a state that violates the model assumptions
/// (non-physical covariance, NaN propagation, ...). Indicates either a
/// bug or a parameter regime outside the model's validity.
class model_violation : public std::runtime_error {
public:
    explicit model_violation(const std::string& what) : std::runtime_error(what) {}
};

} // namespace mpqe

#endif // MPQE_ERRORS_HPP
