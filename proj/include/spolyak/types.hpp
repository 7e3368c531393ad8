#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <stdexcept>
#include <string>

namespace spolyak {

using Eigen::Index;
using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;  // column-major; rows are samples
using VectorRef = Eigen::Ref<const Eigen::VectorXd>;

inline constexpr const char* kToolkitVersion = "1.0.0";

// Raised when an input violates a documented precondition.
class invalid_argument : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Raised when an evaluation inside an iterative loop fails; carries the iteration.
class iteration_error : public std::runtime_error {
 public:
  iteration_error(Index iteration, const std::string& what)
      : std::runtime_error("iteration " + std::to_string(iteration) + ": " + what),
        iteration_(iteration) {}
  Index iteration() const noexcept { return iteration_; }

 private:
  Index iteration_;
};

}  // namespace spolyak
