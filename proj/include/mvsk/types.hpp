#pragma once

#include <Eigen/Dense>

#include <stdexcept>
#include <string>

namespace mvsk {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// Malformed external input (CSV cells, flag values).
class ParseError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline void require_dimension(Eigen::Index got, Eigen::Index want, const char* what) {
  if (got != want) {
    throw std::invalid_argument(std::string(what) + ": dimension mismatch (got " +
                                std::to_string(got) + ", expected " + std::to_string(want) + ")");
  }
}

}  // namespace mvsk
