#pragma once

#include <complex>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>

namespace dsse {

using Complex = std::complex<double>;
using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;
using CVec = Eigen::VectorXcd;
using CMat = Eigen::MatrixXcd;

/// Feeder file / model validation failure; message carries the location.
class FeederError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Power flow did not converge (infeasible or extreme loading) or Y_LL is singular.
class PowerFlowError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Stacked measurement Jacobian is column-rank deficient.
class ObservabilityError : public std::runtime_error {
 public:
  ObservabilityError(const std::string& msg, int rank, int required)
      : std::runtime_error(msg), rank(rank), required(required) {}
  int rank;
  int required;
};

}  // namespace dsse
