#pragma once

#include <complex>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>

namespace starfl {

using cplx = std::complex<double>;
using CMat = Eigen::MatrixXcd;
using CVec = Eigen::VectorXcd;
using RMat = Eigen::MatrixXd;
using RVec = Eigen::VectorXd;

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Malformed input: wrong dimensions, out-of-range parameters, bad files.
class InvalidArgument : public Error {
public:
    using Error::Error;
};

/// A resource-allocation step has no admissible point.
class Infeasible : public Error {
public:
    using Error::Error;
};

/// Numerical failure that is not a modelling infeasibility.
class NumericError : public Error {
public:
    using Error::Error;
};

inline void require(bool cond, const std::string& what) {
    if (!cond) throw InvalidArgument(what);
}

}  // namespace starfl
