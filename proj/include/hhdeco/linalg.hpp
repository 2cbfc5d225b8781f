#pragma once

#include <complex>

#include <Eigen/Dense>

namespace hhdeco {

using cplx = std::complex<double>;
using CMatrix = Eigen::MatrixXcd;
using CVector = Eigen::VectorXcd;
using RMatrix = Eigen::MatrixXd;
using RVector = Eigen::VectorXd;

inline constexpr cplx kI{0.0, 1.0};

// max |a_ij - conj(a_ji)|
inline double hermiticity_defect(const CMatrix& a) {
    return (a - a.adjoint()).cwiseAbs().maxCoeff();
}

} // namespace hhdeco
