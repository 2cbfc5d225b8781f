// Bath correlation function and partial traces by brute force.
#pragma once

#include <Eigen/Dense>
#include <boost/math/quadrature/tanh_sinh.hpp>
#include <boost/math/special_functions/expint.hpp>
#include <cmath>
#include <complex>
#include <numbers>

namespace oracle {

// (1/pi) int_0^inf J(w) [coth(beta w / 2) cos(w t) - i sin(w t)] dw for t > 0.
// coth = 1 + 2 n(w): the vacuum part is closed form in exponential integrals,
// the thermal part is an exponentially convergent quadrature.
inline std::complex<double> debye_correlation(double eta, double gamma, double beta, double t) {
    using boost::math::expint;
    const double a = gamma * t;
    const double vacuum = -0.5 * (std::exp(-a) * expint(a) - std::exp(a) * expint(1, a));
    auto thermal = [&](double w) {
        const double j = w / (w * w + gamma * gamma);
        return w < 1e-14 ? 2.0 / (beta * gamma * gamma) : 2.0 * j * std::cos(w * t) / std::expm1(beta * w);
    };
    boost::math::quadrature::tanh_sinh<double> ts;
    double th = 0.0;
    const double cutoff = 60.0 / beta;
    const double step = std::min(t > 0 ? std::numbers::pi / t : cutoff, gamma);
    for (double lo = 0.0; lo < cutoff; lo += step) th += ts.integrate(thermal, lo, std::min(lo + step, cutoff));
    const double re = eta * gamma * (vacuum + th) / std::numbers::pi;
    const double im = -0.5 * eta * gamma * std::exp(-a);
    return {re, im};
}

inline double partial_trace_purity(const Eigen::VectorXcd& psi, int edim) {
    const auto rest = psi.size() / edim;
    Eigen::MatrixXcd rho = Eigen::MatrixXcd::Zero(edim, edim);
    for (int i = 0; i < edim; ++i)
        for (int j = 0; j < edim; ++j) {
            std::complex<double> s = 0.0;
            for (Eigen::Index k = 0; k < rest; ++k) s += psi(i * rest + k) * std::conj(psi(j * rest + k));
            rho(i, j) = s;
        }
    return (rho * rho).trace().real();
}

} // namespace oracle
