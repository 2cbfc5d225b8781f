// bath.hpp: Exponential (Matsubara) decomposition of the Debye bath
// correlation function
//
//   C(t) = (1/pi) int_0^inf dw J(w) [coth(beta w/2) cos(wt) - i sin(wt)]
//        = sum_k c_k exp(-nu_k t),
//
// with J(w) = eta gamma w / (w^2 + gamma^2):
//
//   c_0 = (eta gamma / 2) (cot(beta gamma / 2) - i),      nu_0 = gamma
//   c_k = (2 eta gamma / beta) nu_k / (nu_k^2 - gamma^2),   nu_k = 2 pi k / beta.
//
// The Matsubara tail k > K is folded into a white-noise residual
//
//   Xi = sum_{k>K} c_k / nu_k
//      = eta / (beta gamma) - Re(c_0) / gamma - sum_{k=1..K} c_k / nu_k,
//
// which follows from cot(x) = 1/x - 2x sum_k 1/(k^2 pi^2 - x^2) and enters the
// hierarchy as -Xi [Q, [Q, rho]].

#pragma once

#include <complex>
#include <vector>

#include "hhdeco/model.hpp"

namespace hhdeco::heom {

struct ExpTerm {
    std::complex<double> amplitude;
    double rate;
};

struct BathExpansion {
    std::vector<ExpTerm> terms;  // k = 0..K
    int matsubara{0};            // K
    double residual{0.0};        // Xi

    /// sum_k c_k exp(-nu_k t)
    [[nodiscard]] std::complex<double> correlation(double t) const;
};

/// Throws std::invalid_argument if K < 0 or the parameters are invalid, and
/// hhdeco::NumericalError near the cot(beta gamma/2) pole or when a Matsubara
/// rate coincides with gamma.
BathExpansion expand_bath(const model::ModelParams& params, int K);

} // namespace hhdeco::heom
