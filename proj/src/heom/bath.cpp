#include "hhdeco/heom/bath.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

#include "hhdeco/error.hpp"

namespace hhdeco::heom {

std::complex<double> BathExpansion::correlation(double t) const {
    std::complex<double> sum{0.0, 0.0};
    for (const auto& term : terms) sum += term.amplitude * std::exp(-term.rate * t);
    return sum;
}

BathExpansion expand_bath(const model::ModelParams& params, int K) {
    params.validate();
    if (K < 0) throw std::invalid_argument("expand_bath: K must be >= 0");

    const double eta = params.eta;
    const double gamma = params.gamma;
    const double beta = params.beta;
    const double half = 0.5 * beta * gamma;
    if (std::abs(std::sin(half)) < 1e-12)
        throw NumericalError("expand_bath: beta*gamma/2 sits on a cotangent pole");

    BathExpansion out;
    out.matsubara = K;
    out.terms.reserve(static_cast<std::size_t>(K) + 1);

    const double cot = std::cos(half) / std::sin(half);
    out.terms.push_back({{0.5 * eta * gamma * cot, -0.5 * eta * gamma}, gamma});

    double tail = eta / (beta * gamma) - out.terms[0].amplitude.real() / gamma;
    for (int k = 1; k <= K; ++k) {
        const double nu = 2.0 * std::numbers::pi * k / beta;
        const double denom = nu * nu - gamma * gamma;
        if (std::abs(denom) < 1e-12 * nu * nu)
            throw NumericalError("expand_bath: Matsubara rate coincides with gamma");
        const double ck = (2.0 * eta * gamma / beta) * nu / denom;
        out.terms.push_back({{ck, 0.0}, nu});
        tail -= ck / nu;
    }
    out.residual = tail;
    return out;
}

} // namespace hhdeco::heom
