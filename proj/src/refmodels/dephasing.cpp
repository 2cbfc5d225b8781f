#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/quadrature/ooura_fourier_integrals.hpp>
#include <cmath>
#include <numbers>
#include <sstream>
#include <stdexcept>

#include "hhdeco/error.hpp"
#include "hhdeco/refmodels.hpp"

namespace hhdeco::ref {

heom::ElectronicModel dephasing_model(const model::ModelParams& params, int K, double splitting) {
    heom::ElectronicModel m;
    m.hamiltonian = CMatrix::Zero(2, 2);
    m.hamiltonian(0, 0) = 0.5 * splitting;
    m.hamiltonian(1, 1) = -0.5 * splitting;
    CMatrix sz = CMatrix::Zero(2, 2);
    sz(0, 0) = 1.0;
    sz(1, 1) = -1.0;
    m.couplings.push_back(sz);
    m.baths.push_back(heom::expand_bath(params, K));
    return m;
}

double dephasing_exponent(const model::ModelParams& params, double t) {
    params.validate();
    if (t < 0.0) throw std::invalid_argument("dephasing_exponent: t must be >= 0");
    if (t == 0.0) return 0.0;
    const double eta = params.eta;
    const double gamma = params.gamma;
    const double beta = params.beta;
    if (eta == 0.0) return 0.0;

    // (8/pi) eta gamma / (w^2 + gamma^2) * [w coth(beta w / 2)] * [sin(w t / 2) / w]^2
    auto integrand = [&](double w) {
        const double thermal = w < 1e-8 ? 2.0 / beta : w / std::tanh(0.5 * beta * w);
        const double s = w < 1e-8 ? 0.5 * t : std::sin(0.5 * w * t) / w;
        return 8.0 / std::numbers::pi * eta * gamma / (w * w + gamma * gamma) * thermal * s * s;
    };

    // coth(beta w / 2) = 1 to double precision beyond the cutoff
    const double cutoff = std::max({40.0 / beta, 50.0 * gamma, 50.0});
    const double panel = std::min(2.0 * std::numbers::pi / t, gamma);
    const int n_panels = static_cast<int>(std::ceil(cutoff / panel));
    double sum = 0.0;
    double err_total = 0.0;
    for (int p = 0; p < n_panels; ++p) {
        const double a = cutoff * p / n_panels;
        const double b = cutoff * (p + 1) / n_panels;
        double err = 0.0;
        sum += boost::math::quadrature::gauss_kronrod<double, 31>::integrate(integrand, a, b, 10, 1e-13, &err);
        err_total += err;
    }

    // tail: (4/pi) eta gamma int_W^inf (1 - cos wt) / (w (w^2 + gamma^2)) dw
    const double flat = std::log1p(gamma * gamma / (cutoff * cutoff)) / (2.0 * gamma * gamma);
    auto g = [&](double u) {
        const double w = cutoff + u;
        return 1.0 / (w * (w * w + gamma * gamma));
    };
    boost::math::quadrature::ooura_fourier_cos<double> cos_int(1e-12);
    boost::math::quadrature::ooura_fourier_sin<double> sin_int(1e-12);
    const auto [cc, cc_err] = cos_int.integrate(g, t);
    const auto [cs, cs_err] = sin_int.integrate(g, t);
    const double oscillating = std::cos(t * cutoff) * cc - std::sin(t * cutoff) * cs;
    const double tail_scale = 4.0 / std::numbers::pi * eta * gamma;
    sum += tail_scale * (flat - oscillating);
    err_total += tail_scale * (std::abs(cc_err) * std::abs(cc) + std::abs(cs_err) * std::abs(cs));

    if (!(err_total < 1e-8) || !std::isfinite(sum)) {
        std::ostringstream msg;
        msg << "dephasing_exponent: quadrature error estimate " << err_total << " at t = " << t;
        throw QuadratureError(msg.str());
    }
    return sum;
}

std::vector<double> analytic_dephasing(const model::ModelParams& params, std::span<const double> times) {
    std::vector<double> out;
    out.reserve(times.size());
    for (double t : times) out.push_back(std::exp(-dephasing_exponent(params, t)));
    return out;
}

} // namespace hhdeco::ref
