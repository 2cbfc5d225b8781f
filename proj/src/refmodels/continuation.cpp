#include <cmath>
#include <sstream>
#include <stdexcept>

#include "hhdeco/error.hpp"
#include "hhdeco/refmodels.hpp"

namespace hhdeco::ref {

CorrelationEnergyResult correlation_energy(std::span<const double> weights, const CMatrix& h_full, const CMatrix& h0,
                                           int n_steps, int max_doublings, const std::optional<CMatrix>& tie_break) {
    const auto n = h_full.rows();
    if (h_full.cols() != n || h0.rows() != n || h0.cols() != n)
        throw std::invalid_argument("correlation_energy: Hamiltonians must be square and of equal size");
    if (static_cast<Eigen::Index>(weights.size()) != n)
        throw std::invalid_argument("correlation_energy: one weight per eigenstate required");
    double total = 0.0;
    for (double w : weights) {
        if (!(w >= 0.0)) throw std::invalid_argument("correlation_energy: weights must be nonnegative");
        total += w;
    }
    if (std::abs(total - 1.0) > 1e-10) throw std::invalid_argument("correlation_energy: weights must sum to 1");
    if (n_steps < 1 || max_doublings < 0) throw std::invalid_argument("correlation_energy: bad step settings");

    const model::EigenSystem start = model::eigensystem(h_full, tie_break);
    const CMatrix v = h_full - h0;

    CorrelationEnergyResult out;
    RVector reference = start.values;
    if (v.norm() == 0.0) {
        out.n_steps = 0;
    } else {
        for (int attempt = 0; attempt <= max_doublings; ++attempt) {
            const int steps = n_steps << attempt;
            CMatrix cur = start.vectors;
            double min_overlap = 1.0;
            for (int k = 1; k <= steps; ++k) {
                const double lambda = 1.0 - static_cast<double>(k) / steps;
                TrackedBasis next = track_eigenbasis(cur, h0 + lambda * v);
                min_overlap = std::min(min_overlap, next.min_overlap);
                cur = std::move(next.vectors);
                reference = std::move(next.values);
            }
            out.min_overlap = min_overlap;
            out.n_steps = steps;
            if (min_overlap >= 0.9) break;
        }
        if (out.min_overlap < 0.5) {
            std::ostringstream msg;
            msg << "correlation_energy: branch overlap fell to " << out.min_overlap << " after " << out.n_steps
                << " continuation steps";
            throw ContinuationError(msg.str());
        }
    }
    for (Eigen::Index i = 0; i < n; ++i) {
        const double w = weights[static_cast<std::size_t>(i)];
        out.terms.push_back({start.values(i), reference(i), w});
        out.e_cor += w * (start.values(i) - reference(i));
    }
    return out;
}

} // namespace hhdeco::ref
