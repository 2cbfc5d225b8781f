#include "hhdeco/observables.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

#include "hhdeco/error.hpp"
#include "hhdeco/model.hpp"

namespace hhdeco::obs {

namespace {

void require_square(const CMatrix& m, const char* what) {
    if (m.rows() == 0 || m.rows() != m.cols()) throw std::invalid_argument(std::string(what) + ": matrix must be square");
}

} // namespace

double purity(const CMatrix& rho) {
    require_square(rho, "purity");
    const double by_trace = (rho * rho).trace().real();
    const double by_sum = rho.squaredNorm();
    if (std::abs(by_trace - by_sum) > 1e-12) {
        std::ostringstream msg;
        msg.precision(17);
        msg << "purity: Tr[rho^2] = " << by_trace << " but sum |rho_ij|^2 = " << by_sum << " (rho not Hermitian?)";
        throw InvariantError(msg.str());
    }
    return by_trace;
}

double electronic_energy(const CMatrix& rho, const CMatrix& hs) {
    require_square(rho, "electronic_energy");
    if (hs.rows() != rho.rows() || hs.cols() != rho.cols())
        throw std::invalid_argument("electronic_energy: dimension mismatch");
    const cplx e = (rho * hs).trace();
    if (std::abs(e.imag()) > 1e-10) throw InvariantError("electronic_energy: complex expectation value");
    return e.real();
}

CMatrix eigenbasis_elements(const CMatrix& rho, const model::EigenSystem& basis) {
    if (basis.vectors.rows() != rho.rows()) throw std::invalid_argument("eigenbasis_elements: dimension mismatch");
    return basis.vectors.adjoint() * rho * basis.vectors;
}

CMatrix eigenbasis_elements(const CMatrix& rho, const CMatrix& hs) {
    require_square(rho, "eigenbasis_elements");
    const auto basis = hs.rows() == model::kSectorDim ? model::sector_eigensystem(hs) : model::eigensystem(hs);
    return eigenbasis_elements(rho, basis);
}

CMatrix one_body_rdm(const CMatrix& rho) {
    if (rho.rows() != model::kSectorDim || rho.cols() != model::kSectorDim)
        throw std::invalid_argument("one_body_rdm: expects a density matrix on the two-electron sector");
    CMatrix gamma(model::kNumSpinOrbitals, model::kNumSpinOrbitals);
    for (int p = 0; p < model::kNumSpinOrbitals; ++p)
        for (int q = 0; q < model::kNumSpinOrbitals; ++q)
            gamma(p, q) = (model::one_body_operator(q, p) * rho).trace();
    return gamma;
}

double cumulant_trace(const CMatrix& gamma) {
    require_square(gamma, "cumulant_trace");
    return ((gamma * gamma).trace() - gamma.trace()).real();
}

CMatrix gibbs_state(const CMatrix& hs, double beta) {
    require_square(hs, "gibbs_state");
    if (!(beta > 0.0)) throw std::invalid_argument("gibbs_state: beta must be > 0");
    Eigen::SelfAdjointEigenSolver<CMatrix> es(0.5 * (hs + hs.adjoint()));
    const RVector& e = es.eigenvalues();
    RVector w = (-beta * (e.array() - e.minCoeff())).exp();
    w /= w.sum();
    return es.eigenvectors() * w.cast<cplx>().asDiagonal() * es.eigenvectors().adjoint();
}

void ObservableSeries::validate() const {
    const auto n = times.size();
    if (purity.size() != n || energy.size() != n || cumulant.size() != n || elements.size() != n)
        throw InvariantError("ObservableSeries: series lengths differ");
}

ObservableSeries compute_series(const heom::Trajectory& traj, const CMatrix& hs) {
    ObservableSeries s;
    s.times = traj.times;
    const auto basis = hs.rows() == model::kSectorDim ? model::sector_eigensystem(hs) : model::eigensystem(hs);
    const bool sector = hs.rows() == model::kSectorDim;
    for (const auto& rho : traj.states) {
        s.purity.push_back(purity(rho));
        s.energy.push_back(electronic_energy(rho, hs));
        s.cumulant.push_back(sector ? cumulant_trace(one_body_rdm(rho)) : 0.0);
        s.elements.push_back(eigenbasis_elements(rho, basis));
    }
    return s;
}

} // namespace hhdeco::obs
