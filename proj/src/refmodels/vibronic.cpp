#include <cmath>
#include <numbers>
#include <set>
#include <stdexcept>
#include <string>

#include "hhdeco/error.hpp"
#include "hhdeco/refmodels.hpp"

namespace hhdeco::ref {

double SingleModeModel::coupling() const { return omega * std::sqrt(base.eta / std::numbers::pi); }

std::size_t SingleModeModel::dim() const {
    std::size_t d = model::kSectorDim;
    for (std::size_t i = 0; i < active_modes.size(); ++i) d *= static_cast<std::size_t>(n_ph);
    return d;
}

void SingleModeModel::validate() const {
    base.validate();
    if (!(omega > 0.0)) throw std::invalid_argument("SingleModeModel: omega must be > 0");
    if (n_ph < 2) throw std::invalid_argument("SingleModeModel: n_ph must be >= 2");
    std::set<int> seen;
    for (int m : active_modes) {
        if (m < 1 || m > 4) throw std::invalid_argument("SingleModeModel: active modes must be in 1..4");
        if (!seen.insert(m).second) throw std::invalid_argument("SingleModeModel: duplicate active mode");
    }
}

namespace {

RMatrix kron(const RMatrix& a, const RMatrix& b) {
    RMatrix out(a.rows() * b.rows(), a.cols() * b.cols());
    for (Eigen::Index i = 0; i < a.rows(); ++i)
        for (Eigen::Index j = 0; j < a.cols(); ++j)
            out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
    return out;
}

// Operator acting on oscillator `slot` of `count`, identity elsewhere.
RMatrix embed(const RMatrix& op, int slot, int count) {
    const auto n = op.rows();
    RMatrix out = RMatrix::Identity(1, 1);
    for (int k = 0; k < count; ++k) out = kron(out, k == slot ? op : RMatrix::Identity(n, n));
    return out;
}

} // namespace

RMatrix build_vibronic_hamiltonian(const SingleModeModel& m) {
    m.validate();
    const std::size_t dim = m.dim();
    if (dim > kMaxVibronicDim)
        throw NumericalError("build_vibronic_hamiltonian: dimension " + std::to_string(dim) + " exceeds the cap of " +
                             std::to_string(kMaxVibronicDim));

    const int n = m.n_ph;
    RMatrix x = RMatrix::Zero(n, n);
    RMatrix number = RMatrix::Zero(n, n);
    for (int k = 0; k < n; ++k) {
        number(k, k) = k + 0.5;
        if (k + 1 < n) x(k, k + 1) = x(k + 1, k) = std::sqrt(k + 1.0);
    }
    x /= std::sqrt(2.0 * m.omega);

    const int count = static_cast<int>(m.active_modes.size());
    const auto bath_dim = static_cast<Eigen::Index>(dim / model::kSectorDim);
    const RMatrix hs = model::build_hs(m.base).real();
    const auto qs = model::build_coupling_ops();

    RMatrix h = kron(hs, RMatrix::Identity(bath_dim, bath_dim));
    RMatrix oscillators = RMatrix::Zero(bath_dim, bath_dim);
    const double c = m.coupling();
    for (int slot = 0; slot < count; ++slot) {
        const int mode = m.active_modes[static_cast<std::size_t>(slot)];
        oscillators += m.omega * embed(number, slot, count);
        h += c * kron(qs[static_cast<std::size_t>(mode - 1)].real(), embed(x, slot, count));
    }
    h += kron(RMatrix::Identity(model::kSectorDim, model::kSectorDim), oscillators);
    return h;
}

CMatrix clamped_hamiltonian(const SingleModeModel& m, int mode, double x) {
    if (mode < 1 || mode > 4) throw std::invalid_argument("clamped_hamiltonian: mode must be in 1..4");
    const auto qs = model::build_coupling_ops();
    return model::build_hs(m.base) + m.coupling() * x * qs[static_cast<std::size_t>(mode - 1)] +
           0.5 * m.omega * m.omega * x * x * CMatrix::Identity(model::kSectorDim, model::kSectorDim);
}

std::vector<CVector> exact_propagate(const RMatrix& h, const CVector& psi0, std::span<const double> times) {
    if (h.rows() != h.cols() || h.rows() != psi0.size()) throw std::invalid_argument("exact_propagate: dimension mismatch");
    if (std::abs(psi0.norm() - 1.0) > 1e-10) throw std::invalid_argument("exact_propagate: psi0 must be normalized");
    Eigen::SelfAdjointEigenSolver<RMatrix> es(h);
    const CMatrix v = es.eigenvectors().cast<cplx>();
    const CVector coef = v.adjoint() * psi0;
    std::vector<CVector> out;
    out.reserve(times.size());
    for (double t : times) {
        CVector phased(coef.size());
        for (Eigen::Index k = 0; k < coef.size(); ++k) phased(k) = std::exp(-kI * es.eigenvalues()(k) * t) * coef(k);
        out.push_back(v * phased);
    }
    return out;
}

std::vector<CVector> exact_propagate(const SingleModeModel& m, const CVector& psi0, std::span<const double> times) {
    return exact_propagate(build_vibronic_hamiltonian(m), psi0, times);
}

double schmidt_purity(const CVector& psi, int electronic_dim) {
    if (electronic_dim <= 0 || psi.size() == 0 || psi.size() % electronic_dim != 0)
        throw std::invalid_argument("schmidt_purity: state does not factorize");
    const Eigen::Index rest = psi.size() / electronic_dim;
    const Eigen::Map<const Eigen::Matrix<cplx, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>> coef(
        psi.data(), electronic_dim, rest);
    const Eigen::JacobiSVD<CMatrix> svd{CMatrix(coef)};
    return svd.singularValues().array().pow(4).sum();
}

} // namespace hhdeco::ref
