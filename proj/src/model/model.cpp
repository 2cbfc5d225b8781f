#include "hhdeco/model.hpp"

#include <bit>
#include <cmath>
#include <stdexcept>
#include <vector>

namespace hhdeco::model {

void ModelParams::validate() const {
    if (!(t0 > 0.0)) throw std::invalid_argument("ModelParams: t0 must be > 0");
    if (!(U >= 0.0)) throw std::invalid_argument("ModelParams: U must be >= 0");
    if (!(eta >= 0.0)) throw std::invalid_argument("ModelParams: eta must be >= 0");
    if (!(gamma > 0.0)) throw std::invalid_argument("ModelParams: gamma must be > 0");
    if (!(beta > 0.0)) throw std::invalid_argument("ModelParams: beta must be > 0");
}

std::optional<int> FockBasis::index_of(std::uint8_t mask) {
    for (int i = 0; i < kSectorDim; ++i)
        if (kStates[static_cast<std::size_t>(i)] == mask) return i;
    return std::nullopt;
}

std::string FockBasis::label(int i) {
    static const std::array<const char*, kSectorDim> names{"|ud,0>", "|0,ud>", "|u,d>", "|d,u>"};
    return names.at(static_cast<std::size_t>(i));
}

namespace {

int parity_below(int orbital, std::uint8_t mask) {
    const unsigned below = static_cast<unsigned>(mask) & ((1u << orbital) - 1u);
    return (std::popcount(below) % 2 == 0) ? 1 : -1;
}

void check_orbital(int p) {
    if (p < 0 || p >= kNumSpinOrbitals) throw std::invalid_argument("spin-orbital index out of range");
}

} // namespace

std::optional<FermionAction> annihilate(int orbital, std::uint8_t mask) {
    check_orbital(orbital);
    const auto bit = static_cast<std::uint8_t>(1u << orbital);
    if (!(mask & bit)) return std::nullopt;
    return FermionAction{parity_below(orbital, mask), static_cast<std::uint8_t>(mask ^ bit)};
}

std::optional<FermionAction> create(int orbital, std::uint8_t mask) {
    check_orbital(orbital);
    const auto bit = static_cast<std::uint8_t>(1u << orbital);
    if (mask & bit) return std::nullopt;
    return FermionAction{parity_below(orbital, mask), static_cast<std::uint8_t>(mask | bit)};
}

CMatrix one_body_operator(int p, int q) {
    CMatrix op = CMatrix::Zero(kSectorDim, kSectorDim);
    for (int col = 0; col < kSectorDim; ++col) {
        const auto lowered = annihilate(q, FockBasis::kStates[static_cast<std::size_t>(col)]);
        if (!lowered) continue;
        const auto raised = create(p, lowered->mask);
        if (!raised) continue;
        const auto row = FockBasis::index_of(raised->mask);
        if (!row) continue;
        op(*row, col) += static_cast<double>(lowered->sign * raised->sign);
    }
    return op;
}

CMatrix pair_number_operator(int p, int q) {
    return one_body_operator(p, p) * one_body_operator(q, q);
}

CMatrix build_hopping(double t0) {
    CMatrix h = CMatrix::Zero(kSectorDim, kSectorDim);
    for (const auto& [a, b] : {std::pair{kUp1, kUp2}, std::pair{kDown1, kDown2}}) {
        h += one_body_operator(a, b);
        h += one_body_operator(b, a);
    }
    return -t0 * h;
}

CMatrix build_hs(const ModelParams& params) {
    params.validate();
    return build_hopping(params.t0) +
           params.U * (pair_number_operator(kUp1, kDown1) + pair_number_operator(kUp2, kDown2));
}

CMatrix build_hs0(const ModelParams& params, double mean_occupation) {
    params.validate();
    CMatrix h = build_hopping(params.t0);
    const double n = mean_occupation;
    // sum over (i, sigma): n_{i sigma} <n_{i,-sigma}> and <n_{i sigma}><n_{i,-sigma}>
    for (int p = 0; p < kNumSpinOrbitals; ++p) {
        h += 2.0 * params.U * n * one_body_operator(p, p);
        h -= params.U * n * n * CMatrix::Identity(kSectorDim, kSectorDim);
    }
    return h;
}

CMatrix build_vs(const ModelParams& params) {
    return build_hs(params) - build_hs0(params);
}

std::array<CMatrix, 4> build_coupling_ops() {
    return {pair_number_operator(kUp1, kDown1), pair_number_operator(kUp2, kDown2),
            pair_number_operator(kUp1, kDown2), pair_number_operator(kDown1, kUp2)};
}

CMatrix doublon_operator() {
    return pair_number_operator(kUp1, kDown1) + pair_number_operator(kUp2, kDown2);
}

double spectral_density(double omega, const ModelParams& params) {
    if (omega < 0.0) throw std::invalid_argument("spectral_density: omega must be >= 0");
    return params.eta * params.gamma * omega / (omega * omega + params.gamma * params.gamma);
}

void fix_phase(CVector& v) {
    Eigen::Index best = 0;
    double best_abs = -1.0;
    for (Eigen::Index i = 0; i < v.size(); ++i) {
        const double a = std::abs(v(i));
        if (a > best_abs + 1e-12) {
            best = i;
            best_abs = a;
        }
    }
    if (best_abs <= 0.0) return;
    v *= std::conj(v(best)) / best_abs;
    v(best) = cplx(std::abs(v(best)), 0.0);
}

EigenSystem eigensystem(const CMatrix& h, const std::optional<CMatrix>& tie_break,
                        double degeneracy_tol) {
    if (h.rows() != h.cols()) throw std::invalid_argument("eigensystem: matrix not square");
    Eigen::SelfAdjointEigenSolver<CMatrix> solver(h);
    if (solver.info() != Eigen::Success) throw std::runtime_error("eigensystem: diagonalization failed");
    EigenSystem es{solver.eigenvalues(), solver.eigenvectors()};

    const Eigen::Index n = h.rows();
    if (tie_break) {
        Eigen::Index start = 0;
        while (start < n) {
            Eigen::Index stop = start + 1;
            while (stop < n && es.values(stop) - es.values(stop - 1) < degeneracy_tol) ++stop;
            const Eigen::Index width = stop - start;
            if (width > 1) {
                const CMatrix basis = es.vectors.middleCols(start, width);
                const CMatrix projected = basis.adjoint() * (*tie_break) * basis;
                Eigen::SelfAdjointEigenSolver<CMatrix> inner(0.5 * (projected + projected.adjoint()));
                es.vectors.middleCols(start, width) = basis * inner.eigenvectors();
                for (Eigen::Index k = 0; k < width; ++k) {
                    const CVector v = es.vectors.col(start + k);
                    es.values(start + k) = (v.adjoint() * h * v)(0).real();
                }
            }
            start = stop;
        }
    }
    for (Eigen::Index k = 0; k < n; ++k) {
        CVector v = es.vectors.col(k);
        fix_phase(v);
        es.vectors.col(k) = v;
    }
    return es;
}

EigenSystem sector_eigensystem(const CMatrix& hs) {
    if (hs.rows() != kSectorDim) return eigensystem(hs);
    return eigensystem(hs, doublon_operator());
}

CMatrix initial_state(const CMatrix& hs) {
    if (hermiticity_defect(hs) > 1e-10) throw std::invalid_argument("initial_state: hs is not Hermitian");
    const EigenSystem es = sector_eigensystem(hs);
    if (es.values.size() < 2 || std::abs(es.values(1) - es.values(0)) < 1e-12)
        throw std::invalid_argument("initial_state: two lowest eigenvalues are degenerate");
    const CVector psi = (es.vectors.col(0) + es.vectors.col(1)) / std::sqrt(2.0);
    return psi * psi.adjoint();
}

double commutator_norm(const CMatrix& a, const CMatrix& b) {
    if (a.rows() != b.rows() || a.cols() != b.cols() || a.rows() != a.cols())
        throw std::invalid_argument("commutator_norm: matrices not conformable");
    return (a * b - b * a).norm();
}

} // namespace hhdeco::model
