// model.hpp: Two-site Hubbard-Holstein molecule: electronic operators in the
// N=2, S_z=0 sector and commutator diagnostics.
//
// Units: hbar = 1, energies in t0, time in hbar/t0.

#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>

#include "hhdeco/linalg.hpp"

namespace hhdeco::model {

struct ModelParams {
    double t0{1.0};     // hopping
    double U{0.0};      // on-site repulsion
    double eta{0.0};    // electron-nuclear coupling strength of the Debye bath
    double gamma{0.3};  // bath characteristic frequency
    double beta{1.0};   // inverse temperature

    /// Throws std::invalid_argument on t0 <= 0, eta < 0, gamma <= 0, beta <= 0 or U < 0.
    void validate() const;
};

// Spin-orbitals in site-major order, spin up before spin down. An occupation
// mask |n> stands for d+_{p1} d+_{p2} ... |vac> with p1 < p2 < ...
enum SpinOrbital : int { kUp1 = 0, kDown1 = 1, kUp2 = 2, kDown2 = 3 };
inline constexpr int kNumSpinOrbitals = 4;
inline constexpr int kSectorDim = 4;

class FockBasis {
public:
    /// |up-down, 0>, |0, up-down>, |up, down>, |down, up>
    static constexpr std::array<std::uint8_t, kSectorDim> kStates{
        0b0011, 0b1100, 0b1001, 0b0110};

    static std::optional<int> index_of(std::uint8_t mask);
    static std::string label(int i);
};

/// Result of applying a single fermion operator to an occupation mask.
struct FermionAction {
    int sign;
    std::uint8_t mask;
};

std::optional<FermionAction> annihilate(int orbital, std::uint8_t mask);
std::optional<FermionAction> create(int orbital, std::uint8_t mask);

/// Matrix of d+_p d_q restricted to the sector (components leaving it dropped).
CMatrix one_body_operator(int p, int q);

/// Matrix of n_p n_q in the sector.
CMatrix pair_number_operator(int p, int q);

/// -t0 sum_sigma (d+_{1s} d_{2s} + h.c.)
CMatrix build_hopping(double t0);

CMatrix build_hs(const ModelParams& params);

/// Hartree-Fock component taken literally with <n_{i sigma}> = mean_occupation:
/// hopping + 2U sum n_{i s} <n_{i,-s}> - U sum <n_{i s}><n_{i,-s}>.
CMatrix build_hs0(const ModelParams& params, double mean_occupation = 0.5);

/// build_hs - build_hs0
CMatrix build_vs(const ModelParams& params);

/// Q_1 = n1u n1d, Q_2 = n2u n2d, Q_3 = n1u n2d, Q_4 = n1d n2u.
std::array<CMatrix, 4> build_coupling_ops();

/// Number of doubly occupied sites; used to order degenerate eigenvectors.
CMatrix doublon_operator();

/// Debye spectral density eta*gamma*omega/(omega^2+gamma^2).
double spectral_density(double omega, const ModelParams& params);

struct EigenSystem {
    RVector values;   // ascending
    CMatrix vectors;  // columns, phase-gauge fixed
};

/// Rotate v so that its largest-magnitude component is real and positive
/// (first such component on ties within 1e-12).
void fix_phase(CVector& v);

/// Hermitian eigendecomposition with ascending eigenvalues and a fixed phase
/// gauge. Inside a degenerate cluster (|dE| < degeneracy_tol) the vectors are
/// chosen as eigenvectors of `tie_break` projected on the cluster, ordered by
/// ascending expectation value.
EigenSystem eigensystem(const CMatrix& h, const std::optional<CMatrix>& tie_break = std::nullopt,
                        double degeneracy_tol = 1e-9);

/// eigensystem() with the doublon operator as tie-break: the E=0 / E=U pair
/// that is degenerate at U=0 is ordered as its U -> 0+ continuation.
EigenSystem sector_eigensystem(const CMatrix& hs);

/// |Psi><Psi| with Psi = (|E1> + |E2>)/sqrt(2).
/// Throws std::invalid_argument when E1 and E2 are degenerate.
CMatrix initial_state(const CMatrix& hs);

/// Frobenius norm of ab - ba.
double commutator_norm(const CMatrix& a, const CMatrix& b);

} // namespace hhdeco::model
