// refmodels.hpp: Finite-dimensional vibronic reference models and analytic
// oracles: single-oscillator Hamiltonian, Born-Oppenheimer surfaces, nonadiabatic
// couplings, thermal force differences, correlation energy by adiabatic
// continuation, exact propagation, Schmidt purity and pure dephasing.

#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "hhdeco/heom/heom.hpp"
#include "hhdeco/linalg.hpp"
#include "hhdeco/model.hpp"

namespace hhdeco::ref {

inline constexpr std::size_t kMaxVibronicDim = 6000;

struct SingleModeModel {
    model::ModelParams base{};
    double omega{0.3};
    std::vector<int> active_modes{3};  // subset of {1, 2, 3, 4}
    int n_ph{30};

    /// c = omega * sqrt(eta / pi)
    [[nodiscard]] double coupling() const;
    [[nodiscard]] std::size_t dim() const;
    void validate() const;
};

/// H^S (x) 1 + sum_m [c Q_m (x) x_m + 1 (x) omega (n_m + 1/2)] with
/// x = (a + a+)/sqrt(2 omega). Electronic index is the slow one.
/// Throws NumericalError when dim() exceeds kMaxVibronicDim.
RMatrix build_vibronic_hamiltonian(const SingleModeModel& m);

/// H^S + c x Q_mode + (omega^2 x^2 / 2) 1 at a clamped coordinate.
CMatrix clamped_hamiltonian(const SingleModeModel& m, int mode, double x);

/// Eigenbasis followed continuously from a reference point.
struct TrackedBasis {
    RVector values;
    CMatrix vectors;
    double min_overlap{1.0};
};

/// Eigenvectors of h matched to prev by maximum overlap. Degenerate clusters
/// receive the projections of the matched previous vectors. Each vector's phase
/// makes its overlap with the previous one real and positive.
TrackedBasis track_eigenbasis(const CMatrix& prev, const CMatrix& h, double degeneracy_tol = 1e-9);

struct PesCurve {
    std::vector<double> x;
    RMatrix energies;  // rows: grid points, columns: ascending eigenvalues
};

PesCurve bo_pes(const SingleModeModel& m, int mode, std::span<const double> x_grid);

/// Energies on the grid labelled by continuity from the x = 0 eigenbasis.
PesCurve tracked_pes(const SingleModeModel& m, int mode, std::span<const double> x_grid);

struct NacCurve {
    std::vector<double> x;
    std::vector<double> d12;              // central-difference |<phi1|d/dx phi2>|
    std::vector<double> hellmann_feynman; // |<phi1|dH/dx|phi2>| / (E2 - E1); NaN where flagged
    std::vector<bool> flagged;            // gap < 1e-8
};

/// Coupling between the first two branches tracked from x = 0.
NacCurve nac(const SingleModeModel& m, int mode, std::span<const double> x_grid, double h = 1e-4);

/// <dE1/dx - dE2/dx> over the thermal coordinate density of the bare oscillator.
/// Gauss-Hermite starting at `order` and doubled until two successive rules
/// agree to 1e-6. Throws QuadratureError if that fails by 8 * order.
double delta_f_average(const SingleModeModel& m, int mode, int order = 40, double h = 1e-4);

/// Nodes and weights for int exp(-x^2) f(x) dx (Golub-Welsch).
std::pair<RVector, RVector> gauss_hermite(int order);

struct CorrelationTerm {
    double energy;         // E_i
    double reference;      // endpoint eigenvalue of the tracked branch
    double weight;
};

struct CorrelationEnergyResult {
    double e_cor{0.0};
    std::vector<CorrelationTerm> terms;
    double min_overlap{1.0};
    int n_steps{0};
};

/// Tracks eigenpairs of h0 + lambda (h_full - h0) from lambda = 1 to 0.
/// weights are |alpha_i|^2 over eigenstates of h_full in ascending order.
/// Doubles the step count while the minimum overlap is below 0.9 (up to
/// max_doublings) and throws ContinuationError if it ends below 0.5.
CorrelationEnergyResult correlation_energy(std::span<const double> weights, const CMatrix& h_full,
                                           const CMatrix& h0, int n_steps = 200, int max_doublings = 6,
                                           const std::optional<CMatrix>& tie_break = std::nullopt);

/// exp(-iHt) psi0 via a full eigendecomposition, one state per time.
std::vector<CVector> exact_propagate(const SingleModeModel& m, const CVector& psi0, std::span<const double> times);
std::vector<CVector> exact_propagate(const RMatrix& h, const CVector& psi0, std::span<const double> times);

/// sum sigma_i^4 over the singular values of the electronic_dim x rest
/// coefficient matrix (electronic index slow).
double schmidt_purity(const CVector& psi, int electronic_dim = 4);

/// Two-level model H = (splitting / 2) sigma_z coupled through sigma_z to one
/// Debye bath with K Matsubara terms.
heom::ElectronicModel dephasing_model(const model::ModelParams& params, int K, double splitting = 1.0);

/// |rho01(t)| / |rho01(0)| = exp(-Gamma(t)) for dephasing_model, with
/// Gamma(t) = (4/pi) int_0^inf J(w) coth(beta w/2) (1 - cos wt) / w^2 dw
/// to 1e-8 absolute. Throws QuadratureError otherwise.
std::vector<double> analytic_dephasing(const model::ModelParams& params, std::span<const double> times);

/// Gamma(t) alone.
double dephasing_exponent(const model::ModelParams& params, double t);

} // namespace hhdeco::ref
