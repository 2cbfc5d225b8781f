// heom.hpp: Hierarchical equations of motion for a small system coupled to
// independent Debye baths through Hermitian operators Q_m.
//
// With scaled ADOs the generator reads
//
//   d rho_n/dt = -i [H, rho_n] - (sum_j n_j nu_j) rho_n - sum_m Xi_m [Q_m, [Q_m, rho_n]]
//                - i sum_j sqrt((n_j + 1) |c_j|) [Q_m(j), rho_{n+e_j}]
//                - i sum_j sqrt(n_j / |c_j|) (c_j Q_m(j) rho_{n-e_j} - c_j^* rho_{n-e_j} Q_m(j)),
//
// where j runs over (bath m, exponential k) pairs. The terminator term is only
// present when enabled. Neighbours outside the hierarchy are zero.

#pragma once

#include <functional>
#include <span>
#include <string>
#include <vector>

#include "hhdeco/heom/bath.hpp"
#include "hhdeco/heom/hierarchy.hpp"
#include "hhdeco/linalg.hpp"
#include "hhdeco/model.hpp"

namespace hhdeco::heom {

/// System Hamiltonian plus one coupling operator and bath expansion per bath.
struct ElectronicModel {
    CMatrix hamiltonian;
    std::vector<CMatrix> couplings;
    std::vector<BathExpansion> baths;

    void validate() const;
    [[nodiscard]] int dim() const { return static_cast<int>(hamiltonian.rows()); }
};

enum class HamiltonianKind { Full, HartreeFock };

/// The Hubbard-Holstein molecule: four identical Debye baths coupled through
/// Q_1..Q_4, with H^S (Full) or H^S_0 (HartreeFock) as the system Hamiltonian.
ElectronicModel hubbard_holstein(const model::ModelParams& params, int K,
                                 HamiltonianKind kind = HamiltonianKind::Full);

struct HeomConfig {
    int K{3};                   // Matsubara terms per bath
    int L{6};                   // hierarchy depth
    double dt{0.002};           // RK4 step (hbar/t0)
    double t_max{40.0};         // final time (hbar/t0)
    int record_stride{25};      // steps between stored snapshots
    bool use_scaling{true};
    bool use_terminator{true};
    double divergence_threshold{1e6};
    std::size_t memory_cap{kDefaultMemoryCap};
    int threads{1};

    void validate() const;
};

/// Precomputed right-hand side of the hierarchy for a fixed model and truncation.
class HeomGenerator {
public:
    HeomGenerator(const ElectronicModel& model, std::shared_ptr<const Hierarchy> hierarchy,
                  bool use_scaling = true, bool use_terminator = true);

    /// out = d(in)/dt. `in` and `out` must share this generator's hierarchy.
    void apply(const AdoStore& in, AdoStore& out, int threads = 1) const;

    [[nodiscard]] const Hierarchy& hierarchy() const noexcept { return *hierarchy_; }
    [[nodiscard]] int dim() const noexcept { return dim_; }
    [[nodiscard]] bool diagonal_couplings() const noexcept { return diagonal_; }

private:
    void apply_range(const AdoStore& in, AdoStore& out, std::size_t begin, std::size_t end) const;
    template <int D>
    void apply_range_diagonal(const AdoStore& in, AdoStore& out, std::size_t begin, std::size_t end) const;
    void apply_range_dense(const AdoStore& in, AdoStore& out, std::size_t begin, std::size_t end) const;

    std::shared_ptr<const Hierarchy> hierarchy_;
    int dim_;
    int n_modes_;
    bool scaling_;
    bool diagonal_;
    CMatrix minus_i_h_;                    // -i H
    CMatrix self_;                         // -sum_m Xi_m [Q_m,[Q_m, .]] as elementwise factor (diagonal path)
    std::vector<int> mode_bath_;
    std::vector<std::complex<double>> amp_;
    std::vector<double> rate_;
    std::vector<bool> active_;
    std::vector<double> damping_;          // sum_j n_j nu_j per ADO
    std::vector<CMatrix> up_coef_;         // diagonal path: elementwise factors
    std::vector<CMatrix> down_coef_;
    std::vector<double> up_scale_;         // [j * (L + 1) + n]
    std::vector<double> down_scale_;
    std::vector<CMatrix> couplings_;       // dense path
    std::vector<double> residual_;         // Xi per bath (0 when the terminator is off)
};

/// Derivative of every ADO in `store` (stateless convenience wrapper).
AdoStore heom_rhs(const AdoStore& store, const CMatrix& hs, std::span<const CMatrix> couplings,
                  std::span<const BathExpansion> expansion, bool use_scaling = true,
                  bool use_terminator = true);

struct TrajectoryDiagnostics {
    double max_trace_defect{0.0};
    double max_hermiticity_defect{0.0};
    double min_eigenvalue{1.0};
    double max_ado_norm{0.0};
    std::size_t n_ados{0};
    std::size_t steps{0};

    /// |Tr - 1| < 1e-8, Hermiticity defect < 1e-8 and min eigenvalue > -1e-6.
    [[nodiscard]] bool within_tolerance() const;
};

struct Trajectory {
    std::vector<double> times;
    std::vector<CMatrix> states;  // tier-0 ADO at each time
    TrajectoryDiagnostics diagnostics;
};

/// Fixed-step classical RK4 from rho0 with all higher ADOs zero.
/// Throws hhdeco::TruncationError when any ADO norm exceeds
/// config.divergence_threshold.
Trajectory propagate(const ElectronicModel& model, const CMatrix& rho0, const HeomConfig& config);

struct SweepCell {
    int K{0};
    int L{0};
    bool ok{false};
    std::string error;
    double deviation_from_previous_L{-1.0};  // max |dP|; negative when there is no previous L
    double deviation_from_previous_K{-1.0};
    bool converged{false};
    double wall_seconds{0.0};
};

struct SweepReport {
    double tolerance{1e-3};
    std::vector<SweepCell> cells;  // K-major, in the order of the input lists
};

/// Runs propagate for every (K, L) and compares purity series between
/// successive refinements. `build(K)` supplies the model for a Matsubara count.
SweepReport convergence_sweep(const std::function<ElectronicModel(int)>& build, const CMatrix& rho0,
                              const HeomConfig& base, const std::vector<int>& K_list,
                              const std::vector<int>& L_list, double tolerance = 1e-3);

} // namespace hhdeco::heom
