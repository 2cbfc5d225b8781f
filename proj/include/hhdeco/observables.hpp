// observables.hpp: Scalar and matrix observables of the electronic reduced
// density matrix.

#pragma once

#include <string>
#include <vector>

#include "hhdeco/heom/heom.hpp"
#include "hhdeco/linalg.hpp"

namespace hhdeco::obs {

/// Tr[rho^2]. Computed both as a trace and as sum |rho_ij|^2; throws
/// InvariantError if the two disagree by more than 1e-12.
double purity(const CMatrix& rho);

/// Re Tr[rho H]; throws InvariantError when the imaginary part exceeds 1e-10.
double electronic_energy(const CMatrix& rho, const CMatrix& hs);

/// <E_i|rho|E_j> in the gauge-fixed eigenbasis of hs (ascending energies).
CMatrix eigenbasis_elements(const CMatrix& rho, const CMatrix& hs);
CMatrix eigenbasis_elements(const CMatrix& rho, const model::EigenSystem& basis);

/// Gamma_pq = Tr[d+_q d_p rho] over spin-orbitals (1u, 1d, 2u, 2d).
CMatrix one_body_rdm(const CMatrix& rho);

/// Tr[Gamma^2] - Tr[Gamma].
double cumulant_trace(const CMatrix& gamma);

/// exp(-beta H) / Z, evaluated spectrally with the ground energy shifted out.
CMatrix gibbs_state(const CMatrix& hs, double beta);

/// Named per-snapshot series derived from a trajectory.
struct ObservableSeries {
    std::vector<double> times;
    std::vector<double> purity;
    std::vector<double> energy;
    std::vector<double> cumulant;
    std::vector<CMatrix> elements;  // eigenbasis density matrix per snapshot

    void validate() const;
};

ObservableSeries compute_series(const heom::Trajectory& traj, const CMatrix& hs);

} // namespace hhdeco::obs
