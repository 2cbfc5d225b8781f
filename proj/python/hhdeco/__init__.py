"""Electronic decoherence in a two-site Hubbard-Holstein molecule."""

from ._core import (
    AsymptoteMode,
    ExpFitResult,
    FitConfig,
    HamiltonianKind,
    HeomConfig,
    ModelParams,
    Trajectory,
    __version__,
    analytic_dephasing,
    build_coupling_ops,
    build_hs,
    build_hs0,
    build_vs,
    correlation_energy,
    cumulant_trace,
    eigenbasis_elements,
    expand_bath,
    fit_exponentials,
    gibbs_state,
    initial_state,
    one_body_rdm,
    propagate,
    purity,
    schmidt_purity,
    sector_eigenvalues,
)

__all__ = [name for name in dir() if not name.startswith("_")] + ["__version__"]
