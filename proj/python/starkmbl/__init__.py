"""Exact-diagonalization toolkit for the ergodic to Stark-MBL transition.

Thin wrapper around the compiled extension; see the project README for the
command-line interface and file formats.
"""

from ._core import (  # noqa: F401
    FockBasis,
    NotFoundError,
    ParameterError,
    ResourceError,
    SpectrumWindow,
    __version__,
    binomial,
    build_hamiltonian,
    collapse_cost,
    eigen_window,
    entropy_stats,
    enumerate_basis,
    fit_collapse,
    full_spectrum,
    gap_ratios,
    half_chain_entropy,
    read_records_csv,
    reference_r_mean,
    reference_r_pdf,
    rescale,
    run_point,
    sample_disorder,
)
