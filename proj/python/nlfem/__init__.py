"""Nonlocal finite element assembly on triangulations."""

from ._nlfem import (
    ConfigError,
    Mesh,
    NumericalError,
    ParseError,
    assemble,
    intersect_area,
    kernel_value,
    parse_mesh,
    run_study,
    structured_mesh,
)


def stiffness_matrix(mesh, **kwargs):
    """assemble() as a scipy.sparse.csr_matrix plus the boolean free-dof mask."""
    import numpy as np
    import scipy.sparse as sp

    (data, indices, indptr, shape), free = assemble(mesh, **kwargs)
    return sp.csr_matrix((data, indices, indptr), shape=shape), np.asarray(free, dtype=bool)


__all__ = [
    "ConfigError",
    "Mesh",
    "NumericalError",
    "ParseError",
    "assemble",
    "intersect_area",
    "kernel_value",
    "parse_mesh",
    "run_study",
    "stiffness_matrix",
    "structured_mesh",
]
