"""Explicit unique solution in the determinate case.

When the shift operator is self-adjoint its spectral decomposition
yields the one and only solution directly: atoms at the eigenvalues,
weights from the compressed eigenprojections.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import EvaluationError, ParameterError
from .hilbert_space import BasisCollection, HilbertRep, ip_matrix, shifted_domain_images
from .moment_model import AtomicMeasure, hermitize


@dataclass(frozen=True, eq=False)
class DeterminateModel:
    """Matrix data of the self-adjoint shift in its domain basis.

    R holds the inner products (x_k, f_j); MA is the Hermitian matrix of
    the shift operator itself.
    """

    R: np.ndarray   # (kappa, N)
    MA: np.ndarray  # (kappa, kappa)

    @property
    def kappa(self) -> int:
        return self.MA.shape[0]

    @property
    def N(self) -> int:
        return self.R.shape[1]


def build_determinate_model(rep: HilbertRep, bases: BasisCollection) -> DeterminateModel:
    if bases.kappa_prime != 0:
        raise ParameterError("moment problem is indeterminate; determinate model unavailable")
    f = bases.domain.vectors
    R = ip_matrix(f, rep.first_block())
    images = shifted_domain_images(rep, bases.domain.expansions)
    MA = hermitize(ip_matrix(f, images))
    return DeterminateModel(R=R, MA=MA)


def cluster_eigh(m: np.ndarray, cluster_tol: float):
    """Hermitian eigendecomposition with nearby eigenvalues merged.

    Yields (location, projector) pairs in increasing order of location;
    projectors of merged eigenvalues are summed so repeated spectrum from
    block structure becomes a single PSD weight.
    """
    if m.shape[0] == 0:
        return
    evals, evecs = np.linalg.eigh(m)
    start = 0
    for i in range(1, len(evals) + 1):
        if i == len(evals) or evals[i] - evals[i - 1] > cluster_tol:
            vecs = evecs[:, start:i]
            yield float(evals[start:i].mean()), vecs @ vecs.conj().T
            start = i


def solve_determinate(dm: DeterminateModel) -> AtomicMeasure:
    """Spectral extraction of the unique solution.

    The transform R*(MA - z)^{-1} R expands into simple fractions over the
    eigenvalues of MA; each residue, transposed back from the transform's
    transposed convention, is the weight matrix at that eigenvalue.
    """
    if dm.kappa == 0:
        return AtomicMeasure(atoms=())
    cluster_tol = 1e-8 * (1.0 + float(np.linalg.norm(dm.MA, 2)))
    atoms = []
    for loc, proj in cluster_eigh(dm.MA, cluster_tol):
        w = hermitize((dm.R.conj().T @ proj @ dm.R).T)
        atoms.append((loc, w))
    return AtomicMeasure(atoms=tuple(atoms))


def stieltjes_determinate(dm: DeterminateModel, z: complex) -> np.ndarray:
    """Transform value R*(MA - z I)^{-1} R at a non-real point.

    Returns the transform of the transposed measure: entry (j, k) is the
    integral of 1/(t - z) against dm_{k,j}.
    """
    z = complex(z)
    if z.imag == 0.0:
        raise EvaluationError(f"z must be non-real, got {z}")
    if dm.kappa == 0:
        return np.zeros((dm.N, dm.N), dtype=complex)
    shifted = dm.MA - z * np.eye(dm.kappa)
    return dm.R.conj().T @ np.linalg.solve(shifted, dm.R)
