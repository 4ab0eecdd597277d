"""Finite-dimensional Hilbert space model of a solvable moment problem.

Factors the block Hankel Gram matrix into explicit coordinates for the
generating vectors x_0 .. x_{dN+N-1}, realizes the shift operator
A x_k = x_{k+N} on its natural domain, and builds all orthonormal
families needed downstream: the domain split, the Cayley-transform
range split, and the two defect-space bases.

Inner product convention: (f, g) = g* f in coordinates, linear in the
first argument.  With that convention the coordinates returned by
factor_gram satisfy (x_n, x_m) = gamma[n, m] exactly (so the literal
matrix product X* X equals the transpose of the Gram matrix).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import RankError, SolvabilityError
from .moment_model import DEFAULT_TOL, Tolerances
from .solvability import HankelPair


def ip(f: np.ndarray, g: np.ndarray) -> complex:
    """Coordinate inner product (f, g) = g* f."""
    return complex(np.vdot(g, f))


def ip_matrix(left: np.ndarray, right: np.ndarray) -> np.ndarray:
    """Matrix of pairwise inner products: entry (j, k) = (right_k, left_j)."""
    return left.conj().T @ right


@dataclass(frozen=True, eq=False)
class HilbertRep:
    """Coordinates of the generating vectors in an r-dimensional space."""

    N: int
    d: int
    X: np.ndarray  # (r, dN+N), column n holds the coordinates of x_n

    @property
    def r(self) -> int:
        return self.X.shape[0]

    @property
    def dN(self) -> int:
        return self.d * self.N

    def vector(self, n: int) -> np.ndarray:
        return self.X[:, n]

    def first_block(self) -> np.ndarray:
        """Columns x_0 .. x_{N-1}."""
        return self.X[:, : self.N]

    def gram(self) -> np.ndarray:
        """Reconstructed Gram matrix with entry (n, m) = (x_n, x_m)."""
        return self.X.T @ self.X.conj()


@dataclass(frozen=True, eq=False)
class OrthoBasisSet:
    """Result of rank-revealing Gram-Schmidt.

    vectors: (r, m) ambient coordinates, orthonormal columns.
    source_indices: which input produced each surviving column.
    expansions: (m, n_inputs) rows expressing each output as a linear
    combination of the inputs processed so far.
    """

    vectors: np.ndarray
    source_indices: tuple
    expansions: np.ndarray

    @property
    def size(self) -> int:
        return self.vectors.shape[1]


def _project_out(w, exp, basis, expans):
    for q, eq in zip(basis, expans):
        c = np.vdot(q, w)  # (w, q) = q* w
        w = w - c * q
        exp = exp - c * eq
    return w, exp


def orthonormalize(vectors: np.ndarray, rank_tol: float = DEFAULT_TOL.rank_tol) -> OrthoBasisSet:
    """Modified Gram-Schmidt over the columns, discarding dependent inputs.

    An input is discarded when its residual norm falls to or below
    rank_tol * max(1, input norm).  A single re-orthogonalization pass runs
    whenever the residual norm drops below sqrt(rank_tol) times that scale,
    which keeps rank decisions stable near the cutoff.  Input order is
    preserved and survivors are normalized without any phase adjustment.
    """
    vectors = np.asarray(vectors, dtype=complex)
    r, n = vectors.shape
    basis: list = []
    expans: list = []
    sources: list = []
    for idx in range(n):
        w = vectors[:, idx].copy()
        exp = np.zeros(n, dtype=complex)
        exp[idx] = 1.0
        norm_in = float(np.linalg.norm(w))
        scale = max(1.0, norm_in)
        w, exp = _project_out(w, exp, basis, expans)
        if float(np.linalg.norm(w)) <= math.sqrt(rank_tol) * scale:
            w, exp = _project_out(w, exp, basis, expans)
        norm_out = float(np.linalg.norm(w))
        if norm_out <= rank_tol * scale:
            continue
        basis.append(w / norm_out)
        expans.append(exp / norm_out)
        sources.append(idx)
    vec_mat = np.column_stack(basis) if basis else np.zeros((r, 0), dtype=complex)
    exp_mat = np.vstack(expans) if expans else np.zeros((0, n), dtype=complex)
    return OrthoBasisSet(vectors=vec_mat, source_indices=tuple(sources), expansions=exp_mat)


def factor_gram(h: HankelPair, tol: Tolerances = DEFAULT_TOL, N: int | None = None,
                d: int | None = None) -> HilbertRep:
    """Realize the Gram matrix by explicit coordinates.

    Eigenvalues of gamma_d below rank_tol * lambda_max are dropped (slightly
    negative ones down to -psd_tol * lambda_max are treated as roundoff
    zeros); anything more negative is a solvability violation.
    """
    gamma = h.gamma_d
    size = gamma.shape[0]
    if N is None or d is None:
        # infer the block structure from the sizes of the Hankel pair
        n_dim = size - h.gamma_dm1.shape[0]
        N = n_dim if N is None else N
        d = (size - N) // N if d is None else d
    if size != (d + 1) * N:
        raise RankError(f"Hankel size {size} does not match N={N}, d={d}")

    evals, evecs = np.linalg.eigh(gamma)
    lam_max = float(evals.max(initial=0.0))
    scale = lam_max if lam_max > 0.0 else 1.0
    if float(evals.min(initial=0.0)) < -tol.psd_tol * scale:
        raise SolvabilityError(
            f"Gram matrix has negative eigenvalue {evals.min():.3e}; problem not solvable")
    keep = evals > tol.rank_tol * scale
    lam = evals[keep]
    u = evecs[:, keep]
    # X = sqrt(lam) . U^T gives (x_n, x_m) = gamma[n, m] under (f, g) = g* f
    X = np.sqrt(lam)[:, None] * u.T
    rep = HilbertRep(N=N, d=d, X=X)
    if lam_max > 0.0:
        err = float(np.abs(rep.gram() - gamma).max(initial=0.0))
        if err > 10.0 * (tol.rank_tol + tol.psd_tol) * scale:
            raise RankError(f"Gram factorization error {err:.3e} exceeds tolerance")
    return rep


def shifted_domain_images(rep: HilbertRep, expansions: np.ndarray,
                          lam: float | None = None) -> np.ndarray:
    """Columns (A - lam) f for domain vectors f given by expansion rows over x_0..x_{dN-1}.

    The shift A maps x_k to x_{k+N}, so the image is read off by reindexing
    the expansion; no linear solve is involved.
    """
    dN = rep.dN
    coeff = expansions[:, :dN].T  # (dN, m)
    images = rep.X[:, rep.N: rep.N + dN] @ coeff
    if lam is not None and lam != 0.0:
        images = images - lam * (rep.X[:, :dN] @ coeff)
    return images


@dataclass(frozen=True, eq=False)
class OperatorModel:
    """Shift operator data: difference vectors y_k = x_{k+N} - i x_k, the
    orthonormal basis they generate, and its Cayley images."""

    y: np.ndarray               # (r, dN) columns y_k
    range_basis: OrthoBasisSet  # u_j spanning ran(A - iI); expansions over the y/x sequence
    cayley: np.ndarray          # (r, tau) columns v_j, images of u_j under the Cayley isometry
    defect_basis: OrthoBasisSet  # u'_j spanning the orthogonal complement of ran(A - iI)
    rho: int                    # survivors among the first N difference vectors

    @property
    def tau(self) -> int:
        return self.range_basis.size

    @property
    def delta(self) -> int:
        return self.defect_basis.size


def build_operator_model(rep: HilbertRep, tol: Tolerances = DEFAULT_TOL) -> OperatorModel:
    """Orthogonalize y_0..y_{dN-1}, x_0..x_{N-1} and build the Cayley images.

    Each range basis vector u_j = sum c_k y_k is mapped to
    v_j = sum c_k (x_{k+N} + i x_k); the resulting family must be
    orthonormal, which is checked through the norms.
    """
    dN = rep.dN
    X = rep.X
    y = X[:, rep.N: rep.N + dN] - 1j * X[:, :dN]
    seq = np.concatenate([y, X[:, : rep.N]], axis=1)
    gs = orthonormalize(seq, tol.rank_tol)

    tau = sum(1 for s in gs.source_indices if s < dN)
    rho = sum(1 for s in gs.source_indices if s < min(rep.N, dN))

    range_basis = OrthoBasisSet(
        vectors=gs.vectors[:, :tau],
        source_indices=gs.source_indices[:tau],
        expansions=gs.expansions[:tau],
    )
    defect_basis = OrthoBasisSet(
        vectors=gs.vectors[:, tau:],
        source_indices=gs.source_indices[tau:],
        expansions=gs.expansions[tau:],
    )

    z_plus = X[:, rep.N: rep.N + dN] + 1j * X[:, :dN]
    coeff = range_basis.expansions[:, :dN]  # u_j only involves the difference vectors
    cayley = z_plus @ coeff.T
    if tau:
        norm_err = float(np.abs(np.linalg.norm(cayley, axis=0) - 1.0).max(initial=0.0))
        if norm_err > tol.rank_tol:
            raise RankError(f"Cayley image norms deviate from 1 by {norm_err:.3e}; "
                            "Gram data inconsistent with the chosen rank cutoff")
    return OperatorModel(y=y, range_basis=range_basis, cayley=cayley,
                         defect_basis=defect_basis, rho=rho)


@dataclass(frozen=True, eq=False)
class BasisCollection:
    """All orthonormal families attached to one moment problem.

    domain / domain_comp come from orthogonalizing x_0..x_{dN+N-1};
    range_basis / defect_basis from the difference sequence; cayley holds
    the isometric images of the range basis and codefect_basis spans the
    orthogonal complement of their span.
    """

    domain: OrthoBasisSet        # f_j, basis of the operator domain
    domain_comp: OrthoBasisSet   # f'_j, basis of its orthogonal complement
    range_basis: OrthoBasisSet   # u_j
    defect_basis: OrthoBasisSet  # u'_j
    cayley: np.ndarray           # (r, tau) columns v_j
    codefect_basis: OrthoBasisSet  # v'_j
    rho: int
    y: np.ndarray                # (r, dN) difference vectors

    @property
    def kappa(self) -> int:
        return self.domain.size

    @property
    def kappa_prime(self) -> int:
        return self.domain_comp.size

    @property
    def tau(self) -> int:
        return self.range_basis.size

    @property
    def delta(self) -> int:
        return self.defect_basis.size


def build_all_bases(rep: HilbertRep, model: OperatorModel,
                    tol: Tolerances = DEFAULT_TOL) -> BasisCollection:
    """Run the remaining orthogonalizations and cross-check all dimensions."""
    dN = rep.dN
    gs_x = orthonormalize(rep.X, tol.rank_tol)
    kappa = sum(1 for s in gs_x.source_indices if s < dN)
    domain = OrthoBasisSet(
        vectors=gs_x.vectors[:, :kappa],
        source_indices=gs_x.source_indices[:kappa],
        expansions=gs_x.expansions[:kappa],
    )
    domain_comp = OrthoBasisSet(
        vectors=gs_x.vectors[:, kappa:],
        source_indices=gs_x.source_indices[kappa:],
        expansions=gs_x.expansions[kappa:],
    )

    tau = model.tau
    seq = np.concatenate([model.cayley, rep.X[:, : rep.N]], axis=1)
    gs_v = orthonormalize(seq, tol.rank_tol)
    lead = sum(1 for s in gs_v.source_indices if s < tau)
    if lead != tau:
        raise RankError("Cayley images lost rank during re-orthogonalization")
    codefect = OrthoBasisSet(
        vectors=gs_v.vectors[:, lead:],
        source_indices=gs_v.source_indices[lead:],
        expansions=gs_v.expansions[lead:],
    )

    r = rep.r
    if kappa + domain_comp.size != r or tau + model.delta != r:
        raise RankError(
            f"basis dimensions disagree with the ambient rank: kappa={kappa}, "
            f"kappa'={domain_comp.size}, tau={tau}, delta={model.delta}, r={r}")
    if codefect.size != model.delta:
        raise RankError(
            f"defect dimensions disagree: {model.delta} vs {codefect.size}; rank unstable")
    if tau != kappa:
        raise RankError(f"domain and range ranks disagree: kappa={kappa}, tau={tau}")

    return BasisCollection(
        domain=domain,
        domain_comp=domain_comp,
        range_basis=model.range_basis,
        defect_basis=model.defect_basis,
        cayley=model.cayley,
        codefect_basis=codefect,
        rho=model.rho,
        y=model.y,
    )


def classify_determinacy(bases: BasisCollection) -> bool:
    """True when the problem is determinate (unique solution).

    The problem is determinate exactly when the generating vectors beyond
    the operator domain bring nothing new, i.e. the domain complement is
    empty and the shift operator is self-adjoint.
    """
    return bases.kappa_prime == 0
