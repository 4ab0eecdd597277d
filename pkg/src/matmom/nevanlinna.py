"""Linear-fractional parametrization of all solutions in the indeterminate case.

The transform of every solution (of the transposed measure) is

    (2i / ((z^2+1)^2 k(z))) * (A(z) + B(z) F ((z+i) k(z) I + C(z) F)^{-1} D(z))

over the upper half-plane punctured at i, where F ranges over the
contraction-valued parameters that avoid the forbidden matrix
isometrically at infinity.  All coefficient polynomials are assembled
from inner products of the orthonormal families built in hilbert_space;
polynomial coefficients are recovered by evaluation-interpolation with
exact degree bounds.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .determinate import cluster_eigh
from .errors import EvaluationError, ParameterError, RankError
from .hilbert_space import BasisCollection, HilbertRep, ip_matrix
from .matpoly import MatrixPolynomial, interpolation_nodes, poly_trim, polyval
from .moment_model import AtomicMeasure, DEFAULT_TOL, Tolerances, hermitize

FIXED_POINT_TOL = 1e-8  # unitary extension eigenvalues this close to 1 are rejected


@dataclass(frozen=True, eq=False)
class NevanlinnaCoefficients:
    """Everything needed to evaluate the solution transform for any parameter."""

    N: int
    tau: int
    delta: int
    rho: int
    k: np.ndarray                 # scalar polynomial coefficients, lowest first
    A_poly: MatrixPolynomial      # N x N
    B_poly: MatrixPolynomial      # N x delta
    C_poly: MatrixPolynomial      # delta x delta
    D_poly: MatrixPolynomial      # delta x N
    Xi: np.ndarray                # (delta, delta) forbidden matrix
    W: np.ndarray                 # (tau, delta)
    T: np.ndarray                 # (delta, delta)
    Chat: np.ndarray              # (delta, tau)
    K: np.ndarray                 # (rho, N)
    a0: np.ndarray                # (tau, tau); the i-block equals I - w(z) a0
    psi: MatrixPolynomial         # N x N cubic correction term

    @property
    def c0(self) -> np.ndarray:
        # the defect-row block equals -w(z) c0; it shares its coefficient with Chat
        return self.Chat

    def to_json_obj(self) -> dict:
        from .moment_model import matrix_to_json
        return {
            "N": self.N,
            "tau": self.tau,
            "delta": self.delta,
            "rho": self.rho,
            "k": [[float(c.real), float(c.imag)] for c in self.k],
            "A": self.A_poly.to_json_obj(),
            "B": self.B_poly.to_json_obj(),
            "C": self.C_poly.to_json_obj(),
            "D": self.D_poly.to_json_obj(),
            "Xi": matrix_to_json(self.Xi),
            "W": matrix_to_json(self.W),
            "T": matrix_to_json(self.T),
            "Chat": matrix_to_json(self.Chat),
            "K": matrix_to_json(self.K),
            "A0_coeff": matrix_to_json(self.a0),
            "C0_coeff": matrix_to_json(self.c0),
            "psi": self.psi.to_json_obj(),
        }


def forbidden_matrix(bases: BasisCollection, tol: Tolerances = DEFAULT_TOL) -> np.ndarray:
    """Matrix of the forbidden operator between the two defect bases.

    Built as the ratio of the two coordinate matrices of the projection of
    the domain complement onto the defect spaces.  The first factor is
    always invertible for a consistent rank classification.
    """
    if bases.delta == 0:
        raise ParameterError("problem is determinate; no forbidden matrix exists")
    f_comp = bases.domain_comp.vectors
    m_si = ip_matrix(bases.defect_basis.vectors, f_comp)
    m_smi = ip_matrix(bases.codefect_basis.vectors, f_comp)
    if m_si.shape[0] != m_si.shape[1]:
        raise RankError(f"defect dimensions disagree: {m_si.shape}")
    svals = np.linalg.svd(m_si, compute_uv=False)
    if svals[-1] <= tol.inv_tol * max(1.0, svals[0]):
        raise RankError(
            f"projection matrix is numerically singular (smallest singular value "
            f"{svals[-1]:.3e}); rank classification is unstable")
    xi = m_smi @ np.linalg.inv(m_si)
    sigma = float(np.linalg.svd(xi, compute_uv=False)[0])
    if sigma > 1.0 + 1e3 * tol.rank_tol:
        raise RankError(f"forbidden matrix is expanding (norm {sigma:.12f}); Gram data inconsistent")
    return xi


def check_constant_admissible(F: np.ndarray, Xi: np.ndarray,
                              tol: Tolerances = DEFAULT_TOL) -> bool:
    """Admissibility of a constant parameter matrix.

    A constant contraction is inadmissible exactly when some nonzero vector
    is annihilated by F - Xi while F preserves its norm.  The check runs
    over the whole null space of F - Xi, not just individual singular
    vectors.
    """
    F = np.asarray(F, dtype=complex)
    Xi = np.asarray(Xi, dtype=complex)
    svals_f = np.linalg.svd(F, compute_uv=False)
    if svals_f.size and svals_f[0] > 1.0 + tol.psd_tol:
        raise ParameterError(f"parameter is not a contraction (largest singular value {svals_f[0]:.6f})")
    diff = F - Xi
    _, svals, vh = np.linalg.svd(diff)
    null_mask = svals <= tol.inv_tol * max(1.0, float(svals.max(initial=0.0)))
    if not np.any(null_mask):
        return True
    null_basis = vh[null_mask].conj().T
    reach = float(np.linalg.svd(F @ null_basis, compute_uv=False).max(initial=0.0))
    return bool(reach < 1.0 - tol.inv_tol)


def _adjugate_samples(a0: np.ndarray, z: complex):
    """det and adjugate of (z+i) I - (z-i) a0 at one upper half-plane node."""
    tau = a0.shape[0]
    m = (z + 1j) * np.eye(tau) - (z - 1j) * a0
    det = complex(np.linalg.det(m))
    adj = det * np.linalg.inv(m)
    return det, adj


def assemble_coefficients(rep: HilbertRep, bases: BasisCollection,
                          tol: Tolerances = DEFAULT_TOL) -> NevanlinnaCoefficients:
    """Build all transform coefficients from inner products of the basis families."""
    if bases.delta == 0:
        raise ParameterError("problem is determinate; the parametrization is for the indeterminate case")
    tau, delta, rho, n_dim = bases.tau, bases.delta, bases.rho, rep.N
    if rho < 1:
        raise RankError("no difference vector among the leading block survived; inconsistent data")

    u = bases.range_basis.vectors
    up = bases.defect_basis.vectors
    v = bases.cayley
    vp = bases.codefect_basis.vectors

    a0 = ip_matrix(u, v)                      # (v_k, u_j)
    w_mat = ip_matrix(u, vp)                  # (v'_l, u_j)
    t_mat = ip_matrix(up, vp)                 # (v'_l, u'_j)
    chat = ip_matrix(up, v)                   # (v_k, u'_j)
    k_mat = ip_matrix(u, bases.y[:, :n_dim])[:rho]  # (y_k, u_j), leading rows only

    gamma = rep.gram()

    # cubic correction: entry (j, k) collects gamma values with shifted indices
    inner = np.zeros((3, n_dim, n_dim), dtype=complex)
    for j in range(n_dim):
        for k in range(n_dim):
            g_kj = gamma[k, j]
            g_sk_j = gamma[k + n_dim, j]
            g_sk_sj = gamma[k + n_dim, j + n_dim]
            inner[0, j, k] = g_sk_sj - 1j * g_sk_j + g_kj
            inner[1, j, k] = g_sk_j - 1j * g_kj
            inner[2, j, k] = g_kj
    psi = MatrixPolynomial(inner).scale(np.array([-0.5, 0.5j]))  # times (i/2)(z+i)

    k_coeffs = poly_trim(np.array(
        np.linalg.solve(
            np.vander(interpolation_nodes(tau + 1), tau + 1, increasing=True),
            [_adjugate_samples(a0, z)[0] for z in interpolation_nodes(tau + 1)],
        ), dtype=complex))

    def adjugate_at(z):
        return _adjugate_samples(a0, z)[1]

    atil = MatrixPolynomial.from_samples(adjugate_at, max(tau - 1, 0), (tau, tau))

    kc = k_mat.conj().T  # (N, rho)

    def a_fn(z):
        det, adj = _adjugate_samples(a0, z)
        return (z + 1j) * (kc @ adj[:rho, :rho] @ k_mat) + det * psi(z)

    def b_fn(z):
        _, adj = _adjugate_samples(a0, z)
        return -(z * z + 1.0) * (kc @ adj[:rho, :] @ w_mat)

    def c_fn(z):
        det, adj = _adjugate_samples(a0, z)
        return (-z + 1j) * (det * t_mat + (z - 1j) * (chat @ adj @ w_mat))

    def d_fn(z):
        _, adj = _adjugate_samples(a0, z)
        return -(z - 1j) * (chat @ adj[:, :rho] @ k_mat)

    a_poly = MatrixPolynomial.from_samples(a_fn, tau + 3, (n_dim, n_dim))
    b_poly = MatrixPolynomial.from_samples(b_fn, tau + 2, (n_dim, delta))
    c_poly = MatrixPolynomial.from_samples(c_fn, tau + 2, (delta, delta))
    d_poly = MatrixPolynomial.from_samples(d_fn, tau + 2, (delta, n_dim))

    xi = forbidden_matrix(bases, tol)

    nc = NevanlinnaCoefficients(
        N=n_dim, tau=tau, delta=delta, rho=rho, k=k_coeffs,
        A_poly=a_poly, B_poly=b_poly, C_poly=c_poly, D_poly=d_poly,
        Xi=xi, W=w_mat, T=t_mat, Chat=chat, K=k_mat, a0=a0, psi=psi,
    )
    _verify_coefficient_identity(nc)
    return nc


def _verify_coefficient_identity(nc: NevanlinnaCoefficients) -> None:
    # the adjugate polynomial times the i-block must collapse to k(z)/(z+i) I
    eye = np.eye(nc.tau)
    for z in (0.31 + 0.83j, -0.67 + 1.62j, 1.13 + 0.44j):
        a0z = eye - ((z - 1j) / (z + 1j)) * nc.a0
        det, adj = _adjugate_samples(nc.a0, z)
        lhs = adj @ a0z
        rhs = (polyval(nc.k, z) / (z + 1j)) * eye
        scale = 1.0 + float(np.abs(rhs).max(initial=0.0))
        if float(np.abs(lhs - rhs).max(initial=0.0)) > 1e-8 * scale:
            raise RankError("coefficient identity violated; interpolation degrees inconsistent")


def _parameter_values(F, delta: int, points: np.ndarray, tol: Tolerances) -> np.ndarray:
    if callable(F):
        vals = np.stack([np.asarray(F(z), dtype=complex).reshape(delta, delta) for z in points])
    else:
        fixed = np.asarray(F, dtype=complex).reshape(delta, delta)
        vals = np.broadcast_to(fixed, (points.size, delta, delta)).copy()
    svals = np.linalg.svd(vals, compute_uv=False)
    worst = float(svals[:, 0].max(initial=0.0))
    if worst > 1.0 + tol.psd_tol:
        raise ParameterError(f"parameter is not a contraction (largest singular value {worst:.6f})")
    return vals


def evaluate_transform(nc: NevanlinnaCoefficients, F, z,
                       tol: Tolerances = DEFAULT_TOL) -> np.ndarray:
    """Evaluate the solution transform for parameter F at z (scalar or array).

    z must lie in the open upper half-plane away from i.  F is a constant
    delta x delta contraction or a callable z -> matrix.  Returns the
    transform of the transposed measure: entry (j, k) integrates
    1/(t - z) against dm_{k,j}.
    """
    z_arr = np.asarray(z, dtype=complex)
    flat = np.atleast_1d(z_arr).ravel()
    if flat.size == 0:
        return np.zeros(z_arr.shape + (nc.N, nc.N), dtype=complex)
    if np.any(flat.imag <= 0.0):
        raise EvaluationError("z must lie in the open upper half-plane")
    if np.any(np.abs(flat - 1j) < 1e-10):
        raise EvaluationError("z = i is excluded from the transform domain")

    f_vals = _parameter_values(F, nc.delta, flat, tol)
    kz = polyval(nc.k, flat)
    az = nc.A_poly(flat)
    bz = nc.B_poly(flat)
    cz = nc.C_poly(flat)
    dz = nc.D_poly(flat)

    pivot = ((flat + 1j) * kz)[:, None, None] * np.eye(nc.delta) + cz @ f_vals
    svals = np.linalg.svd(pivot, compute_uv=False)
    bad = svals[:, -1] <= tol.inv_tol * np.maximum(1.0, svals[:, 0])
    if np.any(bad):
        idx = int(np.nonzero(bad)[0][0])
        raise EvaluationError(
            f"singular pivot at z={flat[idx]}: smallest singular value {svals[idx, -1]:.3e} "
            "(parameter not admissible at this point, or z is a root of k)")
    inner = bz @ f_vals @ np.linalg.solve(pivot, dz)
    pref = 2j / ((flat ** 2 + 1.0) ** 2 * kz)
    out = pref[:, None, None] * (az + inner)
    if z_arr.ndim == 0:
        return out[0]
    return out.reshape(z_arr.shape + (nc.N, nc.N))


# ---------------------------------------------------------------------------
# Canonical solutions from unitary constant parameters
# ---------------------------------------------------------------------------

def extension_matrix(bases: BasisCollection, F: np.ndarray) -> np.ndarray:
    """Unitary extension of the Cayley isometry determined by a unitary parameter."""
    q = np.concatenate([bases.range_basis.vectors, bases.defect_basis.vectors], axis=1)
    images = np.concatenate([bases.cayley, bases.codefect_basis.vectors @ F], axis=1)
    return images @ q.conj().T


def extension_operator(bases: BasisCollection, F: np.ndarray,
                       tol: Tolerances = DEFAULT_TOL) -> np.ndarray:
    """Self-adjoint extension of the shift, as an r x r Hermitian matrix.

    Requires a unitary, admissible parameter whose extension has no fixed
    points.  Admissibility and the fixed-point test are expected to agree;
    a disagreement is reported as a warning since their equivalence is a
    working hypothesis, not a proved fact.
    """
    if bases.delta == 0:
        raise ParameterError("problem is determinate; use the determinate solver")
    F = np.asarray(F, dtype=complex).reshape(bases.delta, bases.delta)
    unit_dev = float(np.abs(F.conj().T @ F - np.eye(bases.delta)).max(initial=0.0))
    if unit_dev > tol.psd_tol:
        raise ParameterError(f"parameter is not unitary (deviation {unit_dev:.3e})")

    xi = forbidden_matrix(bases, tol)
    admissible = check_constant_admissible(F, xi, tol)
    u_ext = extension_matrix(bases, F)
    eigs = np.linalg.eigvals(u_ext)
    fixed_dist = float(np.abs(eigs - 1.0).min(initial=np.inf))
    has_fixed = fixed_dist <= FIXED_POINT_TOL

    if admissible == has_fixed:
        warnings.warn(
            "admissibility and the fixed-point test disagree "
            f"(admissible={admissible}, nearest extension eigenvalue to 1 at distance "
            f"{fixed_dist:.3e}); treating the parameter as rejected",
            RuntimeWarning, stacklevel=2)
    if not admissible:
        raise ParameterError("parameter is not admissible (forbidden-matrix condition)")
    if has_fixed:
        raise ParameterError(
            f"extension has fixed points (eigenvalue within {fixed_dist:.3e} of 1); "
            "parameter rejected")

    eye = np.eye(u_ext.shape[0])
    a_ext = 1j * np.linalg.solve(u_ext - eye, u_ext + eye)
    return hermitize(a_ext)


def canonical_solution(rep: HilbertRep, bases: BasisCollection, F,
                       tol: Tolerances = DEFAULT_TOL) -> AtomicMeasure:
    """Finitely atomic solution generated by a unitary constant parameter.

    Atoms sit at the eigenvalues of the extension; the weight at each atom
    compresses the eigenprojection onto the leading generating vectors.
    """
    a_ext = extension_operator(bases, F, tol)
    cluster_tol = 1e-8 * (1.0 + float(np.linalg.norm(a_ext, 2))) if a_ext.size else 1e-8
    xc = rep.first_block()
    atoms = []
    for loc, proj in cluster_eigh(a_ext, cluster_tol):
        w = hermitize((xc.conj().T @ proj @ xc).T)
        atoms.append((loc, w))
    return AtomicMeasure(atoms=tuple(atoms))


def transform_via_resolvent(rep: HilbertRep, bases: BasisCollection, F, z,
                            tol: Tolerances = DEFAULT_TOL) -> np.ndarray:
    """Transform values computed through the resolvent of the extension.

    Independent of the polynomial coefficient path: entry (j, k) is the
    inner product of the resolvent applied to x_k against x_j, matching the
    transposed-measure convention of evaluate_transform.
    """
    a_ext = extension_operator(bases, F, tol)
    xc = rep.first_block()
    z_arr = np.asarray(z, dtype=complex)
    flat = np.atleast_1d(z_arr).ravel()
    if np.any(flat.imag == 0.0):
        raise EvaluationError("z must be non-real")
    eye = np.eye(a_ext.shape[0])
    vals = np.stack([xc.conj().T @ np.linalg.solve(a_ext - w * eye, xc) for w in flat])
    if z_arr.ndim == 0:
        return vals[0]
    return vals.reshape(z_arr.shape + (rep.N, rep.N))


def find_admissible_unitary(Xi: np.ndarray, tol: Tolerances = DEFAULT_TOL,
                            seed: int = 0, tries: int = 128) -> np.ndarray:
    """Deterministically search for an admissible unitary constant parameter."""
    delta = Xi.shape[0]
    if delta == 1:
        golden = 2.0 * np.pi * (np.sqrt(5.0) - 1.0) / 2.0
        for j in range(tries):
            F = np.array([[np.exp(1j * (0.0 + j * golden))]])
            if check_constant_admissible(F, Xi, tol):
                return F
    else:
        rng = np.random.default_rng(seed)
        for _ in range(tries):
            g = rng.normal(size=(delta, delta)) + 1j * rng.normal(size=(delta, delta))
            q, r = np.linalg.qr(g)
            F = q * (np.diagonal(r) / np.abs(np.diagonal(r)))
            if check_constant_admissible(F, Xi, tol):
                return F
    raise ParameterError("no admissible unitary parameter found within the search budget")


# ---------------------------------------------------------------------------
# Stieltjes-Perron inversion
# ---------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class SampledDistribution:
    """Cumulative distribution samples recovered from boundary values."""

    grid: np.ndarray      # (L,) increasing real points
    values: np.ndarray    # (L, N, N) cumulative mass over (grid[0], grid[k])
    monotone: bool        # False when the extrapolated diagonals dip
    eps_schedule: tuple

    def total_mass(self) -> np.ndarray:
        return self.values[-1]


def _neville_at_zero(xs, tables):
    tab = list(tables)
    n = len(xs)
    for j in range(1, n):
        for i in range(n - j):
            tab[i] = (xs[i] * tab[i + 1] - xs[i + j] * tab[i]) / (xs[i] - xs[i + j])
    return tab[0]


def invert_transform(evaluator, grid, eps_schedule=(1e-2, 1e-3, 1e-4)) -> SampledDistribution:
    """Recover the cumulative measure from transform boundary values.

    Integrates the matrix imaginary part of the transform along horizontal
    lines Im z = eps by the trapezoid rule on the grid, then extrapolates
    eps -> 0 through the schedule.  The evaluator receives a full complex
    grid array and must return stacked (L, N, N) transform values of the
    transposed measure; the output is transposed back.
    """
    grid = np.asarray(grid, dtype=float)
    if grid.ndim != 1 or grid.size < 2 or np.any(np.diff(grid) <= 0):
        raise EvaluationError("grid must be a strictly increasing 1-D array")
    eps_schedule = tuple(float(e) for e in eps_schedule)
    if not eps_schedule or any(e <= 0 for e in eps_schedule):
        raise EvaluationError("eps schedule must contain positive values")

    cums = []
    for eps in eps_schedule:
        vals = np.asarray(evaluator(grid + 1j * eps), dtype=complex)
        if vals.ndim == 1:
            vals = vals[:, None, None]
        imag = (vals - vals.conj().transpose(0, 2, 1)) / 2j
        steps = 0.5 * (imag[1:] + imag[:-1]) * np.diff(grid)[:, None, None]
        cum = np.concatenate([np.zeros((1,) + imag.shape[1:]), np.cumsum(steps, axis=0)])
        cums.append(cum / np.pi)

    extrap = cums[0] if len(cums) == 1 else _neville_at_zero(eps_schedule, cums)
    diag = np.real(np.einsum("lkk->lk", extrap))
    slack = 1e-6 * (1.0 + float(np.abs(diag).max(initial=0.0)))
    monotone = bool(np.all(np.diff(diag, axis=0) >= -slack))
    if not monotone:
        warnings.warn("extrapolated distribution is not monotone within tolerance",
                      RuntimeWarning, stacklevel=2)
    values = extrap.transpose(0, 2, 1)  # transposed-measure transform back to the measure
    return SampledDistribution(grid=grid, values=values, monotone=monotone,
                               eps_schedule=eps_schedule)
