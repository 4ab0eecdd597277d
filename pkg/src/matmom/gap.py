"""Solutions vanishing on a prescribed open gap.

For indeterminate problems, a solution with no mass on an open set
exists exactly when some admissible parameter stays unitary and avoids a
moving unitary matrix family over the whole set.  The family is sampled
on a finite grid; a found parameter is always re-verified through the
atoms of its canonical solution, so positive answers are sound while a
failed search is only inconclusive.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ParameterError, RankError
from .hilbert_space import (BasisCollection, HilbertRep, OrthoBasisSet, ip_matrix,
                            orthonormalize, shifted_domain_images)
from .moment_model import AtomicMeasure, DEFAULT_TOL, GapSpec, Tolerances
from .nevanlinna import NevanlinnaCoefficients, canonical_solution, check_constant_admissible

GRID_SPACING = 0.01
MIN_GRID_POINTS = 101
MAX_GRID_POINTS = 20001
CHEB_CLUSTER_POINTS = 65


def gap_basis(rep: HilbertRep, lam: float, tol: Tolerances = DEFAULT_TOL):
    """Orthonormal bases of the shifted range and its complement at real lam.

    Orthogonalizes x_{k+N} - lam x_k for k = 0..dN-1 and then the leading
    block x_0..x_{N-1}; the split of survivors gives the two families.
    """
    dN = rep.dN
    shifted = rep.X[:, rep.N: rep.N + dN] - float(lam) * rep.X[:, :dN]
    seq = np.concatenate([shifted, rep.X[:, : rep.N]], axis=1)
    gs = orthonormalize(seq, tol.rank_tol)
    lead = sum(1 for s in gs.source_indices if s < dN)
    range_part = OrthoBasisSet(
        vectors=gs.vectors[:, :lead],
        source_indices=gs.source_indices[:lead],
        expansions=gs.expansions[:lead],
    )
    defect_part = OrthoBasisSet(
        vectors=gs.vectors[:, lead:],
        source_indices=gs.source_indices[lead:],
        expansions=gs.expansions[lead:],
    )
    return range_part, defect_part


def _shift_matrix(rep, bases, range_part, lam, tol):
    images = shifted_domain_images(rep, bases.domain.expansions, lam=float(lam))
    m_shift = ip_matrix(range_part.vectors, images)
    if m_shift.shape[0] != m_shift.shape[1] or m_shift.shape[0] == 0:
        return m_shift, False
    svals = np.linalg.svd(m_shift, compute_uv=False)
    return m_shift, bool(svals[-1] > tol.inv_tol * max(1.0, svals[0]))


def _w_from_defect(bases, defect_part, lam, tol):
    if defect_part.size != bases.delta:
        raise RankError(
            f"defect dimension at lam={lam} is {defect_part.size}, expected {bases.delta}")
    m_s = ip_matrix(bases.defect_basis.vectors, defect_part.vectors)
    m_q = ip_matrix(bases.codefect_basis.vectors, defect_part.vectors)
    svals = np.linalg.svd(m_s, compute_uv=False)
    if svals.size and svals[-1] <= tol.inv_tol * max(1.0, svals[0]):
        raise RankError(f"projection matrix at lam={lam} is numerically singular")
    lam = float(lam)
    factor = (lam + 1j) / (lam - 1j)
    return factor * (m_q @ np.linalg.inv(m_s))


def regular_type_check(rep: HilbertRep, bases: BasisCollection, lam: float,
                       tol: Tolerances = DEFAULT_TOL):
    """Matrix of the shifted operator between the domain and shifted-range bases.

    Returns (matrix, invertible).  A dimension mismatch between the two
    families already rules out regular type.
    """
    range_part, _ = gap_basis(rep, lam, tol)
    return _shift_matrix(rep, bases, range_part, lam, tol)


def w_tilde(rep: HilbertRep, bases: BasisCollection, lam: float,
            tol: Tolerances = DEFAULT_TOL) -> np.ndarray:
    """Moving unitary matrix comparing the lam-defect basis with both i-defect bases."""
    _, defect_part = gap_basis(rep, lam, tol)
    return _w_from_defect(bases, defect_part, lam, tol)


@dataclass(frozen=True, eq=False)
class GapPoint:
    lam: float
    shift_matrix: np.ndarray
    invertible: bool
    w_tilde: np.ndarray | None


@dataclass(frozen=True, eq=False)
class GapAnalysis:
    grid: np.ndarray
    points: tuple
    regular_type: bool
    margins: np.ndarray | None = None  # per-point half-chord motion margins

    def point_margins(self) -> np.ndarray:
        if self.margins is not None:
            return self.margins
        return _half_chord_margins(self.points)


def _half_chord_margins(points) -> np.ndarray:
    chords = []
    for prev, cur in zip(points, points[1:]):
        if prev.w_tilde is None or cur.w_tilde is None:
            chords.append(0.0)
        else:
            chords.append(float(np.linalg.norm(cur.w_tilde - prev.w_tilde, 2)))
    margins = np.zeros(len(points))
    for i in range(len(points)):
        if i > 0:
            margins[i] = max(margins[i], 0.5 * chords[i - 1])
        if i < len(chords):
            margins[i] = max(margins[i], 0.5 * chords[i])
    return margins


def spectral_bound(rep: HilbertRep) -> float:
    """Truncation radius for unbounded gap intervals, derived from the Gram norm."""
    if rep.X.size == 0:
        return 1.0
    top = float(np.linalg.norm(rep.X, 2)) ** 2
    return 1.0 + top


def gap_grid(spec: GapSpec, bound: float) -> np.ndarray:
    """Sampling grid: uniform interior points per interval plus Chebyshev
    clustering toward the endpoints; unbounded pieces truncated at the bound."""
    points: list = []
    for a, b in spec.intervals:
        a_eff = max(a, -bound)
        b_eff = min(b, bound)
        if not a_eff < b_eff:
            continue
        length = b_eff - a_eff
        n = max(MIN_GRID_POINTS, min(int(math.ceil(length / GRID_SPACING)), MAX_GRID_POINTS))
        h = length / n
        points.extend(a_eff + h * (np.arange(n) + 0.5))
        j = np.arange(CHEB_CLUSTER_POINTS)
        cheb = 0.5 * (a_eff + b_eff) + 0.5 * length * np.cos(
            np.pi * (2 * j + 1) / (2 * CHEB_CLUSTER_POINTS))
        points.extend(cheb)
    if not points:
        return np.zeros(0, dtype=float)
    grid = np.unique(np.asarray(points, dtype=float))
    return grid


def analyze_gap(rep: HilbertRep, bases: BasisCollection, spec: GapSpec,
                tol: Tolerances = DEFAULT_TOL, grid: np.ndarray | None = None) -> GapAnalysis:
    """Per-point regular-type and unitary-family data over the sampling grid."""
    if grid is None:
        grid = gap_grid(spec, spectral_bound(rep))
    records = []
    regular = True
    for lam in grid:
        range_part, defect_part = gap_basis(rep, float(lam), tol)
        m_shift, invertible = _shift_matrix(rep, bases, range_part, float(lam), tol)
        w_val = None
        if invertible:
            w_val = _w_from_defect(bases, defect_part, float(lam), tol)
        else:
            regular = False
        records.append(GapPoint(lam=float(lam), shift_matrix=m_shift,
                                invertible=invertible, w_tilde=w_val))
    return GapAnalysis(grid=np.asarray(grid, dtype=float), points=tuple(records),
                       regular_type=regular, margins=_half_chord_margins(records))


@dataclass(frozen=True)
class GapClassDecision:
    accepted: bool
    failures: tuple  # of (lam or None, code) pairs; codes 'A'dmissibility, 'B', 'C'

    def __bool__(self) -> bool:
        return self.accepted

    def to_json_obj(self) -> dict:
        return {
            "accepted": self.accepted,
            "failures": [[lam, code] for lam, code in self.failures],
        }


def check_gap_class(F: np.ndarray, Xi: np.ndarray, analysis: GapAnalysis,
                    tol: Tolerances = DEFAULT_TOL) -> GapClassDecision:
    """Membership test for a constant parameter against the gap class.

    Requires admissibility, exact unitarity (within tolerance) and
    invertibility of F - W(lam) over the gap.  Continuity is automatic for
    constants.  Since W moves between grid samples, the invertibility test
    keeps a half-chord margin: if the family passes through F somewhere
    between two samples, its distance to F at the nearer sample is at most
    half the inter-sample chord (to first order in the motion), so falling
    inside that margin counts as a failure.
    """
    F = np.asarray(F, dtype=complex)
    failures = []
    if not check_constant_admissible(F, Xi, tol):
        failures.append((None, "A"))
    delta = F.shape[0]
    unit_dev = float(np.abs(F.conj().T @ F - np.eye(delta)).max(initial=0.0))
    if unit_dev > tol.psd_tol:
        failures.append((None, "B"))

    margins = analysis.point_margins()
    for i, point in enumerate(analysis.points):
        if point.w_tilde is None:
            failures.append((point.lam, "C"))
            continue
        svals = np.linalg.svd(F - point.w_tilde, compute_uv=False)
        if svals[-1] <= max(tol.inv_tol * max(1.0, svals[0]), margins[i]):
            failures.append((point.lam, "C"))
    return GapClassDecision(accepted=not failures, failures=tuple(failures))


def verify_gap(measure: AtomicMeasure, spec: GapSpec, tol: Tolerances = DEFAULT_TOL) -> bool:
    """True when no atom with significant weight lies strictly inside the gap.

    Atoms sitting on interval endpoints are allowed (the gap is open); the
    interior test keeps a gap_tol margin so boundary atoms survive roundoff.
    """
    for t, w in measure.atoms:
        if float(np.trace(w).real) <= tol.gap_tol:
            continue
        if spec.contains(t, margin=tol.gap_tol):
            return False
    return True


@dataclass(frozen=True, eq=False)
class GapSearchResult:
    status: str  # 'found', 'not_regular', 'exhausted'
    F: np.ndarray | None = None
    measure: AtomicMeasure | None = None
    witness: float | None = None

    @property
    def found(self) -> bool:
        return self.status == "found"


def _circular_arcs(mask: np.ndarray):
    """Maximal runs of True in a circular boolean array, as (start, length)."""
    n = mask.size
    if n == 0:
        return []
    if mask.all():
        return [(0, n)]
    if not mask.any():
        return []
    start = int(np.argmin(mask))  # rotate so position 0 is False
    rolled = np.roll(mask, -start)
    arcs = []
    i = 0
    while i < n:
        if rolled[i]:
            j = i
            while j < n and rolled[j]:
                j += 1
            arcs.append(((start + i) % n, j - i))
            i = j
        else:
            i += 1
    return arcs


def _try_candidate(rep, bases, F, xi, analysis, spec, tol):
    decision = check_gap_class(F, xi, analysis, tol)
    if not decision.accepted:
        return None
    try:
        measure = canonical_solution(rep, bases, F, tol)
    except ParameterError:
        return None
    if not verify_gap(measure, spec, tol):
        return None
    count = 2 * rep.d + 1
    recon = measure.moments(count, dim=rep.N)
    gamma = rep.gram()
    dev = 0.0
    for n in range(count):
        p = min(n, rep.d)
        q = n - p
        target = gamma[p * rep.N:(p + 1) * rep.N, q * rep.N:(q + 1) * rep.N]
        dev = max(dev, float(np.abs(recon[n] - target).max(initial=0.0)))
    if dev > tol.moment_tol:
        return None
    return measure


def gap_solvable_search(rep: HilbertRep, bases: BasisCollection,
                        nc: NevanlinnaCoefficients, spec: GapSpec, budget: int = 1000,
                        tol: Tolerances = DEFAULT_TOL, seed: int = 0,
                        analysis: GapAnalysis | None = None) -> GapSearchResult:
    """One-sided search for a constant unitary parameter compatible with the gap.

    A returned witness is verified through its canonical solution.  An
    exhausted budget is NOT a proof of infeasibility; a grid point of
    non-regular type is, since regular type is necessary for a gap solution.
    """
    if bases.delta == 0:
        raise ParameterError("gap search requires an indeterminate problem")
    if analysis is None:
        analysis = analyze_gap(rep, bases, spec, tol)
    if not analysis.regular_type:
        witness = next(p.lam for p in analysis.points if not p.invertible)
        return GapSearchResult(status="not_regular", witness=witness)
    xi = nc.Xi

    if bases.delta == 1:
        thetas = np.linspace(0.0, 2.0 * np.pi, max(int(budget), 8), endpoint=False)
        f_vals = np.exp(1j * thetas)
        # vectorized class test for unimodular scalars: admissible means staying
        # off the forbidden value, condition C means clearing every margin
        w_arr = np.array([p.w_tilde[0, 0] for p in analysis.points]) \
            if analysis.points else np.zeros(0, dtype=complex)
        margins = np.maximum(analysis.point_margins(), tol.inv_tol) \
            if analysis.points else np.zeros(0)
        ok = np.abs(f_vals - complex(xi[0, 0])) > tol.inv_tol
        if w_arr.size:
            dist = np.abs(f_vals[:, None] - w_arr[None, :])
            ok &= np.all(dist > margins[None, :], axis=1)
        arcs = _circular_arcs(ok)
        arcs.sort(key=lambda a: -a[1])
        tries = 0
        step = 2.0 * np.pi / thetas.size
        for start, length in arcs:
            lo = thetas[start]
            span = length * step
            # bisection pattern over the feasible arc, widest placements first
            offsets = [0.5]
            for depth in (4, 8, 16, 32):
                offsets.extend((2 * k + 1) / (2 * depth) for k in range(depth))
            seen = set()
            for frac in offsets:
                if tries >= 64:
                    break
                key = round(frac, 6)
                if key in seen:
                    continue
                seen.add(key)
                theta = lo + frac * span
                F = np.array([[np.exp(1j * theta)]])
                tries += 1
                measure = _try_candidate(rep, bases, F, xi, analysis, spec, tol)
                if measure is not None:
                    return GapSearchResult(status="found", F=F, measure=measure)
        return GapSearchResult(status="exhausted")

    rng = np.random.default_rng(seed)
    delta = bases.delta
    for _ in range(int(budget)):
        g = rng.normal(size=(delta, delta)) + 1j * rng.normal(size=(delta, delta))
        q, r = np.linalg.qr(g)
        F = q * (np.diagonal(r) / np.abs(np.diagonal(r)))
        measure = _try_candidate(rep, bases, F, xi, analysis, spec, tol)
        if measure is not None:
            return GapSearchResult(status="found", F=F, measure=measure)
    return GapSearchResult(status="exhausted")
