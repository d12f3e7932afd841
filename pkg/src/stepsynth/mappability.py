"""Numeric probe for reducibility to a block chain-of-integrators form.

Builds the bracket columns q_{k m + j} = ad_a^k b_j at sampled states,
selects the columns that raise numeric rank at every sample (left to
right, with deletion of (j, k) propagating to (j, k+s)), and checks the
first-integral gradient conditions that the block transform must satisfy.
Jacobians are central finite differences; rank decisions use an SVD
threshold relative to the largest singular value.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

AD_CAP = 3
DEFAULT_SVD_TOL = 1e-6
_EPS_CBRT = float(np.cbrt(np.finfo(float).eps))


class CapExceeded(RuntimeError):
    """Requested bracket order above the finite-difference noise cap."""


class RegularityViolation(RuntimeError):
    """Column rank contributions differ between samples."""


class RankDeficient(RuntimeError):
    """Kept columns span less than the full state dimension at the samples."""


@dataclass(frozen=True)
class VectorField:
    """A state-dimension and a callable x -> R^dim."""

    dim: int
    fn: Callable[[np.ndarray], np.ndarray]

    def __call__(self, x: np.ndarray) -> np.ndarray:
        return np.asarray(self.fn(np.asarray(x, dtype=float)), dtype=float)


def default_step(x: np.ndarray) -> float:
    """Central-difference step: cbrt(eps) * max(1, |x|)."""
    return _EPS_CBRT * max(1.0, float(np.linalg.norm(x)))


def _jacobian(f: Callable, x: np.ndarray, h: float) -> np.ndarray:
    n = len(x)
    fx0 = np.asarray(f(x), dtype=float)
    jac = np.empty((len(fx0), n))
    for j in range(n):
        e = np.zeros(n)
        e[j] = h
        jac[:, j] = (np.asarray(f(x + e), dtype=float) - np.asarray(f(x - e), dtype=float)) / (2.0 * h)
    return jac


def lie_bracket(a: Callable, b: Callable, x: np.ndarray, h: float | None = None) -> np.ndarray:
    """[a, b](x) = Jb(x) a(x) - Ja(x) b(x) with central-difference Jacobians."""
    x = np.asarray(x, dtype=float)
    if h is None:
        h = default_step(x)
    return _jacobian(b, x, h) @ np.asarray(a(x), dtype=float) - _jacobian(a, x, h) @ np.asarray(b(x), dtype=float)


def ad_pow(a: Callable, b: Callable, k: int, x: np.ndarray, h: float | None = None) -> np.ndarray:
    """ad_a^k b at x; k = 0 returns b(x).  Raises CapExceeded for k > 3."""
    if k < 0:
        raise ValueError(f"bracket order must be >= 0, got {k}")
    if k > AD_CAP:
        raise CapExceeded(f"bracket order {k} exceeds the cap {AD_CAP}")
    if k == 0:
        return np.asarray(b(np.asarray(x, dtype=float)), dtype=float)
    field = b
    for _ in range(k - 1):
        field = (lambda g: (lambda y: lie_bracket(a, g, y, h)))(field)
    return lie_bracket(a, field, x, h)


def halton_samples(box: Sequence[tuple], count: int = 32) -> np.ndarray:
    """Deterministic low-discrepancy samples in the box [(lo, hi), ...]."""
    from scipy.stats import qmc

    box = list(box)
    sampler = qmc.Halton(d=len(box), scramble=False)
    pts = sampler.random(count)
    lo = np.array([b[0] for b in box], dtype=float)
    hi = np.array([b[1] for b in box], dtype=float)
    if np.any(hi <= lo):
        raise ValueError("box bounds must satisfy lo < hi in every coordinate")
    return lo + pts * (hi - lo)


@dataclass(frozen=True)
class ProbeReport:
    """Outcome of the column-selection scan.

    kept: (field j, order k) pairs that raised rank at every sample,
    1-based fields, field-major order.  indices: per-field kept counts
    (n_1, ..., n_m).  rank_history: rank after each scanned column (shared
    across samples by the regularity check).
    """

    kept: tuple
    indices: tuple
    rank_history: tuple
    samples: np.ndarray
    h: float | None
    svd_tol: float


def _raises_rank(basis: list, col: np.ndarray, svd_tol: float) -> bool:
    mat = np.column_stack(basis + [col]) if basis else col.reshape(-1, 1)
    sv = np.linalg.svd(mat, compute_uv=False)
    rank = int(np.sum(sv > svd_tol * sv[0])) if sv[0] > 0 else 0
    return rank == len(basis) + 1


def select_columns(
    a: Callable,
    bs: Sequence[Callable],
    samples: np.ndarray,
    h: float | None = None,
    svd_tol: float = DEFAULT_SVD_TOL,
) -> ProbeReport:
    """Scan columns b_j, ad_a b_j, ... and keep those independent at every sample.

    Columns are visited in order q_{k m + j}; a deleted (j, k) deletes all
    (j, k+s).  A column must raise the numeric rank at either every sample
    or none: a mixed outcome raises RegularityViolation.  If the kept
    columns span less than the state dimension, RankDeficient is raised.
    """
    samples = np.atleast_2d(np.asarray(samples, dtype=float))
    n = samples.shape[1]
    m = len(bs)
    if m == 0:
        raise ValueError("need at least one control field")

    bases: list[list] = [[] for _ in samples]
    current: list[Callable | None] = list(bs)  # ad_a^k b_j as callables, None once deleted
    kept: list[tuple] = []
    counts = [0] * m
    rank_hist: list[int] = []
    rank = 0

    k = -1
    while rank < n:
        k += 1
        if all(fld is None for fld in current):
            break
        if k > AD_CAP:
            raise CapExceeded(
                f"rank {rank} < n = {n} but the next columns need bracket order {k} > {AD_CAP}"
            )
        for j in range(m):
            if rank == n:
                break
            fld = current[j]
            if fld is None:
                continue
            votes = [
                _raises_rank(bases[s_idx], np.asarray(fld(x), dtype=float), svd_tol)
                for s_idx, x in enumerate(samples)
            ]
            if all(votes):
                for s_idx, x in enumerate(samples):
                    bases[s_idx].append(np.asarray(fld(x), dtype=float))
                kept.append((j + 1, k))
                counts[j] += 1
                rank += 1
            elif not any(votes):
                current[j] = None  # deletion propagates to higher orders
            else:
                raise RegularityViolation(
                    f"column (field {j + 1}, order {k}) raises rank at "
                    f"{sum(votes)}/{len(votes)} samples"
                )
            rank_hist.append(rank)
        if rank < n:
            # lift the surviving fields one bracket order
            for j in range(m):
                fld = current[j]
                if fld is not None:
                    current[j] = (lambda g: (lambda y: lie_bracket(a, g, y, h)))(fld)

    if rank < n:
        raise RankDeficient(f"kept columns span rank {rank} < n = {n}")

    kept.sort()
    return ProbeReport(
        kept=tuple(kept),
        indices=tuple(counts),
        rank_history=tuple(rank_hist),
        samples=samples,
        h=h,
        svd_tol=svd_tol,
    )


def verify_phi_conditions(
    phi_grads: Sequence[Callable],
    report: ProbeReport,
    a: Callable,
    bs: Sequence[Callable],
    samples: np.ndarray | None = None,
    h: float | None = None,
    tol: float = 1e-5,
) -> dict:
    """Check the transform-gradient conditions at the probe samples.

    For block i with index n_i:  (phi_i)_x ad_a^k b_j = 0 for all j and
    k <= min(n_i - 2, n_j - 1), and (phi_i)_x ad_a^(n_i - 1) b_i != 0.
    Returns {(kind, i, j, k): bool} with kind 'orthogonal' or 'nonvanish'
    (j, k = 0 for the latter).
    """
    samples = report.samples if samples is None else np.atleast_2d(samples)
    idx = report.indices
    out: dict = {}
    for i, grad_i in enumerate(phi_grads, start=1):
        n_i = idx[i - 1]
        for j in range(1, len(bs) + 1):
            n_j = idx[j - 1]
            for k in range(0, min(n_i - 2, n_j - 1) + 1):
                ok = True
                for x in samples:
                    g = np.asarray(grad_i(x), dtype=float)
                    col = ad_pow(a, bs[j - 1], k, x, h)
                    scale = max(1.0, float(np.linalg.norm(g)) * float(np.linalg.norm(col)))
                    if abs(float(g @ col)) > tol * scale:
                        ok = False
                        break
                out[("orthogonal", i, j, k)] = ok
        ok = True
        for x in samples:
            g = np.asarray(grad_i(x), dtype=float)
            col = ad_pow(a, bs[i - 1], n_i - 1, x, h)
            if abs(float(g @ col)) <= report.svd_tol:
                ok = False
                break
        out[("nonvanish", i, 0, 0)] = ok
    return out
