"""Controllability function and bounded linear feedback for an integrator chain.

For a chain of dimension k with design constants a0 and d, Theta(x) is the
unique positive root of

    2 a0 Theta = (N(Theta)^{-1} x, x),

and the feedback is v(x) = -1/2 b0* N(Theta(x))^{-1} x.  Along the closed
loop Theta decays at unit rate, so Theta(x0) is the exact time to the
origin, and |v| <= d holds whenever 0 < a0 <= 2 d^2 / (N(1)^{-1} b0, b0).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .chain_gramian import GramSet, gram_theta_inv

_MAX_ITER = 200


class NonConvergence(RuntimeError):
    """Theta root iteration failed to meet the residual tolerance."""


def a0_max(gram: GramSet, d: float) -> float:
    """Largest admissible a0 for control bound d: 2 d^2 / (N(1)^{-1} b0, b0)."""
    if d <= 0:
        raise ValueError(f"control bound d must be positive, got {d}")
    return 2.0 * d * d / gram.n1_inv[gram.k - 1][gram.k - 1]


@dataclass(frozen=True)
class LinearSynth:
    """Feedback synthesis constants for one chain.

    Requires 0 < a0 <= a0_max(gram, d); theta_min is the hold band under
    which the block is reported done, root_tol the residual tolerance of
    the Theta solve.
    """

    gram: GramSet
    a0: float
    d: float
    theta_min: float = 1e-9
    root_tol: float = 1e-12

    def __post_init__(self):
        if self.a0 <= 0:
            raise ValueError(f"a0 must be positive, got {self.a0}")
        cap = a0_max(self.gram, self.d)
        if self.a0 > cap * (1 + 1e-12):
            raise ValueError(f"a0={self.a0} exceeds a0_max={cap} for d={self.d}")
        if self.theta_min <= 0 or self.root_tol <= 0:
            raise ValueError("theta_min and root_tol must be positive")


@dataclass(frozen=True)
class ThetaEval:
    """Theta(x) together with w = N(Theta)^{-1} x, v = -w_k/2 and sigma = w_k."""

    theta: float
    w: np.ndarray
    v: float
    sigma: float


def synth_for(gram: GramSet, d: float, a0: float | None = None, **kw) -> LinearSynth:
    """LinearSynth with a0 defaulting to its maximum for the given d."""
    return LinearSynth(gram=gram, a0=a0 if a0 is not None else a0_max(gram, d), d=d, **kw)


def _poly_coeffs(s: LinearSynth, x: np.ndarray) -> np.ndarray:
    # F(Theta) = 2 a0 Theta^{2k} - sum_p c_p Theta^p with
    # c_p = sum_{i+j-2=p} Ninv1[i][j] x_i x_j >= 0 collectively; descending order.
    k = s.gram.k
    quad = s.gram.n1_inv * np.outer(x, x)
    coeffs = np.zeros(2 * k + 1)
    coeffs[0] = 2.0 * s.a0
    for i in range(k):
        for j in range(k):
            p = i + j  # Theta power in the multiplied equation
            coeffs[2 * k - p] -= quad[i][j]
    return coeffs


def theta_of(s: LinearSynth, x: np.ndarray) -> ThetaEval:
    """Solve 2 a0 Theta = (N(Theta)^{-1} x, x) for the unique positive root.

    The scalar equation is multiplied by Theta^(2k-1) to give a polynomial,
    bracketed by doubling/halving from Theta=1, then solved by safeguarded
    Newton with bisection fallback.  x = 0 returns theta = 0 exactly.
    """
    x = np.asarray(x, dtype=float)
    k = s.gram.k
    if x.shape != (k,):
        raise ValueError(f"x must have shape ({k},), got {x.shape}")
    if not np.all(np.isfinite(x)):
        raise ValueError("x must be finite")
    if np.max(np.abs(x)) == 0.0:
        return ThetaEval(theta=0.0, w=np.zeros(k), v=0.0, sigma=0.0)

    coeffs = _poly_coeffs(s, x)
    if not np.any(coeffs[1:]):
        # quadratic form underflowed to zero: x is denormal-small, treat as origin
        return ThetaEval(theta=0.0, w=np.zeros(k), v=0.0, sigma=0.0)
    dcoeffs = np.polyder(coeffs)

    def f(th: float) -> float:
        return float(np.polyval(coeffs, th))

    lo, hi = 1.0, 1.0
    it = 0
    while f(hi) <= 0.0:
        hi *= 2.0
        it += 1
        if it > _MAX_ITER:
            raise NonConvergence("upper bracket for theta did not close")
    it = 0
    while f(lo) >= 0.0:
        lo *= 0.5
        it += 1
        if it > _MAX_ITER:
            raise NonConvergence("lower bracket for theta did not close")

    th = 0.5 * (lo + hi)
    for _ in range(_MAX_ITER):
        fv = f(th)
        if fv > 0.0:
            hi = th
        elif fv < 0.0:
            lo = th
        else:
            break
        dv = float(np.polyval(dcoeffs, th))
        step_ok = dv != 0.0
        if step_ok:
            cand = th - fv / dv
            step_ok = lo < cand < hi
        th_new = cand if step_ok else 0.5 * (lo + hi)
        if abs(th_new - th) <= 1e-16 * th:
            th = th_new
            break
        th = th_new

    w = gram_theta_inv(s.gram, th) @ x
    residual = abs(2.0 * s.a0 * th - float(w @ x))
    if residual > s.root_tol * max(1.0, 2.0 * s.a0 * th):
        raise NonConvergence(f"theta residual {residual:.3e} above tolerance")
    sigma = float(w[k - 1])
    return ThetaEval(theta=th, w=w, v=-0.5 * sigma, sigma=sigma)


def v_of(s: LinearSynth, x: np.ndarray) -> float:
    """Feedback value v(x); 0 below the theta_min hold band."""
    ev = theta_of(s, x)
    if ev.theta < s.theta_min:
        return 0.0
    return ev.v


def closed_loop_rhs(s: LinearSynth, x: np.ndarray) -> np.ndarray:
    """Right-hand side of the closed chain: (x_2, ..., x_k, v(x))."""
    x = np.asarray(x, dtype=float)
    out = np.empty(s.gram.k)
    out[:-1] = x[1:]
    out[-1] = v_of(s, x)
    return out
