"""Real roots of real cubics.

Trigonometric form in the three-real-root regime, Cardano otherwise, and a
couple of Newton polish steps on the original coefficients either way.
Degenerate leading coefficients fall back to the quadratic/linear cases.
"""

from __future__ import annotations

import math

_TWO_PI_3 = 2.0943951023931953


def real_roots(c3: float, c2: float, c1: float, c0: float) -> tuple[float, ...]:
    """All real roots of c3 u^3 + c2 u^2 + c1 u + c0, ascending.

    A double root is reported twice, a triple root three times; quadratic
    and linear degenerations are handled when leading coefficients vanish.
    """
    if c3 == 0.0:
        if c2 == 0.0:
            if c1 == 0.0:
                raise ValueError("degenerate polynomial: all leading coefficients zero")
            return (-c0 / c1,)
        disc = c1 * c1 - 4.0 * c2 * c0
        if disc < 0.0:
            return ()
        sq = math.sqrt(disc)
        r1 = (-c1 - sq) / (2.0 * c2)
        r2 = (-c1 + sq) / (2.0 * c2)
        return tuple(sorted((r1, r2)))

    # depressed form t^3 + p t + q with u = t - c2/(3 c3)
    shift = c2 / (3.0 * c3)
    p = c1 / c3 - shift * shift * 3.0
    q = 2.0 * shift**3 - shift * c1 / c3 + c0 / c3
    disc = -4.0 * p**3 - 27.0 * q * q

    if disc >= 0.0 and p < 0.0:
        m = 2.0 * math.sqrt(-p / 3.0)
        arg = 3.0 * q / (p * m)
        arg = max(-1.0, min(1.0, arg))
        phi = math.acos(arg) / 3.0
        ts = [m * math.cos(phi - _TWO_PI_3 * n) for n in range(3)]
    elif p == 0.0 and q == 0.0:
        ts = [0.0, 0.0, 0.0]
    else:
        s = math.sqrt(max(0.0, q * q / 4.0 + p**3 / 27.0))
        ts = [math.copysign(abs(-q / 2.0 + s) ** (1.0 / 3.0), -q / 2.0 + s)
              + math.copysign(abs(-q / 2.0 - s) ** (1.0 / 3.0), -q / 2.0 - s)]

    roots = []
    for t in ts:
        u = t - shift
        for _ in range(2):
            f = ((c3 * u + c2) * u + c1) * u + c0
            fp = (3.0 * c3 * u + 2.0 * c2) * u + c1
            if fp == 0.0:
                break
            step = f / fp
            if not math.isfinite(step) or abs(step) > 0.5 * (1.0 + abs(u)):
                break
            u -= step
        roots.append(u)
    return tuple(sorted(roots))


def extreme_root(c3: float, c2: float, c1: float, c0: float, sign: int) -> float:
    """Largest (sign=+1) or smallest (sign=-1) real root; raises if none."""
    roots = real_roots(c3, c2, c1, c0)
    if not roots:
        raise ValueError("cubic has no real roots")
    return roots[-1] if sign > 0 else roots[0]
