"""Adaptive Simpson quadrature used for antiderivatives of user-defined rates.

The accept test carries a roundoff floor proportional to the panel's
integral of |f|: without it, an absolute tolerance of 1e-12 is
unreachable for integrals whose magnitude exceeds ~1e4 and the recursion
would always exhaust its depth budget.
"""

from __future__ import annotations

from typing import Callable

from .errors import QuadratureError

_EPS = 2.220446049250313e-16


def adaptive_simpson(
    f: Callable[[float], float],
    a: float,
    b: float,
    abs_tol: float = 1e-12,
    max_depth: int = 40,
) -> float:
    """Integrate ``f`` over [a, b] to ``abs_tol`` (plus a roundoff floor).

    Handles a > b by sign reversal. Raises QuadratureError when a panel
    still fails its tolerance at ``max_depth``.
    """
    if a == b:
        return 0.0
    if b < a:
        return -adaptive_simpson(f, b, a, abs_tol, max_depth)
    fa, fb = f(a), f(b)
    m = 0.5 * (a + b)
    fm = f(m)
    whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb)
    return _simpson_panel(f, a, b, fa, fm, fb, whole, abs_tol, max_depth)


def _simpson_panel(f, a, b, fa, fm, fb, s_whole, tol, depth):
    m = 0.5 * (a + b)
    lm = 0.5 * (a + m)
    rm = 0.5 * (m + b)
    flm, frm = f(lm), f(rm)
    s_left = (m - a) / 6.0 * (fa + 4.0 * flm + fm)
    s_right = (b - m) / 6.0 * (fm + 4.0 * frm + fb)
    s2 = s_left + s_right
    err = s2 - s_whole
    # Simpson estimate of the panel's integral of |f|, for the roundoff floor.
    mag = (m - a) / 6.0 * (abs(fa) + 4.0 * abs(flm) + abs(fm)) + (b - m) / 6.0 * (
        abs(fm) + 4.0 * abs(frm) + abs(fb)
    )
    if abs(err) <= 15.0 * tol or abs(err) <= 150.0 * _EPS * mag:
        return s2 + err / 15.0
    if depth <= 0:
        raise QuadratureError(
            f"quadrature did not converge on [{a!r}, {b!r}]: "
            f"panel error {abs(err):.3e} above tolerance {15.0 * tol:.3e}"
        )
    return _simpson_panel(
        f, a, m, fa, flm, fm, s_left, 0.5 * tol, depth - 1
    ) + _simpson_panel(f, m, b, fm, frm, fb, s_right, 0.5 * tol, depth - 1)
