"""Lyapunov energies, dissipation rates and the energy limit of a run.

For hypothesis index i in {1, 2, 3} the energy is

    E_i(u) = (-1)^(i+1) * integral of P(u),    P(s) = antiderivative of p,

nonincreasing along solutions in the matching regime, with instantaneous
rate (-1)^(i+1) * integral of g(u) (p(u) - lam)^2. Its limit as t -> inf
is the quantity the limit-profile predictor consumes.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import field as field_mod
from .dynamics import Termination, Trajectory
from .errors import (
    DenominatorVanishingError,
    DissipationUnavailableError,
    NotConvergedError,
)
from .field import AtomField
from .model import HypothesisClass, NonlinearityPair, default_eps_den


def _sign(i: int) -> float:
    if i not in (1, 2, 3):
        raise ValueError(f"hypothesis index must be 1, 2 or 3, got {i!r}")
    return -1.0 if i == 2 else 1.0


def lyapunov(u: AtomField, pair: NonlinearityPair, i: int) -> float:
    """Energy of the field for hypothesis index i."""
    return _sign(i) * field_mod.integral_of(u, pair.antideriv_P)


def dissipation_rate(
    u: AtomField, pair: NonlinearityPair, i: int, eps_den: float | None = None
) -> float:
    """Instantaneous energy rate; nonpositive inside the regime's region."""
    sign = _sign(i)
    gv = np.asarray(pair.g(u.values), dtype=float)
    pv = np.asarray(pair.p(u.values), dtype=float)
    num = math.fsum((u.weights * gv * pv).tolist())
    den = math.fsum((u.weights * gv).tolist())
    eps = default_eps_den(u, pair) if eps_den is None else float(eps_den)
    if den == 0.0 or abs(den) < eps:
        raise DenominatorVanishingError(den, eps)
    lam = num / den
    return sign * math.fsum((u.weights * gv * (pv - lam) ** 2).tolist())


def dissipation_constant(
    hyp: HypothesisClass, pair: NonlinearityPair, n_samples: int = 100_000
) -> float:
    """Constant C > 0 with dE/dt <= -C * integral of |du/dt|^2.

    C = -1 / min(g) over [1, b] under H1, over [a, 0] under H3 (dense
    sampling). Unavailable for H2, where g vanishes at both region
    endpoints, and for degenerate intervals (b = 1 or a = 0).
    """
    if hyp.tag == "H1":
        lo, hi = 1.0, hyp.esssup_b
    elif hyp.tag == "H3":
        lo, hi = hyp.essinf_a, 0.0
    elif hyp.tag == "H2":
        raise DissipationUnavailableError(
            "no dissipation constant under H2: g vanishes at both region endpoints"
        )
    else:
        raise DissipationUnavailableError("no hypothesis holds")
    if hi <= lo:
        raise DissipationUnavailableError(
            f"degenerate interval [{lo:g}, {hi:g}]"
        )
    grid = np.linspace(lo, hi, n_samples)
    gmin = float(np.min(np.asarray(pair.g(grid), dtype=float)))
    if gmin >= 0.0:
        raise DissipationUnavailableError(
            f"g does not drop below zero on [{lo:g}, {hi:g}]"
        )
    return -1.0 / gmin


@dataclass(frozen=True)
class EnergyRecord:
    """Pointwise energy data of a field under one hypothesis index.

    ``dissipation`` is nonpositive (up to roundoff) whenever the field
    lies inside the regime's invariant region; ``C_constant`` is None
    when no positive constant exists (H2, degenerate intervals).
    """

    hypothesis_index: int
    value: float
    dissipation: float
    C_constant: float | None


def energy_record(
    u: AtomField,
    pair: NonlinearityPair,
    hyp: HypothesisClass,
    eps_den: float | None = None,
) -> EnergyRecord:
    """Bundle energy, dissipation rate and the regime's constant for a field."""
    i = hyp.energy_index
    try:
        c = dissipation_constant(hyp, pair)
    except DissipationUnavailableError:
        c = None
    return EnergyRecord(
        hypothesis_index=i,
        value=lyapunov(u, pair, i),
        dissipation=dissipation_rate(u, pair, i, eps_den),
        C_constant=c,
    )


@dataclass(frozen=True)
class EnergyLimit:
    """Estimated energy limit with the last-decade variation as error bar."""

    value: float
    error_bar: float
    index: int


def energy_limit(tr: Trajectory) -> EnergyLimit:
    """Energy limit estimate: the final-snapshot energy of a settled run.

    The run must have terminated Stationary or be numerically at rest
    (max |rate| below 100 * stat_tol); otherwise NotConvergedError. The
    error bar is the energy variation over the trailing tenth of the
    recorded time span.
    """
    near_rest = tr.final_max_rhs < 100.0 * tr.config.stat_tol
    if tr.termination != Termination.STATIONARY and not near_rest:
        raise NotConvergedError(
            f"trajectory is not near stationary (termination {tr.termination.value}, "
            f"final max |rate| {tr.final_max_rhs:.3e})"
        )
    t_final = float(tr.times[-1])
    window = tr.energy_series[tr.times >= 0.9 * t_final]
    error_bar = float(np.max(window) - np.min(window)) if window.size else 0.0
    return EnergyLimit(
        value=float(tr.energy_series[-1]),
        error_bar=error_bar,
        index=tr.energy_index,
    )


__all__ = [
    "lyapunov",
    "dissipation_rate",
    "dissipation_constant",
    "EnergyRecord",
    "energy_record",
    "EnergyLimit",
    "energy_limit",
]
