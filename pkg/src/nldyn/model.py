"""Nonlinearities, the nonlocal rate, hypothesis classification, Lipschitz data.

The dynamics are driven by two scalar functions: a rate factor g with
g(0) = g(1) = 0, positive on (0, 1) and negative outside [0, 1], and a
strictly increasing function p. The nonlocal multiplier

    lam(u) = integral(g(u) p(u)) / integral(g(u))

turns the pointwise rate g(u)p(u) into the mass-conserving rate

    F(u) = g(u) p(u) - g(u) lam(u).

On a weighted-atom field both integrals are exact finite sums.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .errors import (
    BallTooLargeError,
    DenominatorVanishingError,
    ModelValidationError,
    UnknownModelError,
)
from .field import AtomField
from .quad import adaptive_simpson

ScalarFn = Callable[[float], float]


@dataclass(frozen=True)
class NonlinearityPair:
    """The model functions g, p, their derivatives and the antiderivative of p.

    All callables accept scalars and numpy arrays. ``antideriv_P`` is
    normalized to vanish at 0; ``closed_form_P`` records whether it is
    analytic or quadrature-backed.
    """

    g: ScalarFn
    g_prime: ScalarFn
    p: ScalarFn
    p_prime: ScalarFn
    antideriv_P: ScalarFn
    closed_form_P: bool
    label: str = ""


@dataclass(frozen=True)
class HypothesisClass:
    """Which initial-data regime holds, with the quantities that decide it.

    ``tag`` is 'H1', 'H2', 'H3' or None. ``essinf_a``/``esssup_b`` are the
    extreme atom values; ``integral_g_u0`` is the exact weighted sum of g
    over the initial field.
    """

    tag: str | None
    essinf_a: float
    esssup_b: float
    integral_g_u0: float

    @property
    def energy_index(self) -> int:
        """Lyapunov index for this regime (1 when no hypothesis holds)."""
        return {"H1": 1, "H2": 2, "H3": 3}.get(self.tag, 1)


@dataclass(frozen=True)
class LipschitzEstimate:
    """Constants of the local Lipschitz bound for the nonlocal rate."""

    K: float
    alpha: float
    L: float
    ball_radius: float


# ----------------------------------------------------------------- builtins

def _logistic_identity() -> NonlinearityPair:
    return NonlinearityPair(
        g=lambda u: u * (1.0 - u),
        g_prime=lambda u: 1.0 - 2.0 * u,
        p=lambda u: u * 1.0,
        p_prime=lambda u: 0.0 * u + 1.0,
        antideriv_P=lambda s: 0.5 * s * s,
        closed_form_P=True,
        label="logistic-identity",
    )


def _logistic_cubic() -> NonlinearityPair:
    return NonlinearityPair(
        g=lambda u: u * (1.0 - u),
        g_prime=lambda u: 1.0 - 2.0 * u,
        p=lambda u: u ** 3 + u,
        p_prime=lambda u: 3.0 * u * u + 1.0,
        antideriv_P=lambda s: 0.25 * s ** 4 + 0.5 * s * s,
        closed_form_P=True,
        label="logistic-cubic",
    )


_CATALOGUE: dict[str, Callable[[], NonlinearityPair]] = {
    "logistic-identity": _logistic_identity,
    "logistic-cubic": _logistic_cubic,
}


def builtin_model(name: str) -> NonlinearityPair:
    """Return a catalogued nonlinearity pair (validated on construction)."""
    try:
        factory = _CATALOGUE[name]
    except KeyError:
        raise UnknownModelError(name, tuple(sorted(_CATALOGUE))) from None
    pair = factory()
    validate_pair(pair)
    return pair


def antiderivative_value(pair: NonlinearityPair, s: float) -> float:
    """Antiderivative of p at s, vanishing at 0.

    Closed-form when the pair carries one, adaptive Simpson on [0, s]
    otherwise (that is what ``antideriv_P`` wraps for built models).
    """
    return float(pair.antideriv_P(float(s)))


# --------------------------------------------------------------- validation

def validate_pair(
    pair: NonlinearityPair,
    s_range: tuple[float, float] = (-2.0, 2.0),
    n: int = 10_000,
) -> None:
    """Sample-check the structural requirements on g and p.

    Checks g(0) = g(1) = 0, the sign pattern of g, strict monotonicity of
    p, and that the stored antiderivative matches p by finite differences.
    Raises ModelValidationError with a witness point on the first failure.
    """
    lo, hi = float(s_range[0]), float(s_range[1])
    if not lo < 0.0 < 1.0 < hi:
        raise ValueError("working range must contain [0, 1] strictly")

    for point in (0.0, 1.0):
        value = float(pair.g(point))
        if abs(value) > 1e-12:
            raise ModelValidationError(
                f"g({point:g}) = 0", point, f"got {value!r}"
            )

    def _grid(a: float, b: float) -> np.ndarray:
        # midpoint-style grid: stays strictly inside the open interval
        k = np.arange(n, dtype=float)
        return a + (b - a) * (k + 0.5) / n

    inner = _grid(0.0, 1.0)
    gv = np.asarray(pair.g(inner), dtype=float)
    bad = np.nonzero(~(gv > 0.0))[0]
    if bad.size:
        raise ModelValidationError(
            "g > 0 on (0, 1)", float(inner[bad[0]]), f"g = {gv[bad[0]]!r}"
        )
    for a, b in ((lo, 0.0), (1.0, hi)):
        grid = _grid(a, b)
        gv = np.asarray(pair.g(grid), dtype=float)
        bad = np.nonzero(~(gv < 0.0))[0]
        if bad.size:
            raise ModelValidationError(
                f"g < 0 on ({a:g}, {b:g})", float(grid[bad[0]]), f"g = {gv[bad[0]]!r}"
            )

    full = np.linspace(lo, hi, n)
    pv = np.asarray(pair.p_prime(full), dtype=float)
    bad = np.nonzero(~(pv > 0.0))[0]
    if bad.size:
        raise ModelValidationError(
            "p' > 0 on the working range", float(full[bad[0]]), f"p' = {pv[bad[0]]!r}"
        )

    p0 = float(pair.antideriv_P(0.0))
    if abs(p0) > 1e-12:
        raise ModelValidationError("antiderivative vanishes at 0", 0.0, f"got {p0!r}")
    h = 1e-6
    for s in np.linspace(lo + 2 * h, hi - 2 * h, 17):
        s = float(s)
        fd = (float(pair.antideriv_P(s + h)) - float(pair.antideriv_P(s - h))) / (2 * h)
        if abs(fd - float(pair.p(s))) > 1e-8:
            raise ModelValidationError(
                "d(antiderivative)/ds = p", s, f"fd {fd!r} vs p {float(pair.p(s))!r}"
            )


# ----------------------------------------------------------- classification

def classify_hypothesis(u0: AtomField, pair: NonlinearityPair) -> HypothesisClass:
    """Decide which initial-data regime the field satisfies (None if neither).

    H1: all values >= 1 and some value > 1. H2: all values in [0, 1] with
    a nonzero g-integral. H3: all values <= 0 and some value < 0.
    """
    a = float(np.min(u0.values))
    b = float(np.max(u0.values))
    integral_g = math.fsum(
        (u0.weights * np.asarray(pair.g(u0.values), dtype=float)).tolist()
    )
    tag = None
    if a >= 1.0 and b > 1.0:
        tag = "H1"
    elif a >= 0.0 and b <= 1.0 and integral_g != 0.0:
        tag = "H2"
    elif b <= 0.0 and a < 0.0:
        tag = "H3"
    return HypothesisClass(tag=tag, essinf_a=a, esssup_b=b, integral_g_u0=integral_g)


# ------------------------------------------------------- rate and multiplier

def default_eps_den(u: AtomField, pair: NonlinearityPair) -> float:
    """Scale-aware guard threshold: 1e-10 * |Omega| * max |g| over the field.

    Shrinks together with g as all atoms approach roots of g, so the
    guard only fires when the integral is small relative to its terms.
    """
    gmax = float(np.max(np.abs(np.asarray(pair.g(u.values), dtype=float))))
    return 1e-10 * u.domain_measure * gmax


def _g_sums(values: np.ndarray, weights: np.ndarray, pair: NonlinearityPair):
    gv = np.asarray(pair.g(values), dtype=float)
    pv = np.asarray(pair.p(values), dtype=float)
    num = math.fsum((weights * gv * pv).tolist())
    den = math.fsum((weights * gv).tolist())
    return gv, pv, num, den


def lambda_of(u: AtomField, pair: NonlinearityPair, eps_den: float | None = None) -> float:
    """Nonlocal multiplier of the field: g-weighted average of p.

    Exact quadrature for step functions. Raises DenominatorVanishingError
    when |sum of m*g| falls below ``eps_den`` (scale-aware default).
    """
    _, _, num, den = _g_sums(u.values, u.weights, pair)
    eps = default_eps_den(u, pair) if eps_den is None else float(eps_den)
    if den == 0.0 or abs(den) < eps:
        raise DenominatorVanishingError(den, eps)
    return num / den


def rhs(u: AtomField, pair: NonlinearityPair, eps_den: float | None = None) -> np.ndarray:
    """Per-atom rates of the mass-conserving dynamics.

    r_i = g(s_i) p(s_i) - g(s_i) * lam. The weighted rate sum vanishes
    identically, which is the discrete mass-conservation identity.
    """
    gv, pv, num, den = _g_sums(u.values, u.weights, pair)
    eps = default_eps_den(u, pair) if eps_den is None else float(eps_den)
    if den == 0.0 or abs(den) < eps:
        raise DenominatorVanishingError(den, eps)
    lam = num / den
    return gv * pv - gv * lam


def lipschitz_bound(
    u: AtomField,
    pair: NonlinearityPair,
    ball_radius: float,
    n_samples: int = 100_000,
) -> LipschitzEstimate:
    """Local Lipschitz constant of the nonlocal rate on a sup-norm ball.

    K is the dense-grid supremum of |f|, |g|, |f'|, |g'| (f = g*p) on
    [-cbar, cbar] with cbar = sup|u| + ball_radius. The g-integral lower
    bound alpha is estimated as |integral g(u)| - K * ball_radius * |Omega|;
    a non-positive estimate raises BallTooLargeError. The bound is

        L = K + 3 K^3 |Omega|^2 / alpha^2.
    """
    cbar = float(np.max(np.abs(u.values))) + float(ball_radius)
    grid = np.linspace(-cbar, cbar, n_samples)
    gv = np.asarray(pair.g(grid), dtype=float)
    pv = np.asarray(pair.p(grid), dtype=float)
    gpv = np.asarray(pair.g_prime(grid), dtype=float)
    ppv = np.asarray(pair.p_prime(grid), dtype=float)
    fv = gv * pv
    fpv = gpv * pv + gv * ppv
    K = float(
        max(
            np.max(np.abs(fv)),
            np.max(np.abs(gv)),
            np.max(np.abs(fpv)),
            np.max(np.abs(gpv)),
        )
    )
    integral_g = math.fsum(
        (u.weights * np.asarray(pair.g(u.values), dtype=float)).tolist()
    )
    omega = u.domain_measure
    alpha = abs(integral_g) - K * float(ball_radius) * omega
    if alpha <= 0.0:
        raise BallTooLargeError(
            f"no positive g-integral bound on the ball: |integral g| = "
            f"{abs(integral_g):.6e}, K * radius * |Omega| = {K * ball_radius * omega:.6e}"
        )
    L = K + 3.0 * K**3 * omega**2 / alpha**2
    return LipschitzEstimate(K=K, alpha=alpha, L=L, ball_radius=float(ball_radius))


__all__ = [
    "NonlinearityPair",
    "HypothesisClass",
    "LipschitzEstimate",
    "builtin_model",
    "antiderivative_value",
    "validate_pair",
    "classify_hypothesis",
    "default_eps_den",
    "lambda_of",
    "rhs",
    "lipschitz_bound",
    "adaptive_simpson",
]
