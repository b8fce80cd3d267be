"""Weighted value-atom fields, distribution functions, decreasing rearrangement.

A field on a domain of measure |Omega| is stored as atoms (value, weight):
the sets of points currently sharing one value. Because the dynamics move
every point with the same initial value identically, this representation
is lossless for every quantity the toolkit computes (integrals, L1
distances along one orbit, rearrangements, energies) and the spatial
geometry of the domain never enters.

All reductions use exact summation (math.fsum), so integrals and
distances are independent of atom order.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Iterable, Sequence

import numpy as np

from .errors import DomainMismatchError, FieldError, PairingError

# ingestion renormalizes weight-sum mismatches up to this relative size
_RENORM_GATE = 1e-9
# ...and the canonical invariant is enforced at this one
_WEIGHT_TOL = 1e-12


@dataclass(frozen=True)
class AtomField:
    """Immutable weighted-atom field.

    ``values[i]`` is the common value of a set of measure ``weights[i]``.
    Weights are positive and sum to ``domain_measure``. Values need not be
    sorted: integration keeps atoms in their initial order, and
    ``normalize`` produces the canonical (strictly decreasing, merged)
    form.
    """

    values: np.ndarray
    weights: np.ndarray
    domain_measure: float

    def __init__(self, values, weights, domain_measure: float):
        values = np.asarray(values, dtype=float).copy()
        weights = np.asarray(weights, dtype=float).copy()
        domain_measure = float(domain_measure)
        if values.ndim != 1 or values.size == 0:
            raise FieldError("field needs a nonempty 1-d list of atom values")
        if weights.shape != values.shape:
            raise FieldError("values and weights must have identical shape")
        if domain_measure <= 0.0:
            raise FieldError(f"domain measure must be positive, got {domain_measure!r}")
        if not np.all(np.isfinite(values)):
            raise FieldError("atom values must be finite")
        if not np.all(weights > 0.0):
            raise FieldError("atom weights must be positive")
        total = math.fsum(weights.tolist())
        rel = abs(total - domain_measure) / domain_measure
        if rel > _RENORM_GATE:
            raise FieldError(
                f"weights sum to {total!r}, domain measure is {domain_measure!r} "
                f"(relative mismatch {rel:.3e} beyond {_RENORM_GATE:g})"
            )
        if rel > _WEIGHT_TOL:
            weights = weights * (domain_measure / total)
        values.flags.writeable = False
        weights.flags.writeable = False
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "weights", weights)
        object.__setattr__(self, "domain_measure", domain_measure)

    @property
    def atoms(self) -> list[tuple[float, float]]:
        return list(zip(self.values.tolist(), self.weights.tolist()))

    def __len__(self) -> int:
        return self.values.size

    def with_values(self, values: np.ndarray) -> "AtomField":
        """Same weights and domain, new values (the integrator's step output)."""
        return AtomField(values, self.weights, self.domain_measure)

    def normalize(self) -> "AtomField":
        """Canonical form: values strictly decreasing, equal values merged."""
        groups = _group_by_value(self.values, self.weights)
        vals = [v for v, _ in groups]
        wts = [w for _, w in groups]
        return AtomField(vals, wts, self.domain_measure)

    @property
    def is_canonical(self) -> bool:
        return bool(np.all(np.diff(self.values) < 0.0))


@dataclass(frozen=True)
class StepProfile:
    """Nonincreasing step function on (0, |Omega|).

    ``breakpoints`` runs 0 = y_0 < ... < y_k = |Omega|; ``plateau_values``
    holds the strictly decreasing value on each interval.
    """

    breakpoints: np.ndarray
    plateau_values: np.ndarray

    def __init__(self, breakpoints, plateau_values):
        breakpoints = np.asarray(breakpoints, dtype=float).copy()
        plateau_values = np.asarray(plateau_values, dtype=float).copy()
        if breakpoints.size != plateau_values.size + 1:
            raise FieldError("profile needs one more breakpoint than plateau")
        if breakpoints[0] != 0.0:
            raise FieldError("profile breakpoints must start at 0")
        if not np.all(np.diff(breakpoints) > 0.0):
            raise FieldError("profile breakpoints must be strictly increasing")
        if not np.all(np.diff(plateau_values) < 0.0):
            raise FieldError("plateau values must be strictly decreasing")
        breakpoints.flags.writeable = False
        plateau_values.flags.writeable = False
        object.__setattr__(self, "breakpoints", breakpoints)
        object.__setattr__(self, "plateau_values", plateau_values)

    @property
    def domain_measure(self) -> float:
        return float(self.breakpoints[-1])

    def value_at(self, y: float) -> float:
        """Value at y in (0, |Omega|); right-continuous at breakpoints."""
        idx = int(np.searchsorted(self.breakpoints, y, side="right")) - 1
        idx = min(max(idx, 0), self.plateau_values.size - 1)
        return float(self.plateau_values[idx])

    def to_field(self) -> AtomField:
        """Atom field with one atom per plateau (round-trip of rearrange)."""
        widths = np.diff(self.breakpoints)
        return AtomField(self.plateau_values, widths, self.domain_measure)

    def staircase(self) -> list[tuple[float, float]]:
        """(y, value) plot points with each breakpoint repeated."""
        pts: list[tuple[float, float]] = []
        for i, v in enumerate(self.plateau_values.tolist()):
            pts.append((float(self.breakpoints[i]), v))
            pts.append((float(self.breakpoints[i + 1]), v))
        return pts


def _group_by_value(values: np.ndarray, weights: np.ndarray) -> list[tuple[float, float]]:
    """(value, merged weight) pairs sorted by value descending; exact merge."""
    order = np.argsort(values, kind="stable")[::-1]
    groups: list[tuple[float, float]] = []
    members: list[float] = []
    current = None
    for idx in order:
        v = float(values[idx])
        if current is None or v == current:
            members.append(float(weights[idx]))
            current = v
        else:
            groups.append((current, math.fsum(members)))
            current = v
            members = [float(weights[idx])]
    groups.append((current, math.fsum(members)))
    return groups


# ------------------------------------------------------------------ builders

def from_samples(values: Sequence[float] | Iterable[float], domain_measure: float) -> AtomField:
    """Equal-weight atoms from grid samples, merged into canonical form."""
    values = list(values)
    if not values:
        raise FieldError("cannot build a field from an empty sample list")
    n = len(values)
    w = float(domain_measure) / n
    return AtomField(values, [w] * n, domain_measure).normalize()


# ---------------------------------------------------------------- integrals

def mass(u: AtomField) -> float:
    """Integral of the field: exact weighted sum of atom values."""
    return math.fsum((u.weights * u.values).tolist())


def integral_of(u: AtomField, h: Callable) -> float:
    """Exact integral of h(u) over the domain: sum of m_i h(s_i)."""
    try:
        hv = np.asarray(h(u.values), dtype=float)
        if hv.shape != u.values.shape:
            raise TypeError
    except (TypeError, ValueError):
        hv = np.array([float(h(float(s))) for s in u.values])
    return math.fsum((u.weights * hv).tolist())


def distribution(u: AtomField, s: float) -> float:
    """Measure of the superlevel set {w > s}; nonincreasing, right-continuous."""
    groups = _group_by_value(u.values, u.weights)
    return math.fsum(w for v, w in groups if v > s)


# ------------------------------------------------------------- rearrangement

def rearrange(u: AtomField) -> StepProfile:
    """Decreasing rearrangement of the field.

    Sorts atoms by value descending and lays them out on (0, |Omega|);
    equal values merge into one plateau. The result is equimeasurable
    with the input (identical distribution functions).
    """
    groups = _group_by_value(u.values, u.weights)
    values = [v for v, _ in groups]
    bps = [0.0]
    acc: list[float] = []
    for _, w in groups[:-1]:
        acc.append(w)
        bps.append(math.fsum(acc))
    bps.append(u.domain_measure)
    return StepProfile(bps, values)


# ----------------------------------------------------------------- distances

def l1_distance(u: AtomField, v: AtomField) -> float:
    """L1 distance between co-evolved fields (same weights, same atom order)."""
    if len(u) != len(v) or not np.array_equal(u.weights, v.weights):
        raise PairingError(
            "fields are not co-evolved: weight vectors differ in length, "
            "order or values"
        )
    return math.fsum((u.weights * np.abs(u.values - v.values)).tolist())


def profile_l1_distance(a: StepProfile, b: StepProfile) -> float:
    """Exact L1 distance between two step profiles via common refinement."""
    da, db = a.domain_measure, b.domain_measure
    if abs(da - db) > _WEIGHT_TOL * max(da, db):
        raise DomainMismatchError(
            f"profiles live on domains of measure {da!r} and {db!r}"
        )
    cuts = np.unique(np.concatenate([a.breakpoints, b.breakpoints]))
    terms = []
    for lo, hi in zip(cuts[:-1], cuts[1:]):
        mid = 0.5 * (lo + hi)
        terms.append((hi - lo) * abs(a.value_at(mid) - b.value_at(mid)))
    return math.fsum(terms)


# -------------------------------------------------------------- serialization

def staircase_lines(profile: StepProfile) -> str:
    """Two-column staircase text block (gnuplot-ready)."""
    rows = [f"{y:.17g} {v:.17g}" for y, v in profile.staircase()]
    return "\n".join(rows) + "\n"


__all__ = [
    "AtomField",
    "StepProfile",
    "from_samples",
    "mass",
    "integral_of",
    "distribution",
    "rearrange",
    "l1_distance",
    "profile_l1_distance",
    "staircase_lines",
]
