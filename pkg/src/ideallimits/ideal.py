"""Truncated sets of naturals, weighted densities and the set algebra on them.

A :class:`TruncatedSet` is a finite stand-in for an infinite subset of the
positive integers: its members live in ``1..horizon`` and its canonical
enumeration is the sorted member array. Asymptotic notions (upper densities,
ideal membership) are estimated from weighted partial-sum ratios along a
horizon schedule and reported with a three-valued verdict.
"""

from __future__ import annotations

import enum
import math
import os
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

__all__ = [
    "TruncatedSet",
    "WeightFunction",
    "IdealSpec",
    "Verdict",
    "DensityEstimate",
    "TailMassReport",
    "Dominance",
    "StretchReport",
    "geometric_schedule",
    "membership_verdict",
    "weighted_upper_density",
    "upper_alpha_density",
    "summable_tail",
    "compose",
    "scale",
    "dominates",
    "stretchability_check",
    "parse_set_descriptor",
]

DEFAULT_SCHEDULE_POINTS = 20


class Verdict(str, enum.Enum):
    IN = "in"
    OUT = "out"
    INCONCLUSIVE = "inconclusive"


def membership_verdict(value: float, in_threshold: float = 0.01, out_threshold: float = 0.05) -> Verdict:
    """Graded ideal membership from a size estimate in ``[0, 1]``."""
    if not 0 <= in_threshold < out_threshold:
        raise ValueError("need 0 <= in_threshold < out_threshold")
    if value <= in_threshold:
        return Verdict.IN
    if value >= out_threshold:
        return Verdict.OUT
    return Verdict.INCONCLUSIVE


@dataclass(frozen=True, eq=False)
class TruncatedSet:
    """Subset of ``{1, ..., horizon}`` with its canonical enumeration.

    ``dropped`` counts elements lost to truncation when the set was produced
    by :func:`compose` or :func:`scale`; it does not take part in equality.
    """

    horizon: int
    members: np.ndarray
    dropped: int = 0

    def __post_init__(self):
        horizon = int(self.horizon)
        if horizon < 1:
            raise ValueError(f"horizon must be positive, got {self.horizon}")
        members = np.unique(np.asarray(self.members, dtype=np.int64))
        if members.size and (members[0] < 1 or members[-1] > horizon):
            raise ValueError(f"members must lie in [1, {horizon}]")
        members.setflags(write=False)
        object.__setattr__(self, "horizon", horizon)
        object.__setattr__(self, "members", members)

    @classmethod
    def from_indicator(cls, indicator, horizon: int | None = None) -> "TruncatedSet":
        """From a boolean array where ``indicator[n]`` flags ``n`` (entry 0 ignored)."""
        indicator = np.asarray(indicator, dtype=bool)
        if horizon is None:
            horizon = indicator.size - 1
        return cls(horizon, np.flatnonzero(indicator[1 : horizon + 1]) + 1)

    @classmethod
    def full(cls, horizon: int) -> "TruncatedSet":
        return cls(horizon, np.arange(1, horizon + 1))

    @classmethod
    def empty(cls, horizon: int) -> "TruncatedSet":
        return cls(horizon, np.empty(0, dtype=np.int64))

    def indicator(self) -> np.ndarray:
        out = np.zeros(self.horizon + 1, dtype=bool)
        out[self.members] = True
        return out

    def enumerate(self, n: int) -> int:
        """The n-th element ``a_n`` (1-based)."""
        if not 1 <= n <= self.members.size:
            raise IndexError(f"set has {self.members.size} elements, asked for a_{n}")
        return int(self.members[n - 1])

    def truncate(self, horizon: int) -> "TruncatedSet":
        return TruncatedSet(horizon, self.members[self.members <= horizon])

    def __len__(self) -> int:
        return int(self.members.size)

    def __iter__(self):
        return (int(m) for m in self.members)

    def __contains__(self, n) -> bool:
        i = np.searchsorted(self.members, n)
        return bool(i < self.members.size and self.members[i] == n)

    def __eq__(self, other):
        if not isinstance(other, TruncatedSet):
            return NotImplemented
        return self.horizon == other.horizon and np.array_equal(self.members, other.members)

    def __hash__(self):
        return hash((self.horizon, self.members.tobytes()))

    def __or__(self, other: "TruncatedSet") -> "TruncatedSet":
        return TruncatedSet(max(self.horizon, other.horizon), np.union1d(self.members, other.members))

    def __and__(self, other: "TruncatedSet") -> "TruncatedSet":
        return TruncatedSet(min(self.horizon, other.horizon), np.intersect1d(self.members, other.members))

    def __sub__(self, other: "TruncatedSet") -> "TruncatedSet":
        return TruncatedSet(self.horizon, np.setdiff1d(self.members, other.members))

    def issubset(self, other: "TruncatedSet") -> bool:
        return bool(np.isin(self.members, other.members).all())

    def __repr__(self):
        head = ", ".join(str(int(m)) for m in self.members[:6])
        more = ", ..." if self.members.size > 6 else ""
        return f"TruncatedSet(horizon={self.horizon}, |S|={self.members.size}, {{{head}{more}}})"


@dataclass(frozen=True)
class WeightFunction:
    """Positive weight ``f`` on the naturals.

    kinds: ``constant-one``, ``power`` (``f(n) = n**alpha``), ``reciprocal``
    (``1/n``) and ``table`` (explicit values ``f(1), f(2), ...``).
    """

    kind: str = "constant-one"
    alpha: float = 0.0
    table: tuple = ()

    def __post_init__(self):
        if self.kind not in ("constant-one", "power", "reciprocal", "table"):
            raise ValueError(f"unknown weight kind {self.kind!r}")
        if self.kind == "power" and self.alpha < -1:
            raise ValueError(f"power weights need alpha >= -1, got {self.alpha}")
        if self.kind == "table":
            if not self.table or min(self.table) <= 0:
                raise ValueError("table weights must be a non-empty list of positive reals")
            object.__setattr__(self, "table", tuple(float(t) for t in self.table))

    @classmethod
    def constant(cls) -> "WeightFunction":
        return cls("constant-one")

    @classmethod
    def power(cls, alpha: float) -> "WeightFunction":
        return cls("power", float(alpha))

    @classmethod
    def reciprocal(cls) -> "WeightFunction":
        return cls("reciprocal")

    @classmethod
    def from_table(cls, values: Iterable[float]) -> "WeightFunction":
        return cls("table", table=tuple(values))

    def values(self, n: int) -> np.ndarray:
        """``f(1), ..., f(n)`` as float64."""
        if self.kind == "constant-one":
            return np.ones(n)
        idx = np.arange(1, n + 1, dtype=np.float64)
        if self.kind == "power":
            return idx**self.alpha
        if self.kind == "reciprocal":
            return 1.0 / idx
        if n > len(self.table):
            raise ValueError(f"weight table covers {len(self.table)} values, {n} requested")
        return np.array(self.table[:n])

    def __call__(self, n: int) -> float:
        return float(self.values(n)[-1])

    def check_erdos_ulam(self, n: int, settle: float = 0.5) -> None:
        """Raise unless f is positive, non-increasing past ``settle * n`` and its
        partial sums keep growing at horizon ``n``."""
        f = self.values(n)
        if np.any(f <= 0):
            raise ValueError("weights must be strictly positive")
        tail = f[int(settle * n) :]
        if np.any(np.diff(tail) > 1e-15 * tail[:-1]):
            raise ValueError("weight is not eventually non-increasing at this horizon")
        cw = np.cumsum(f)
        half = cw[n // 2 - 1] if n >= 2 else cw[0]
        if n >= 4 and cw[-1] - half <= 1e-12 * cw[-1]:
            raise ValueError("partial sums plateau: the weight does not diverge visibly")

    def describe(self) -> str:
        if self.kind == "power":
            return f"power:{self.alpha:g}"
        if self.kind == "table":
            return f"table[{len(self.table)}]"
        return self.kind


def parse_weight(desc: str) -> WeightFunction:
    head, _, rest = desc.partition(":")
    if head in ("constant", "constant-one", "one"):
        return WeightFunction.constant()
    if head == "power":
        return WeightFunction.power(float(rest))
    if head == "reciprocal":
        return WeightFunction.reciprocal()
    if head == "table":
        return WeightFunction.from_table(float(v) for v in rest.split(","))
    raise ValueError(f"unrecognised weight {desc!r}")


@dataclass(frozen=True)
class IdealSpec:
    """Which ideal is in play: ``alpha-density``, ``erdos-ulam`` or ``summable``."""

    family: str
    weight: WeightFunction = field(default_factory=WeightFunction.constant)
    alpha: float | None = None

    def __post_init__(self):
        if self.family not in ("alpha-density", "erdos-ulam", "summable"):
            raise ValueError(f"unknown ideal family {self.family!r}")
        if self.family == "alpha-density":
            if self.alpha is None or self.alpha < -1:
                raise ValueError("alpha-density ideals need alpha >= -1")
            # realised as the Erdos-Ulam ideal of n**alpha
            object.__setattr__(self, "weight", WeightFunction.power(self.alpha))

    @classmethod
    def alpha_density(cls, alpha: float = 0.0) -> "IdealSpec":
        return cls("alpha-density", alpha=float(alpha))

    @classmethod
    def erdos_ulam(cls, weight: WeightFunction) -> "IdealSpec":
        return cls("erdos-ulam", weight)

    @classmethod
    def summable(cls, weight: WeightFunction) -> "IdealSpec":
        return cls("summable", weight)

    @classmethod
    def parse(cls, desc: str) -> "IdealSpec":
        """``alpha:<a>``, ``erdos-ulam:<weight>`` or ``summable:<weight>``."""
        head, _, rest = desc.partition(":")
        if head in ("alpha", "alpha-density"):
            return cls.alpha_density(float(rest or 0.0))
        if head in ("erdos-ulam", "eu"):
            return cls.erdos_ulam(parse_weight(rest))
        if head == "summable":
            return cls.summable(parse_weight(rest or "reciprocal"))
        raise ValueError(f"unrecognised ideal {desc!r}")

    @property
    def is_summable(self) -> bool:
        return self.family == "summable"

    def describe(self) -> str:
        if self.family == "alpha-density":
            return f"alpha:{self.alpha:g}"
        return f"{self.family}:{self.weight.describe()}"


def geometric_schedule(n: int, points: int = DEFAULT_SCHEDULE_POINTS) -> np.ndarray:
    """Ascending horizons ``ceil(n / 2**j)`` for ``j < points``, deduplicated."""
    if points < 1:
        raise ValueError("schedule needs at least one point")
    sched = {max(1, -(-n // (1 << j))) for j in range(points)}
    return np.array(sorted(sched), dtype=np.int64)


@dataclass(frozen=True, eq=False)
class DensityEstimate:
    """Upper density estimate with its ratio trace along the schedule.

    ``value`` is the ratio at the final horizon; ``tail_max`` is the largest
    ratio over the upper half of the schedule and ``spread`` the gap between
    the largest and smallest tail ratios (a convergence diagnostic).
    """

    value: float
    tail_max: float
    spread: float
    schedule: np.ndarray
    trace: np.ndarray

    def verdict(self, in_threshold: float = 0.01, out_threshold: float = 0.05) -> Verdict:
        return membership_verdict(self.value, in_threshold, out_threshold)

    def to_dict(self) -> dict:
        return {
            "value": self.value,
            "tail_max": self.tail_max,
            "spread": self.spread,
            "schedule": self.schedule.tolist(),
            "trace": self.trace.tolist(),
        }


def _resolve_schedule(S: TruncatedSet, schedule) -> np.ndarray:
    if schedule is None:
        schedule = geometric_schedule(S.horizon)
    schedule = np.asarray(schedule, dtype=np.int64)
    if schedule.size == 0:
        raise ValueError("empty horizon schedule")
    if schedule.min() < 1:
        raise ValueError("schedule points must be positive")
    if schedule.max() > S.horizon:
        raise ValueError(f"set horizon {S.horizon} is smaller than schedule point {schedule.max()}")
    return np.sort(schedule)


def weighted_upper_density(S: TruncatedSet, weight: WeightFunction, schedule=None) -> DensityEstimate:
    """Finite-horizon upper f-density: ratios ``sum_{S∩[1,n]} f / sum_{[1,n]} f``."""
    schedule = _resolve_schedule(S, schedule)
    top = int(schedule[-1])
    f = weight.values(top)
    total = np.cumsum(f)
    members = S.members[S.members <= top]
    part = np.zeros(top)
    part[members - 1] = f[members - 1]
    part = np.cumsum(part)
    trace = part[schedule - 1] / total[schedule - 1]
    tail = trace[trace.size // 2 :]
    return DensityEstimate(
        value=float(trace[-1]),
        tail_max=float(tail.max()),
        spread=float(tail.max() - tail.min()),
        schedule=schedule,
        trace=trace,
    )


def upper_alpha_density(S: TruncatedSet, alpha: float = 0.0, schedule=None) -> DensityEstimate:
    """Upper alpha-density, through the same path as the Erdos-Ulam weight ``n**alpha``."""
    if alpha < -1:
        raise ValueError(f"alpha must be >= -1, got {alpha}")
    return weighted_upper_density(S, WeightFunction.power(alpha), schedule)


def spec_density(S: TruncatedSet, spec: IdealSpec, schedule=None) -> DensityEstimate:
    if spec.is_summable:
        raise ValueError("summable ideals have no density scale; use summable_tail")
    return weighted_upper_density(S, spec.weight, schedule)


@dataclass(frozen=True, eq=False)
class TailMassReport:
    """Tail masses ``sum_{s in S, s > c} f(s)`` at each cutpoint (up to the horizon).

    ``window_masses[j]`` is the mass between consecutive cutpoints (the last
    window runs to the horizon); ``flattening`` is the last window's mass over
    the largest window's mass.
    """

    cutpoints: np.ndarray
    tails: np.ndarray
    window_masses: np.ndarray
    flattening: float
    verdict: Verdict


def summable_tail(
    S: TruncatedSet,
    weight: WeightFunction,
    cutpoints=None,
    in_ratio: float = 0.05,
    out_ratio: float = 0.5,
) -> TailMassReport:
    """Tail masses of ``S`` under ``f`` plus a summable-ideal membership verdict.

    Partial sums of a convergent series flatten: with geometric cutpoints
    the per-window mass decays, whereas e.g. the harmonic series keeps a
    constant mass per doubling window.
    """
    if cutpoints is None:
        cutpoints = geometric_schedule(S.horizon)[:-1]
        if cutpoints.size == 0:
            cutpoints = np.array([0])
    cutpoints = np.sort(np.asarray(cutpoints, dtype=np.int64))
    if cutpoints.min() < 0 or cutpoints.max() >= S.horizon:
        raise ValueError(f"cutpoints must lie in [0, {S.horizon})")
    f = weight.values(S.horizon)
    if np.any(f <= 0):
        raise ValueError("weights must be positive on the horizon")
    part = np.zeros(S.horizon + 1)
    part[S.members] = f[S.members - 1]
    cum = np.cumsum(part)
    tails = cum[-1] - cum[cutpoints]
    windows = -np.diff(np.append(tails, 0.0))
    peak = windows.max()
    flattening = float(windows[-1] / peak) if peak > 0 else 0.0
    if flattening <= in_ratio:
        verdict = Verdict.IN
    elif flattening >= out_ratio:
        verdict = Verdict.OUT
    else:
        verdict = Verdict.INCONCLUSIVE
    return TailMassReport(cutpoints, tails, windows, flattening, verdict)


def compose(A: TruncatedSet, B: TruncatedSet) -> TruncatedSet:
    """``A_B = {a_b : b in B}``.

    Indices ``b > |A|`` point past the truncation; they are dropped and
    counted in ``result.dropped``. The result keeps ``A``'s horizon.
    """
    if len(A) == 0:
        raise ValueError("cannot compose with an empty A: no enumeration")
    keep = B.members <= len(A)
    return TruncatedSet(A.horizon, A.members[B.members[keep] - 1], dropped=int((~keep).sum()))


def scale(k: int, A: TruncatedSet) -> TruncatedSet:
    """``kA = {k a : a in A}`` truncated at ``A.horizon``; overflow counted in ``dropped``."""
    if int(k) != k or k < 1:
        raise ValueError(f"scale factor must be a positive integer, got {k}")
    image = A.members * int(k)
    keep = image <= A.horizon
    return TruncatedSet(A.horizon, image[keep], dropped=int((~keep).sum()))


@dataclass(frozen=True)
class Dominance:
    holds: bool
    first_violation: int | None
    compared: int

    def __bool__(self):
        return self.holds


def dominates(X: TruncatedSet, Y: TruncatedSet) -> Dominance:
    """Whether ``X <= Y`` (``x_n <= y_n``) on the shared enumeration prefix."""
    if len(X) == 0 or len(Y) == 0:
        raise ValueError("dominance needs two non-empty sets")
    m = min(len(X), len(Y))
    bad = np.flatnonzero(X.members[:m] > Y.members[:m])
    if bad.size:
        return Dominance(False, int(bad[0]) + 1, m)
    return Dominance(True, None, m)


@dataclass(frozen=True)
class StretchReport:
    base_value: float
    entries: tuple  # (k, value of kA, bound, verdict) per factor
    slack: float

    @property
    def verdict(self) -> str:
        verdicts = {e[3] for e in self.entries}
        if "inconclusive" in verdicts:
            return "inconclusive"
        return "holds" if verdicts == {"holds"} else "fails"


def stretchability_check(
    A: TruncatedSet,
    spec: IdealSpec,
    ks: Sequence[int] = (2, 3, 5),
    floor: float = 0.01,
    slack: float = 0.1,
) -> StretchReport:
    """Check that ``kA`` stays out of the ideal: ``d(kA) >= d(A)/k * (1 - slack)``.

    When A itself is below ``floor`` (already looks in-ideal) every factor is
    reported ``inconclusive`` instead of raising.
    """
    base = spec_density(A, spec).value
    entries = []
    for k in ks:
        val = spec_density(scale(k, A), spec).value
        bound = base / k * (1 - slack)
        if base <= floor:
            verdict = "inconclusive"
        else:
            verdict = "holds" if val >= bound else "fails"
        entries.append((int(k), val, bound, verdict))
    return StretchReport(base, tuple(entries), slack)


def parse_set_descriptor(desc: str, n: int, cache_dir=None) -> TruncatedSet:
    """Closed-form set literals over ``1..n``.

    ``naturals``, ``evens``, ``odds``, ``multiples:k``, ``squares``,
    ``powers:b``, ``primes``, ``lpf-level:p``, or a path to a file of
    newline-separated integers.
    """
    head, _, rest = desc.partition(":")
    idx = np.arange(1, n + 1)
    if head in ("naturals", "all", "N"):
        return TruncatedSet.full(n)
    if head == "evens":
        return TruncatedSet(n, idx[1::2])
    if head == "odds":
        return TruncatedSet(n, idx[0::2])
    if head == "multiples":
        k = int(rest)
        return TruncatedSet(n, np.arange(k, n + 1, k))
    if head == "squares":
        r = math.isqrt(n)
        return TruncatedSet(n, np.arange(1, r + 1) ** 2)
    if head == "powers":
        b = int(rest)
        if b < 2:
            raise ValueError("powers need base >= 2")
        out, p = [], 1
        while p <= n:
            out.append(p)
            p *= b
        return TruncatedSet(n, np.array(out))
    if head in ("primes", "lpf-level"):
        from .sequences import lpf_sieve

        table = lpf_sieve(max(n, 2), cache_dir=cache_dir)[: n + 1]
        if head == "primes":
            return TruncatedSet(n, np.flatnonzero((table == np.arange(n + 1)) & (np.arange(n + 1) >= 2)))
        return TruncatedSet(n, np.flatnonzero(table == int(rest)))
    if os.path.exists(desc):
        vals = np.loadtxt(desc, dtype=np.int64, ndmin=1)
        if vals.size and vals.max() > n:
            raise ValueError(f"{desc}: element {vals.max()} exceeds horizon {n}")
        return TruncatedSet(n, vals)
    raise ValueError(f"unrecognised set descriptor {desc!r}")
