"""Block sequences and the block-ratio representation of the submeasure norm.

For an Erdos-Ulam weight ``f`` with prefix sums ``F``, endpoints
``z_0 < z_1 < ...`` are chosen so that each block ``(z_k, z_{k+1}]`` carries
about as much mass as the prefix ``[1, z_k]``. The norm of ``S`` is then the
limsup over blocks of

    h_k(S) = sum_{s in S ∩ (z_k, z_{k+1}]} f(s) / F(z_{k+1}),

which at a finite horizon is estimated as the maximum of ``h_k`` over the
upper half of the blocks.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .ideal import TruncatedSet, WeightFunction, compose, dominates, upper_alpha_density

__all__ = [
    "BlockSequence",
    "NormEstimate",
    "ThinnabilityReport",
    "build_blocks",
    "doubling_blocks",
    "norm_estimate",
    "phi",
    "thinnability_strong_ii_check",
    "thinnability_strong_iii_check",
]

DEFAULT_SLACK = 0.05
MIN_BLOCKS = 8


@dataclass(frozen=True, eq=False)
class BlockSequence:
    weight: WeightFunction
    horizon: int
    slack: float
    endpoints: np.ndarray  # z_0 = 1 < z_1 < ... <= horizon
    prefix_mass: np.ndarray  # F(z_k)
    ratio_trace: np.ndarray  # block mass / F(z_k), one per complete block

    @property
    def n_blocks(self) -> int:
        return int(self.endpoints.size - 1)

    @property
    def tail_start(self) -> int:
        """Index of the first block counted as tail."""
        return self.n_blocks // 2

    @property
    def last_endpoint(self) -> int:
        return int(self.endpoints[-1])

    def tail_within_slack(self) -> bool:
        """Tail ratios lie in ``[1 - slack, 1 - slack + f(z_{k+1}) / F(z_k)]``."""
        f = self.weight.values(self.last_endpoint)
        lo = 1 - self.slack
        t = self.tail_start
        z_next = self.endpoints[t + 1 :]
        hi = lo + f[z_next - 1] / self.prefix_mass[t:-1]
        r = self.ratio_trace[t:]
        return bool(np.all(r >= lo - 1e-12) and np.all(r <= hi + 1e-12))

    def to_dict(self) -> dict:
        return {
            "weight": self.weight.describe(),
            "horizon": self.horizon,
            "slack": self.slack,
            "endpoints": self.endpoints.tolist(),
            "ratio_trace": self.ratio_trace.tolist(),
        }


def build_blocks(
    weight: WeightFunction,
    horizon: int,
    target_slack: float = DEFAULT_SLACK,
    min_blocks: int = MIN_BLOCKS,
) -> BlockSequence:
    """Greedy endpoints: ``z_{k+1}`` is the least integer whose block mass reaches
    ``(1 - target_slack) * F(z_k)``, starting from ``z_0 = 1``.

    The last block that would run past the horizon is discarded. Raises
    ``ValueError`` when fewer than ``min_blocks`` complete blocks fit.
    """
    if not 0 < target_slack < 0.5:
        raise ValueError(f"target_slack must lie in (0, 0.5), got {target_slack}")
    weight.check_erdos_ulam(horizon)
    cw = np.cumsum(weight.values(horizon))
    ends = [1]
    while True:
        target = (2.0 - target_slack) * cw[ends[-1] - 1]
        i = int(np.searchsorted(cw, target, side="left"))
        if i >= horizon:
            break
        ends.append(i + 1)
    endpoints = np.array(ends, dtype=np.int64)
    n_blocks = endpoints.size - 1
    if n_blocks < min_blocks:
        if n_blocks >= 2:
            growth = endpoints[-1] / endpoints[-2]
            hint = horizon * growth ** (min_blocks - n_blocks)
            suggestion = f"; try a horizon of roughly {hint:.3g} or more"
        else:
            suggestion = "; try a much larger horizon"
        raise ValueError(
            f"only {n_blocks} complete blocks fit below horizon {horizon} "
            f"for weight {weight.describe()} (need {min_blocks}){suggestion}"
        )
    prefix = cw[endpoints - 1]
    ratios = (prefix[1:] - prefix[:-1]) / prefix[:-1]
    for arr in (endpoints, prefix, ratios):
        arr.setflags(write=False)
    return BlockSequence(weight, int(horizon), float(target_slack), endpoints, prefix, ratios)


def doubling_blocks(horizon: int, min_blocks: int = MIN_BLOCKS) -> BlockSequence:
    """Constant weight with endpoints ``1, 2, 4, ...``: every block equals its prefix."""
    return build_blocks(WeightFunction.constant(), horizon, target_slack=1e-12, min_blocks=min_blocks)


@dataclass(frozen=True, eq=False)
class NormEstimate:
    """Finite-horizon norm of a set.

    ``block_ratios`` are the ``h_k``; ``mu`` the normalisers ``F(z_{k+1})``;
    ``prefix_ratios`` the same block masses over ``F(z_k)``; ``tail_sups`` is
    ``sup_{j >= k} prefix_ratios[j]`` (the un-halved tail suprema).
    """

    value: float
    block_ratios: np.ndarray
    prefix_ratios: np.ndarray
    mu: np.ndarray
    tail_sups: np.ndarray
    tail_start: int

    def to_dict(self) -> dict:
        return {"value": self.value, "tail_start": self.tail_start, "block_ratios": self.block_ratios.tolist()}


def _block_masses(S: TruncatedSet, blocks: BlockSequence) -> np.ndarray:
    top = blocks.last_endpoint
    if S.horizon < top:
        raise ValueError(f"set horizon {S.horizon} is below the last block endpoint {top}")
    f = blocks.weight.values(top)
    part = np.zeros(top + 1)
    m = S.members[S.members <= top]
    part[m] = f[m - 1]
    cum = np.cumsum(part)
    return cum[blocks.endpoints[1:]] - cum[blocks.endpoints[:-1]]


def norm_estimate(S: TruncatedSet, blocks: BlockSequence) -> NormEstimate:
    """Largest block ratio ``h_k(S)`` over the upper half of the blocks."""
    mass = _block_masses(S, blocks)
    mu = blocks.prefix_mass[1:]
    h = mass / mu
    pre = mass / blocks.prefix_mass[:-1]
    tail_sups = np.maximum.accumulate(pre[::-1])[::-1]
    t = blocks.tail_start
    return NormEstimate(float(h[t:].max()), h, pre, mu, tail_sups, t)


def phi(S: TruncatedSet, blocks: BlockSequence) -> float:
    """Submeasure of a finite set: the largest block ratio over all blocks.

    A supremum of measures, hence monotone, subadditive and lower
    semicontinuous; its tail norm is the block-ratio limsup.
    """
    return float((_block_masses(S, blocks) / blocks.prefix_mass[1:]).max())


@dataclass(frozen=True)
class ThinnabilityReport:
    lhs: float  # norm of B_A (ii) or of X (iii)
    rhs: float  # norm of B (ii) or of Y (iii)
    constant: float  # 1/r or 1/6
    bound: float
    slack: float
    verdict: str  # holds | fails | inconclusive
    details: dict

    def to_dict(self) -> dict:
        return {
            "lhs": self.lhs,
            "rhs": self.rhs,
            "constant": self.constant,
            "bound": self.bound,
            "slack": self.slack,
            "verdict": self.verdict,
            **self.details,
        }


def thinnability_strong_ii_check(
    A: TruncatedSet,
    B: TruncatedSet,
    blocks: BlockSequence,
    slack: float = 0.02,
    density_floor: float = 0.01,
) -> ThinnabilityReport:
    """``||B_A|| >= ||B|| / r`` with ``r = floor(1/a) + 1``, ``a`` the density of A.

    ``B_A = {b_a : a in A}`` is ``compose(B, A)``: B is enumerated, A indexes.
    """
    a = upper_alpha_density(A, 0.0).value
    q_hat = norm_estimate(B, blocks).value
    if a <= density_floor:
        return ThinnabilityReport(math.nan, q_hat, math.nan, math.nan, slack, "inconclusive", {"a": a})
    r = math.floor(1 / a) + 1
    BA = compose(B, A)
    n_hat = norm_estimate(BA, blocks).value
    bound = q_hat / r
    verdict = "holds" if n_hat >= bound - slack else "fails"
    return ThinnabilityReport(n_hat, q_hat, 1 / r, bound, slack, verdict, {"a": a, "r": r, "dropped": BA.dropped})


def thinnability_strong_iii_check(
    X: TruncatedSet,
    Y: TruncatedSet,
    blocks: BlockSequence,
    slack: float = 0.02,
) -> ThinnabilityReport:
    """``||X|| >= ||Y|| / 6`` whenever ``X <= Y``; raises if dominance fails."""
    dom = dominates(X, Y)
    if not dom:
        raise ValueError(f"X <= Y fails at n = {dom.first_violation}")
    x = norm_estimate(X, blocks).value
    y = norm_estimate(Y, blocks).value
    bound = y / 6
    verdict = "holds" if x >= bound - slack else "fails"
    return ThinnabilityReport(x, y, 1 / 6, bound, slack, verdict, {"compared": dom.compared})
