"""Finite-horizon estimates of ideal limit points and ideal cluster points.

For a candidate point ``ell`` and radius ``eps`` the neighbourhood index set
``{n : |x_n - ell| <= eps}`` is scored by its submeasure norm. A candidate's
limit score is the smallest such norm over the eps schedule; its cluster
score is the norm at the finest eps. Both are proxies: exact where the
sequence is locally constant, upper bounds elsewhere.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_is_fitted

from ._validation import check_eps_schedule, check_sequence
from .ideal import IdealSpec, TruncatedSet, WeightFunction
from .sequences import SequenceSource
from .submeasure import DEFAULT_SLACK, MIN_BLOCKS, BlockSequence, build_blocks, norm_estimate, phi

__all__ = [
    "DEFAULT_EPS_SCHEDULE",
    "CandidateScore",
    "LimitPointReport",
    "DiagonalConstruction",
    "NeighborhoodScorer",
    "IdealLimitPointEstimator",
    "neighborhood_index_set",
    "candidate_grid",
    "cluster_points_estimate",
    "limit_points_estimate",
    "diagonal_construct",
    "cluster_representatives",
]

DEFAULT_EPS_SCHEDULE = (1e-1, 1e-2, 1e-3, 1e-4)


def _values(x) -> np.ndarray:
    return x.values if isinstance(x, SequenceSource) else check_sequence(x)


def neighborhood_index_set(x, ell: float, eps: float) -> TruncatedSet:
    """``{n <= N : ell - eps <= x_n <= ell + eps}``."""
    if eps <= 0:
        raise ValueError(f"eps must be positive, got {eps}")
    v = _values(x)
    hit = (v >= ell - eps) & (v <= ell + eps)
    return TruncatedSet(v.size, np.flatnonzero(hit) + 1)


def candidate_grid(
    x,
    grid_size: int = 201,
    atom_fraction: float = 1e-3,
    extra: Sequence[float] = (),
) -> np.ndarray:
    """Observed values repeated at least ``max(2, atom_fraction * N)`` times,
    plus a uniform grid over ``[min x, max x]`` and any ``extra`` points."""
    v = _values(x)
    uniq, counts = np.unique(v, return_counts=True)
    floor = max(2, math.ceil(atom_fraction * v.size))
    atoms = uniq[counts >= floor]
    lo, hi = float(v.min()), float(v.max())
    uniform = np.linspace(lo, hi, grid_size) if grid_size > 1 and hi > lo else np.array([lo])
    return np.unique(np.concatenate([atoms, uniform, np.asarray(extra, dtype=float)]))


class NeighborhoodScorer:
    """Block-ratio norms of interval neighbourhoods, for many centres at once.

    Erdos-Ulam families use the greedy blocks of their weight and normalise
    block mass by ``F(z_{k+1})``. Summable families use dyadic windows and
    normalise by the window's own mass (the share of f-mass the set takes).
    """

    def __init__(
        self,
        x,
        spec: IdealSpec,
        blocks: BlockSequence | None = None,
        block_slack: float = DEFAULT_SLACK,
        min_blocks: int = MIN_BLOCKS,
    ):
        v = _values(x)
        n = v.size
        self.spec = spec
        if spec.is_summable:
            ends = [1]
            while ends[-1] * 2 <= n:
                ends.append(ends[-1] * 2)
            endpoints = np.array(ends, dtype=np.int64)
            if endpoints.size - 1 < min_blocks:
                raise ValueError(f"only {endpoints.size - 1} dyadic windows fit below horizon {n}")
            f = spec.weight.values(int(endpoints[-1]))
            cw = np.concatenate([[0.0], np.cumsum(f)])
            norm = cw[endpoints[1:]] - cw[endpoints[:-1]]
        else:
            if blocks is None:
                blocks = build_blocks(spec.weight, n, block_slack, min_blocks)
            elif blocks.last_endpoint > n:
                raise ValueError("blocks extend past the sequence horizon")
            endpoints = blocks.endpoints
            f = blocks.weight.values(blocks.last_endpoint)
            norm = blocks.prefix_mass[1:]
        self.blocks = blocks
        self.endpoints = endpoints
        k = endpoints.size - 1
        self.tail_start = k // 2
        self._sorted = []
        self._cumw = []
        self._norm = norm[self.tail_start :]
        for j in range(self.tail_start, k):
            a, b = int(endpoints[j]), int(endpoints[j + 1])
            seg = v[a:b]
            order = np.argsort(seg, kind="stable")
            self._sorted.append(seg[order])
            self._cumw.append(np.concatenate([[0.0], np.cumsum(f[a:b][order])]))

    def tail_ratios(self, ells, eps: float) -> np.ndarray:
        """Per tail block ratios, shape ``(len(ells), n_tail_blocks)``."""
        ells = np.atleast_1d(np.asarray(ells, dtype=float))
        out = np.empty((ells.size, len(self._sorted)))
        lo, hi = ells - eps, ells + eps
        for j, (vals, cw) in enumerate(zip(self._sorted, self._cumw)):
            i0 = np.searchsorted(vals, lo, side="left")
            i1 = np.searchsorted(vals, hi, side="right")
            out[:, j] = (cw[i1] - cw[i0]) / self._norm[j]
        return out

    def norms(self, ells, eps: float) -> np.ndarray:
        return self.tail_ratios(ells, eps).max(axis=1)


@dataclass(frozen=True)
class CandidateScore:
    ell: float
    score: float
    eps_trace: tuple

    def to_dict(self) -> dict:
        return {"ell": self.ell, "score": self.score, "eps_trace": list(self.eps_trace)}


@dataclass(frozen=True)
class LimitPointReport:
    """Scores for every candidate plus the cluster points above threshold.

    ``candidates`` holds all scored points (sorted by ``ell``); the estimated
    ``Λ(q)`` is the subset with ``score >= q``. ``gamma`` lists ``(ell,
    cluster_score)`` for candidates whose cluster score reaches
    ``cluster_threshold``.
    """

    candidates: tuple
    gamma: tuple
    q: float
    cluster_threshold: float
    eps_schedule: tuple
    params: dict = field(default_factory=dict)

    @property
    def ells(self) -> np.ndarray:
        return np.array([c.ell for c in self.candidates])

    @property
    def scores(self) -> np.ndarray:
        return np.array([c.score for c in self.candidates])

    def lambda_points(self, threshold: float | None = None) -> np.ndarray:
        t = self.q if threshold is None else threshold
        return np.array([c.ell for c in self.candidates if c.score >= t])

    def gamma_points(self, threshold: float | None = None) -> np.ndarray:
        t = self.cluster_threshold if threshold is None else threshold
        return np.array([g[0] for g in self.gamma if g[1] >= t])

    def nearest(self, ell: float) -> CandidateScore:
        i = int(np.argmin(np.abs(self.ells - ell)))
        return self.candidates[i]

    def to_dict(self) -> dict:
        return {
            "candidates": [c.to_dict() for c in self.candidates],
            "gamma": [{"ell": e, "cluster_score": s} for e, s in self.gamma],
            "params": {
                "q": self.q,
                "cluster_threshold": self.cluster_threshold,
                "eps_schedule": list(self.eps_schedule),
                **self.params,
            },
        }


def _estimate(
    x,
    spec: IdealSpec,
    q: float,
    grid,
    eps_schedule,
    cluster_threshold: float | None,
    scorer: NeighborhoodScorer | None,
    **scorer_kw,
) -> LimitPointReport:
    if q <= 0:
        raise ValueError(f"q must be positive, got {q}")
    eps_schedule = check_eps_schedule(eps_schedule)
    v = _values(x)
    grid = candidate_grid(v) if grid is None else np.unique(np.asarray(grid, dtype=float))
    if grid.size == 0:
        raise ValueError("empty candidate grid")
    if scorer is None:
        scorer = NeighborhoodScorer(v, spec, **scorer_kw)
    trace = np.column_stack([scorer.norms(grid, eps) for eps in eps_schedule])
    scores = trace.min(axis=1)
    finest = trace[:, -1]
    if cluster_threshold is None:
        cluster_threshold = q
    candidates = tuple(
        CandidateScore(float(e), float(s), tuple(float(t) for t in row)) for e, s, row in zip(grid, scores, trace)
    )
    gamma = tuple((float(e), float(c)) for e, c in zip(grid, finest) if c >= cluster_threshold)
    params = {"ideal": spec.describe(), "horizon": int(v.size), "tail_start": scorer.tail_start}
    if scorer.blocks is not None:
        params["block_slack"] = scorer.blocks.slack
        params["n_blocks"] = scorer.blocks.n_blocks
    return LimitPointReport(candidates, gamma, float(q), float(cluster_threshold), eps_schedule, params)


def limit_points_estimate(
    x,
    spec: IdealSpec,
    q: float,
    grid=None,
    eps_schedule=DEFAULT_EPS_SCHEDULE,
    cluster_threshold: float | None = None,
    scorer: NeighborhoodScorer | None = None,
    **scorer_kw,
) -> LimitPointReport:
    """Score every candidate by the smallest neighbourhood norm over the eps
    schedule; ``ell`` belongs to the estimated ``Λ(q)`` iff its score is at
    least ``q``. The report carries the cluster side too."""
    return _estimate(x, spec, q, grid, eps_schedule, cluster_threshold, scorer, **scorer_kw)


def cluster_points_estimate(
    x,
    spec: IdealSpec,
    grid=None,
    eps_schedule=DEFAULT_EPS_SCHEDULE,
    threshold: float = 0.01,
    scorer: NeighborhoodScorer | None = None,
    **scorer_kw,
) -> LimitPointReport:
    """Cluster points: candidates whose finest-eps neighbourhood norm reaches
    ``threshold``."""
    return _estimate(x, spec, threshold, grid, eps_schedule, threshold, scorer, **scorer_kw)


def cluster_representatives(points, scores, delta: float) -> np.ndarray:
    """Collapse points closer than ``delta`` (single linkage along the line)
    to the best-scoring point of each group."""
    points = np.asarray(points, dtype=float)
    if points.size == 0:
        return points
    scores = np.asarray(scores, dtype=float)
    order = np.argsort(points)
    points, scores = points[order], scores[order]
    breaks = np.flatnonzero(np.diff(points) > delta) + 1
    reps = [grp_p[np.argmax(grp_s)] for grp_p, grp_s in zip(np.split(points, breaks), np.split(scores, breaks))]
    return np.array(reps)


@dataclass(frozen=True, eq=False)
class DiagonalConstruction:
    """Glued set ``A = ∪_m A_m ∩ (θ_{m-1}, θ_m]`` and its checks.

    ``complete`` is False when the horizon ran out (or pairs were exhausted)
    before the last attempted segment met its mass criterion; ``failed_at``
    is that segment's ``m``.
    """

    mode: str
    ell: float
    thetas: tuple
    result: TruncatedSet
    segment_masses: tuple
    targets: tuple
    complete: bool
    failed_at: int | None
    norm: float | None
    envelope_ok: bool
    envelope_violations: tuple
    cauchy_ok: bool
    preconditions: tuple

    @property
    def n_segments(self) -> int:
        return len(self.thetas) - 1

    @property
    def mass_ok(self) -> bool:
        return all(m >= t - 1e-12 for m, t in zip(self.segment_masses, self.targets))

    def to_dict(self) -> dict:
        return {
            "mode": self.mode,
            "ell": self.ell,
            "thetas": list(self.thetas),
            "segment_masses": list(self.segment_masses),
            "targets": list(self.targets),
            "complete": self.complete,
            "failed_at": self.failed_at,
            "norm": self.norm,
            "envelope_ok": self.envelope_ok,
            "cauchy_ok": self.cauchy_ok,
            "size": len(self.result),
        }


def diagonal_construct(
    x,
    pairs: Sequence[tuple],
    spec: IdealSpec,
    q: float = 1.0,
    mode: str = "norm",
    blocks: BlockSequence | None = None,
    slack: float = 0.02,
    cauchy_tol: float = 1e-2,
) -> DiagonalConstruction:
    """Glue index sets ``A_m`` (along which ``x -> ell_m``) into one set along
    which ``x -> ell``.

    ``θ_m`` is the least integer above both ``θ_{m-1}`` and
    ``max(A_{m+1} \\ B_{m+1})`` such that the segment ``A_m ∩ (θ_{m-1}, θ_m]``
    meets its mass criterion: ``phi >= q - 1/m`` (``mode="norm"``) or f-mass
    ``>= 1`` (``mode="summable"``). Here ``B_m = {n in A_m : |x_n - ell_m| <= 1/m}``.
    """
    if mode not in ("norm", "summable"):
        raise ValueError(f"mode must be 'norm' or 'summable', got {mode!r}")
    if not pairs:
        raise ValueError("need at least one (ell_m, A_m) pair")
    v = _values(x)
    n = v.size
    ells = np.array([float(p[0]) for p in pairs])
    sets = [p[1] for p in pairs]
    ell = float(ells[-1])
    tail = ells[len(ells) // 2 :]
    cauchy_ok = bool(np.all(np.abs(tail - ell) <= cauchy_tol))

    if mode == "norm":
        if blocks is None:
            blocks = build_blocks(spec.weight, n)
        top = blocks.last_endpoint
        f = blocks.weight.values(top)
        preconditions = tuple(bool(norm_estimate(A.truncate(top), blocks).value >= q) for A in sets)
    else:
        top = n
        f = spec.weight.values(n)
        preconditions = tuple(True for _ in sets)

    def bad_max(m: int) -> int:
        # largest index of A_m outside its 1/m neighbourhood (0 if none)
        if m > len(sets):
            return 0
        A = sets[m - 1]
        mem = A.members[A.members <= n]
        off = np.abs(v[mem - 1] - ells[m - 1]) > 1.0 / m
        return int(mem[off].max()) if off.any() else 0

    def cumulative(A: TruncatedSet) -> np.ndarray:
        part = np.zeros(top + 1)
        mem = A.members[A.members <= top]
        part[mem] = f[mem - 1]
        return np.cumsum(part)

    thetas = [0]
    masses, targets = [], []
    pieces = []
    complete, failed_at = True, None
    for m in range(1, len(sets) + 1):
        prev = thetas[-1]
        if prev >= top:
            break
        cum = cumulative(sets[m - 1])
        if mode == "norm":
            target = q - 1.0 / m
            t_star = _first_block_hit(cum, blocks, prev, target)
        else:
            target = 1.0
            need = cum[prev] + target
            t_star = int(np.searchsorted(cum, need - 1e-12, side="left"))
            t_star = t_star if t_star <= top and cum[min(t_star, top)] >= need - 1e-12 else None
        if t_star is None:
            complete, failed_at = False, m
            break
        theta = max(t_star, prev + 1, bad_max(m + 1) + 1)
        if theta > top:
            complete, failed_at = False, m
            break
        seg = sets[m - 1].members[(sets[m - 1].members > prev) & (sets[m - 1].members <= theta)]
        seg_set = TruncatedSet(top, seg)
        mass = phi(seg_set, blocks) if mode == "norm" else float(f[seg - 1].sum())
        thetas.append(int(theta))
        masses.append(mass)
        targets.append(target)
        pieces.append(seg)
    members = np.concatenate(pieces) if pieces else np.empty(0, dtype=np.int64)
    result = TruncatedSet(top, members)

    violations = []
    for m, seg in enumerate(pieces, start=1):
        if seg.size == 0:
            continue
        env = 1.0 / m + abs(ells[m - 1] - ell)
        worst = float(np.abs(v[seg - 1] - ell).max())
        if worst > env + 1e-12:
            violations.append((m, worst, env))
    norm = norm_estimate(result, blocks).value if mode == "norm" else None
    return DiagonalConstruction(
        mode=mode,
        ell=ell,
        thetas=tuple(thetas),
        result=result,
        segment_masses=tuple(masses),
        targets=tuple(targets),
        complete=complete,
        failed_at=failed_at,
        norm=norm,
        envelope_ok=not violations,
        envelope_violations=tuple(violations),
        cauchy_ok=cauchy_ok,
        preconditions=preconditions,
    )


def _first_block_hit(cum: np.ndarray, blocks: BlockSequence, start: int, target: float) -> int | None:
    """Least ``t > start`` with ``phi(A ∩ (start, t]) >= target``, or None."""
    if target <= 0:
        return start + 1
    ends = blocks.endpoints
    mu = blocks.prefix_mass[1:]
    best = None
    for k in range(ends.size - 1):
        a, b = int(ends[k]), int(ends[k + 1])
        if b <= start:
            continue
        lo = max(a, start)
        need = cum[lo] + target * mu[k]
        if cum[b] < need - 1e-12 * mu[k]:
            continue
        t = lo + int(np.searchsorted(cum[lo : b + 1], need - 1e-12 * mu[k], side="left"))
        t = max(t, start + 1)
        if best is None or t < best:
            best = t
        if best is not None and best <= b:
            # later blocks start after b and cannot beat a hit inside this one
            break
    return best


class IdealLimitPointEstimator(BaseEstimator):
    """Estimate ideal limit points and cluster points of a real sequence.

    ``fit`` takes the sequence values ``x_1..x_N`` (1-D array-like) and sets
    ``report_``, ``limit_points_`` (candidates with score >= ``q``),
    ``cluster_points_`` and ``representatives_`` (limit points merged within
    ``delta``). ``score_points`` / ``predict`` evaluate arbitrary points.

    Parameters
    ----------
    ideal : str or IdealSpec
        e.g. ``"alpha:0"`` for zero asymptotic density, ``"summable:reciprocal"``.
    q : float
        Norm threshold for ``Λ(q)``.
    cluster_threshold : float, optional
        Threshold for cluster points; defaults to ``q``.
    """

    def __init__(
        self,
        ideal="alpha:0",
        q=0.02,
        eps_schedule=DEFAULT_EPS_SCHEDULE,
        cluster_threshold=None,
        grid_size=201,
        atom_fraction=1e-3,
        extra_candidates=(),
        block_slack=DEFAULT_SLACK,
        min_blocks=MIN_BLOCKS,
        delta=0.01,
    ):
        self.ideal = ideal
        self.q = q
        self.eps_schedule = eps_schedule
        self.cluster_threshold = cluster_threshold
        self.grid_size = grid_size
        self.atom_fraction = atom_fraction
        self.extra_candidates = extra_candidates
        self.block_slack = block_slack
        self.min_blocks = min_blocks
        self.delta = delta

    def _spec(self) -> IdealSpec:
        return self.ideal if isinstance(self.ideal, IdealSpec) else IdealSpec.parse(self.ideal)

    def fit(self, X, y=None):
        v = check_sequence(X)
        spec = self._spec()
        grid = candidate_grid(v, self.grid_size, self.atom_fraction, self.extra_candidates)
        self.scorer_ = NeighborhoodScorer(v, spec, block_slack=self.block_slack, min_blocks=self.min_blocks)
        self.report_ = limit_points_estimate(
            v,
            spec,
            self.q,
            grid=grid,
            eps_schedule=self.eps_schedule,
            cluster_threshold=self.cluster_threshold,
            scorer=self.scorer_,
        )
        self.limit_points_ = self.report_.lambda_points()
        self.cluster_points_ = self.report_.gamma_points()
        keep = self.report_.scores >= self.report_.q
        self.representatives_ = cluster_representatives(
            self.report_.ells[keep], self.report_.scores[keep], self.delta
        )
        self.n_features_in_ = 1
        return self

    def score_points(self, points) -> np.ndarray:
        """Limit scores (smallest neighbourhood norm over the eps schedule)."""
        check_is_fitted(self, "scorer_")
        points = np.atleast_1d(np.asarray(points, dtype=float))
        sched = check_eps_schedule(self.eps_schedule)
        return np.column_stack([self.scorer_.norms(points, e) for e in sched]).min(axis=1)

    def predict(self, points) -> np.ndarray:
        """1 where the point's limit score reaches ``q``, else 0."""
        return (self.score_points(points) >= self.q).astype(int)
