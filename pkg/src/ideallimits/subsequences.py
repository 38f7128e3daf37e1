"""Random subsequences via dyadic digits, and Monte Carlo experiments over them.

A subsequence of ``x`` corresponds to the binary digits ``d_1 d_2 ...`` of a
number in (0, 1]: ``x_i`` is kept iff ``d_i = 1``. Fair coin digits give the
uniform measure, so "almost all subsequences" statements are approximated
by the fraction of sampled digit streams that satisfy them.

Digits come from numpy's PCG64 bit generator seeded through ``SeedSequence``;
the raw 64-bit outputs are unpacked least significant bit first, so the
stream is fixed by those two documented algorithms alone.
"""

from __future__ import annotations

import csv
import io
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .ideal import IdealSpec, TruncatedSet, upper_alpha_density
from .limit_points import DEFAULT_EPS_SCHEDULE, LimitPointReport, limit_points_estimate
from .sequences import SequenceSource

__all__ = [
    "OmegaSample",
    "SampleRecord",
    "ExperimentResult",
    "sample_omega",
    "restrict",
    "relative_density",
    "hausdorff",
    "directed_hausdorff",
    "lambda_agreement_experiment",
    "lambda_gamma_zero_one_experiment",
]


@dataclass(frozen=True, eq=False)
class OmegaSample:
    seed: int
    digits: np.ndarray  # uint8, d_1..d_N
    attempt: int = 0

    @property
    def horizon(self) -> int:
        return int(self.digits.size)

    @property
    def selected(self) -> TruncatedSet:
        return TruncatedSet(self.horizon, np.flatnonzero(self.digits) + 1)

    @property
    def normality_deviation(self) -> float:
        return abs(float(self.digits.mean()) - 0.5)

    @property
    def normality_flag(self) -> bool:
        """True when the digit mean is more than 4 standard deviations from 1/2."""
        return self.normality_deviation > 4 * 0.5 / math.sqrt(self.horizon)

    @classmethod
    def from_digits(cls, digits, seed: int = -1) -> "OmegaSample":
        digits = np.asarray(digits, dtype=np.uint8)
        if digits.ndim != 1 or digits.size == 0 or np.any(digits > 1):
            raise ValueError("digits must be a non-empty 0/1 vector")
        return cls(seed, digits)


def _digit_stream(seed: int, attempt: int, n: int) -> np.ndarray:
    entropy = seed if attempt == 0 else [seed, attempt]
    bitgen = np.random.PCG64(np.random.SeedSequence(entropy))
    words = bitgen.random_raw(-(-n // 64)).astype("<u8")
    bits = np.unpackbits(words.view(np.uint8), bitorder="little")
    return bits[:n].copy()


def sample_omega(seed: int, n: int) -> OmegaSample:
    """Fair-coin digits ``d_1..d_n``; an all-zero draw is replaced by the next
    stream (``attempt + 1``) so the selected set is never empty."""
    if n < 1:
        raise ValueError("n must be positive")
    seed = int(seed)
    attempt = 0
    while True:
        digits = _digit_stream(seed, attempt, n)
        if digits.any():
            digits.setflags(write=False)
            return OmegaSample(seed, digits, attempt)
        attempt += 1


def restrict(x: SequenceSource, omega: OmegaSample) -> SequenceSource:
    """The subsequence keeping ``x_i`` iff ``d_i = 1``, in original order."""
    if omega.horizon != x.horizon:
        raise ValueError(f"digit stream has length {omega.horizon}, sequence has {x.horizon}")
    keep = omega.digits.astype(bool)
    if not keep.any():
        raise ValueError("empty selection")
    return SequenceSource(f"{x.kind}|omega", x.values[keep], {**x.params, "seed": omega.seed})


def relative_density(A: TruncatedSet, B: TruncatedSet, schedule=None) -> float:
    """Density of ``K = {k : a_k in B}``, i.e. of B inside A's enumeration."""
    if len(A) == 0:
        raise ValueError("A is empty")
    K = np.flatnonzero(np.isin(A.members, B.members)) + 1
    return upper_alpha_density(TruncatedSet(len(A), K), 0.0, schedule).value


def directed_hausdorff(a, b) -> float:
    """``max_{p in a} min_{r in b} |p - r|``; 0 for empty ``a``, inf for empty ``b``."""
    a = np.sort(np.asarray(a, dtype=float))
    b = np.sort(np.asarray(b, dtype=float))
    if a.size == 0:
        return 0.0
    if b.size == 0:
        return math.inf
    i = np.clip(np.searchsorted(b, a), 1, b.size) - 1
    j = np.clip(i + 1, 0, b.size - 1)
    return float(np.minimum(np.abs(a - b[i]), np.abs(a - b[j])).max())


def hausdorff(a, b) -> float:
    if len(a) == 0 and len(b) == 0:
        return 0.0
    return max(directed_hausdorff(a, b), directed_hausdorff(b, a))


@dataclass(frozen=True)
class SampleRecord:
    index: int
    seed: int
    attempt: int
    normality_deviation: float
    normality_flag: bool
    selected_density: float
    n_lambda: int
    n_gamma: int
    distance: float
    agree: bool
    containment_violations: int
    error: str | None = None


@dataclass(frozen=True)
class ExperimentResult:
    kind: str
    sample_count: int
    records: tuple
    agreement_fraction: float
    params: dict = field(default_factory=dict)
    reference: dict = field(default_factory=dict)

    @property
    def agreeing(self) -> int:
        return sum(r.agree for r in self.records)

    def to_dict(self) -> dict:
        return {
            "kind": self.kind,
            "sample_count": self.sample_count,
            "agreement_fraction": self.agreement_fraction,
            "agreeing": self.agreeing,
            "params": self.params,
            "reference": self.reference,
            "records": [r.__dict__ for r in self.records],
        }

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["index", "seed", "normality_deviation", "selected_density", "distance", "agree"])
        for r in self.records:
            w.writerow([r.index, r.seed, repr(r.normality_deviation), repr(r.selected_density), repr(r.distance), int(r.agree)])
        return buf.getvalue()


def _report(x_values, spec, q, eps_schedule, cluster_threshold, estimator_kw) -> LimitPointReport:
    return limit_points_estimate(
        x_values, spec, q, eps_schedule=eps_schedule, cluster_threshold=cluster_threshold, **estimator_kw
    )


_WORKER_VALUES = None


def _init_worker(values):
    global _WORKER_VALUES
    _WORKER_VALUES = values


def _run_sample(task, x_values=None):
    (kind, index, seed, spec, q, eps_schedule, delta, score_scale, cluster_threshold, reference, est_kw) = task
    if x_values is None:
        x_values = _WORKER_VALUES
    omega = sample_omega(seed, x_values.size)
    keep = omega.digits.astype(bool)
    base = dict(
        index=index,
        seed=seed,
        attempt=omega.attempt,
        normality_deviation=omega.normality_deviation,
        normality_flag=omega.normality_flag,
        selected_density=float(keep.mean()),
    )
    try:
        rep = _report(x_values[keep], spec, q, eps_schedule, cluster_threshold, est_kw)
    except ValueError as exc:
        return SampleRecord(**base, n_lambda=0, n_gamma=0, distance=math.inf, agree=False, containment_violations=0, error=str(exc))
    strong = rep.lambda_points(q)
    weak = rep.lambda_points(q * score_scale)
    gamma = rep.gamma_points()
    ref_strong, ref_weak = reference["strong"], reference["weak"]
    # sub-sample points above the lowered threshold must sit near a reference point above it
    outside = int(sum(directed_hausdorff([p], ref_weak) > delta for p in weak))
    if kind == "agreement":
        distance = max(directed_hausdorff(ref_strong, weak), directed_hausdorff(strong, ref_weak))
    else:
        distance = hausdorff(strong, gamma)
    return SampleRecord(
        **base,
        n_lambda=int(strong.size),
        n_gamma=int(gamma.size),
        distance=float(distance),
        agree=bool(distance <= delta),
        containment_violations=outside,
    )


def _run(kind, x, spec, q, M, base_seed, delta, score_scale, cluster_threshold, eps_schedule, n_jobs, est_kw):
    if M < 1:
        raise ValueError("need at least one sample")
    if q <= 0:
        raise ValueError("q must be positive")
    values = x.values
    ref = _report(values, spec, q, eps_schedule, cluster_threshold, est_kw)
    reference = {
        "strong": ref.lambda_points(q),
        "weak": ref.lambda_points(q * score_scale),
        "gamma": ref.gamma_points(),
    }
    tasks = [
        (kind, i, int(base_seed) + i, spec, q, eps_schedule, delta, score_scale, cluster_threshold, reference, est_kw)
        for i in range(M)
    ]
    if n_jobs and n_jobs > 1:
        with ProcessPoolExecutor(max_workers=n_jobs, initializer=_init_worker, initargs=(values,)) as pool:
            records = list(pool.map(_run_sample, tasks, chunksize=max(1, M // (4 * n_jobs))))
    else:
        records = [_run_sample(t, values) for t in tasks]
    records.sort(key=lambda r: r.index)
    agree = sum(r.agree for r in records)
    params = {
        "ideal": spec.describe(),
        "q": q,
        "M": M,
        "N": int(values.size),
        "base_seed": int(base_seed),
        "delta": delta,
        "score_scale": score_scale,
        "cluster_threshold": cluster_threshold,
        "eps_schedule": list(eps_schedule),
        **{k: v for k, v in est_kw.items() if isinstance(v, (int, float, str))},
    }
    reference_out = {
        "lambda": reference["strong"].tolist(),
        "lambda_weak": reference["weak"].tolist(),
        "gamma": reference["gamma"].tolist(),
        "lambda_equals_gamma": bool(hausdorff(reference["strong"], reference["gamma"]) <= delta),
    }
    return ExperimentResult(kind, M, tuple(records), agree / M, params, reference_out)


def lambda_agreement_experiment(
    x: SequenceSource,
    spec: IdealSpec,
    q: float,
    M: int,
    base_seed: int = 0,
    delta: float = 0.01,
    score_scale: float = 0.4,
    eps_schedule=DEFAULT_EPS_SCHEDULE,
    n_jobs: int = 1,
    **estimator_kw,
) -> ExperimentResult:
    """Fraction of sampled subsequences whose limit points match those of ``x``.

    Sample ``i`` uses seed ``base_seed + i``. A sample agrees when every point
    of ``Λ_x(q)`` lies within ``delta`` of a point of ``Λ_y(score_scale*q)``
    and every point of ``Λ_y(q)`` lies within ``delta`` of a point of
    ``Λ_x(score_scale*q)``, with ``y`` the subsequence.
    """
    return _run("agreement", x, spec, q, M, base_seed, delta, score_scale, q * score_scale, eps_schedule, n_jobs, estimator_kw)


def lambda_gamma_zero_one_experiment(
    x: SequenceSource,
    spec: IdealSpec,
    q: float,
    M: int,
    base_seed: int = 0,
    delta: float = 0.01,
    score_scale: float = 0.4,
    cluster_threshold: float | None = None,
    eps_schedule=DEFAULT_EPS_SCHEDULE,
    n_jobs: int = 1,
    **estimator_kw,
) -> ExperimentResult:
    """Fraction of sampled subsequences whose limit points equal their cluster
    points: Hausdorff distance between ``Λ_y(q)`` and ``Γ_y`` at most ``delta``.

    ``Γ_y`` uses ``cluster_threshold`` (default ``score_scale * q``).
    """
    if cluster_threshold is None:
        cluster_threshold = q * score_scale
    return _run("zero-one", x, spec, q, M, base_seed, delta, score_scale, cluster_threshold, eps_schedule, n_jobs, estimator_kw)
