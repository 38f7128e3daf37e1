"""Real-valued sequences under study, including the least-prime-factor sequence."""

from __future__ import annotations

import csv
import os
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

__all__ = [
    "SequenceSource",
    "lpf_sieve",
    "make_sequence",
    "parse_sequence_descriptor",
    "read_sequence_file",
]

SEQUENCE_KINDS = ("lpf", "constant", "convergent-fixture", "alternating", "user-file")


def _sieve(n: int) -> np.ndarray:
    dtype = np.int32 if n < 2**31 - 1 else np.int64
    lpf = np.zeros(n + 1, dtype=dtype)
    lpf[1] = 1
    r = int(np.sqrt(n))
    while (r + 1) * (r + 1) <= n:
        r += 1
    for p in range(2, r + 1):
        if lpf[p]:
            continue
        # p is prime: every unmarked multiple from p*p on has p as least factor
        view = lpf[p * p :: p]
        view[view == 0] = p
    rest = np.flatnonzero(lpf == 0)
    lpf[rest] = rest.astype(dtype)
    lpf[0] = 0
    return lpf


def lpf_sieve(n: int, cache_dir: str | os.PathLike | None = None) -> np.ndarray:
    """Least prime factor table ``t`` with ``t[k] = lpf(k)`` for ``2 <= k <= n``.

    ``t[0] = 0`` and ``t[1] = 1`` by convention. When *cache_dir* is given the
    table is stored there as ``lpf_<n>.npy`` and reused on later calls.
    """
    n = int(n)
    if n < 2:
        raise ValueError(f"sieve horizon must be at least 2, got {n}")
    path = None
    if cache_dir is not None:
        path = Path(cache_dir) / f"lpf_{n}.npy"
        if path.exists():
            table = np.load(path)
            if table.shape == (n + 1,):
                table.setflags(write=False)
                return table
    table = _sieve(n)
    if path is not None:
        path.parent.mkdir(parents=True, exist_ok=True)
        tmp = path.with_suffix(f".{os.getpid()}.tmp.npy")
        np.save(tmp, table)
        os.replace(tmp, path)
    table.setflags(write=False)
    return table


@dataclass(frozen=True, eq=False)
class SequenceSource:
    """Values ``x_1..x_N`` of a real sequence; ``values[n - 1]`` holds ``x_n``."""

    kind: str
    values: np.ndarray
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        values = np.ascontiguousarray(self.values, dtype=np.float64)
        if values.ndim != 1 or values.size == 0:
            raise ValueError("a sequence needs a non-empty one-dimensional value array")
        if not np.all(np.isfinite(values)):
            raise ValueError("sequence values must be finite reals")
        values.setflags(write=False)
        object.__setattr__(self, "values", values)

    @property
    def horizon(self) -> int:
        return int(self.values.size)

    def __len__(self) -> int:
        return self.horizon

    def __getitem__(self, n: int) -> float:
        """1-based access, ``x[n] == x_n``."""
        if not 1 <= n <= self.horizon:
            raise IndexError(f"index {n} outside 1..{self.horizon}")
        return float(self.values[n - 1])


def read_sequence_file(path: str | os.PathLike) -> np.ndarray:
    """Read newline-separated reals, or ``index,value`` CSV rows.

    A non-numeric first row is treated as a header. CSV indices must cover
    ``1..N`` exactly once, in any order.
    """
    with open(path, newline="") as fh:
        rows = [row for row in csv.reader(fh) if row and any(c.strip() for c in row)]
    if not rows:
        raise ValueError(f"{path}: no values")

    def numeric(row):
        try:
            [float(c) for c in row]
        except ValueError:
            return False
        return True

    if not numeric(rows[0]):
        rows = rows[1:]
    widths = {len(r) for r in rows}
    if widths == {1}:
        return np.array([float(r[0]) for r in rows])
    if widths != {2}:
        raise ValueError(f"{path}: expected one value or 'index,value' per line")
    idx = np.array([int(float(r[0])) for r in rows])
    vals = np.array([float(r[1]) for r in rows])
    order = np.argsort(idx, kind="stable")
    if not np.array_equal(idx[order], np.arange(1, idx.size + 1)):
        raise ValueError(f"{path}: CSV indices must be exactly 1..{idx.size}")
    return vals[order]


def make_sequence(kind: str, n: int | None = None, cache_dir=None, **params) -> SequenceSource:
    """Build a deterministic fixture sequence.

    ``lpf``: ``x_1 = 1`` and ``x_n = 1 / lpf(n)``.
    ``constant``: ``x_n = value``.
    ``convergent-fixture``: ``x_n = ell + 1/n``.
    ``alternating``: ``x_n = low`` for odd n and ``high`` for even n.
    ``user-file``: values read from ``path``; *n*, if given, truncates.
    """
    if kind == "user-file":
        values = read_sequence_file(params["path"])
        if n is not None:
            if n > values.size:
                raise ValueError(f"file holds {values.size} values, horizon {n} requested")
            values = values[:n]
        return SequenceSource(kind, values, {"path": str(params["path"])})
    if kind not in SEQUENCE_KINDS:
        raise ValueError(f"unknown sequence kind {kind!r}; expected one of {SEQUENCE_KINDS}")
    if n is None or n < 1:
        raise ValueError(f"sequence horizon must be a positive integer, got {n}")
    idx = np.arange(1, n + 1, dtype=np.float64)
    if kind == "lpf":
        if n < 2:
            return SequenceSource(kind, np.ones(1), {})
        table = lpf_sieve(n, cache_dir=cache_dir)
        values = 1.0 / table[1:].astype(np.float64)
        return SequenceSource(kind, values, {})
    if kind == "constant":
        c = float(params.get("value", 0.0))
        return SequenceSource(kind, np.full(n, c), {"value": c})
    if kind == "convergent-fixture":
        ell = float(params.get("ell", 0.0))
        return SequenceSource(kind, ell + 1.0 / idx, {"ell": ell})
    low = float(params.get("low", 0.0))
    high = float(params.get("high", 1.0))
    values = np.where(np.arange(1, n + 1) % 2 == 0, high, low)
    return SequenceSource(kind, values, {"low": low, "high": high})


def parse_sequence_descriptor(desc: str, n: int | None = None, cache_dir=None) -> SequenceSource:
    """Parse ``lpf``, ``convergent:<ell>``, ``constant:<c>``, ``alternating[:lo:hi]``,
    ``file:<path>`` (a bare existing path also works)."""
    head, _, rest = desc.partition(":")
    if head == "lpf":
        return make_sequence("lpf", n, cache_dir=cache_dir)
    if head in ("convergent", "convergent-fixture"):
        return make_sequence("convergent-fixture", n, ell=float(rest or 0.0))
    if head == "constant":
        return make_sequence("constant", n, value=float(rest or 0.0))
    if head == "alternating":
        parts = rest.split(":") if rest else []
        if parts and len(parts) != 2:
            raise ValueError("alternating takes either no arguments or low:high")
        lo, hi = (float(p) for p in parts) if parts else (0.0, 1.0)
        return make_sequence("alternating", n, low=lo, high=hi)
    if head == "file":
        return make_sequence("user-file", n, path=rest)
    if os.path.exists(desc):
        return make_sequence("user-file", n, path=desc)
    raise ValueError(f"unrecognised sequence descriptor {desc!r}")
