"""Full event log of one replicate, in plain Python.

Slow, unpruned and meant for inspection and cross-checking: it uses the same
genealogical random numbers as the compiled kernels, so ``level_counts`` on a
logged tree reproduces the kernel counts exactly.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

import numpy as np

from brwlab.model import ModelParams
from brwlab.sim import rng


class PType(str, enum.Enum):
    PLUS = "Plus"
    MINUS = "Minus"

    @property
    def sign(self) -> int:
        return 1 if self is PType.PLUS else -1

    @classmethod
    def of(cls, s: int) -> "PType":
        return cls.PLUS if s > 0 else cls.MINUS

    @classmethod
    def parse(cls, v) -> "PType":
        if isinstance(v, PType):
            return v
        if v in (1, "+", "plus", "Plus"):
            return cls.PLUS
        if v in (-1, "-", "minus", "Minus"):
            return cls.MINUS
        raise ValueError(f"unknown particle type {v!r}")


@dataclass
class ParticleRecord:
    id: int
    parent: int | None
    ptype_at_birth: PType
    birth_time: float
    death_time: float | None
    path: list[tuple[float, float, PType]]
    lineage_max: float
    lineage_min: float


@dataclass
class TreeLog:
    params: ModelParams
    root_type: PType
    horizon: float
    budget: int
    seed: int
    rep: int
    records: list[ParticleRecord]
    censored: bool

    def alive_at_horizon(self) -> list[ParticleRecord]:
        return [p for p in self.records if p.death_time is None]

    def population(self, t: float) -> int:
        return sum(
            1 for p in self.records
            if p.birth_time <= t and (p.death_time is None or t < p.death_time)
        )

    def split_count(self, t: float | None = None) -> int:
        t = self.horizon if t is None else t
        return sum(1 for p in self.records if p.death_time is not None and p.death_time <= t)


def simulate_tree(params: ModelParams, root_type, horizon: float, budget: int = 10**6,
                  seed: int = 0, rep: int = 0) -> TreeLog:
    """Exact event-driven simulation of one replicate up to ``horizon``.

    Stops early (``censored=True``) once creating two more particles would
    exceed ``budget``.
    """
    if not horizon > 0:
        raise ValueError(f"horizon must be > 0, got {horizon}")
    if budget < 1:
        raise ValueError(f"budget must be >= 1, got {budget}")
    root = PType.parse(root_type)
    qp, qm, b = params.q_plus, params.q_minus, params.beta
    records: list[ParticleRecord] = []
    # pending births: (record index, key)
    rec0 = ParticleRecord(0, None, root, 0.0, None, [(0.0, 0.0, root)], 0.0, 0.0)
    records.append(rec0)
    stack = [(0, rng.py_rep_key(rng.seed_to_int(seed), rep))]
    censored = False
    while stack:
        idx, key = stack.pop()
        rec = records[idx]
        t, x, typ = rec.path[0]
        s = typ.sign
        hi, lo = rec.lineage_max, rec.lineage_min
        n = 0
        while True:
            q = qp if s > 0 else qm
            k = q + b
            te = t + rng.py_exponential(key, 3 * n, k)
            if te >= horizon:
                x += s * (horizon - t)
                rec.path.append((horizon, x, PType.of(s)))
                break
            x += s * (te - t)
            t = te
            hi, lo = max(hi, x), min(lo, x)
            if rng.py_uniform(key, 3 * n + 1) * k < q:
                s = -s
                rec.path.append((t, x, PType.of(s)))
                n += 1
                continue
            if len(records) + 2 > budget:
                rec.path.append((t, x, PType.of(s)))
                censored = True
                break
            rec.death_time = t
            rec.path.append((t, x, PType.of(s)))
            for j in (2, 1):
                ch = ParticleRecord(len(records), rec.id, PType.of(s), t, None,
                                    [(t, x, PType.of(s))], hi, lo)
                records.append(ch)
                stack.append((ch.id, rng.py_child_key(key, j)))
            break
        if censored:
            break
    return TreeLog(params, root, horizon, budget, seed, rep, records, censored)


@dataclass
class LevelCounts:
    phis: np.ndarray
    n_plus: np.ndarray
    n_minus: np.ndarray
    censored_plus: np.ndarray
    censored_minus: np.ndarray
    horizon_time: float

    @property
    def censored(self) -> np.ndarray:
        return self.censored_plus | self.censored_minus


def _segments(rec: ParticleRecord):
    for (t0, x0, typ), (t1, x1, _) in zip(rec.path[:-1], rec.path[1:]):
        yield typ.sign, x0, x1


def level_counts(tree: TreeLog, phis) -> LevelCounts:
    """Plus counts at levels ``phis`` and minus counts at ``-phis``.

    Each lineage counts a level at most once: the particle alive when it first
    reaches the level at a new extremum, moving outward.
    """
    lv = np.asarray(phis, dtype=float)
    if np.any(lv < 0):
        raise ValueError("levels must be >= 0")
    order = np.argsort(lv, kind="stable")
    srt = lv[order]
    n = len(srt)
    cp = np.zeros(n, dtype=np.int64)
    cm = np.zeros(n, dtype=np.int64)
    fp = np.zeros(n, dtype=bool)
    fm = np.zeros(n, dtype=bool)
    state: dict[int, tuple[int, int]] = {}
    for rec in tree.records:
        ip, im = (0, 0) if rec.parent is None else state[rec.parent]
        for s, _, x1 in _segments(rec):
            if s > 0:
                while ip < n and srt[ip] <= x1:
                    cp[ip] += 1
                    ip += 1
            else:
                while im < n and -srt[im] >= x1:
                    cm[im] += 1
                    im += 1
        state[rec.id] = (ip, im)
        if rec.death_time is None:
            fp[ip:] = True
            fm[im:] = True
    inv = np.empty(n, dtype=np.int64)
    inv[order] = np.arange(n)
    return LevelCounts(lv, cp[inv], cm[inv], fp[inv], fm[inv], tree.horizon)


@dataclass
class WindingCounts:
    w_plus: list[int]
    w_minus: list[int]
    censored: bool
    stages: list[int] = field(default_factory=list)


def winding_counts(tree: TreeLog, n_max: int = 2) -> WindingCounts:
    """``W+(n)`` and ``W-(n)`` for ``n <= n_max`` under a plus root; ``W+(0) = 1``."""
    if tree.root_type is not PType.PLUS:
        raise ValueError("winding counts are defined for a plus root")
    n_stages = 2 * n_max + 2
    w = [0] * n_stages
    w[0] = 1
    stage: dict[int, int] = {}
    open_lineage = False
    for rec in tree.records:
        g = 0 if rec.parent is None else stage[rec.parent]
        for s, _, x1 in _segments(rec):
            if g % 2 == 0 and s < 0 and x1 < 0.0:
                g += 1
                if g < n_stages:
                    w[g] += 1
            elif g % 2 == 1 and s > 0 and x1 > 0.0:
                g += 1
                if g < n_stages:
                    w[g] += 1
        stage[rec.id] = g
        if rec.death_time is None and g + 1 < n_stages:
            open_lineage = True
    return WindingCounts(w[0::2], w[1::2], open_lineage or tree.censored, w)


def ever_left_of_zero(tree: TreeLog) -> bool:
    return any(p.lineage_min < 0 or any(x < 0 for _, x, _ in p.path) for p in tree.records)


def mean_population_formula(beta: float, t: float) -> float:
    return math.exp(beta * t)
