"""Monte Carlo estimates with censoring brackets.

Replicates run in fixed-size chunks, optionally on a process pool.  Results are
reassembled in replicate order and summed with ``math.fsum``, so an estimate
depends only on ``(seed, reps)`` and never on the worker count.

Every estimate carries ``(low, high)``.  ``low`` uses the guaranteed minimum of
each pending lineage and ``high`` its conditional-mean bound; for pgfs the two
sides swap because ``theta ** n`` decreases in ``n``.  The upper bounds use the
closed-form means at ``beta_c`` and hold for ``beta <= beta_c``; above
``beta_c`` they are infinite.
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass
from functools import partial

import numpy as np

from brwlab.errors import DomainError
from brwlab.model import CRITICAL_RTOL, ModelParams, Regime, derive_constants
from brwlab.sim import kernels
from brwlab.sim.rng import seed_to_int
from brwlab.sim.tree import PType

DEFAULT_REPS = 100_000
DEFAULT_HORIZON = 20.0
DEFAULT_BUDGET = 10**6
DEFAULT_RELEASE = 8.0
CHUNK = 10_000

CSV_HEADER = "quantity,phi,theta,mean,se,low,high,censor_fraction,n_reps"


@dataclass(frozen=True)
class McEstimate:
    quantity: str
    mean: float
    std_error: float
    n_reps: int
    censor_fraction: float
    bracket: tuple[float, float]
    phi: float | None = None
    theta: float | None = None
    bracket_only: bool = False
    released_fraction: float = 0.0
    budget_hit_fraction: float = 0.0

    @property
    def low(self) -> float:
        return self.bracket[0]

    @property
    def high(self) -> float:
        return self.bracket[1]

    def contains(self, target: float, n_se: float = 3.0) -> bool:
        """``target`` in ``[low - n_se SE, high + n_se SE]``."""
        return self.low - n_se * self.std_error <= target <= self.high + n_se * self.std_error

    def as_dict(self) -> dict:
        d = asdict(self)
        d["bracket"] = list(self.bracket)
        return d

    def csv_row(self) -> str:
        def f(v):
            if v is None:
                return ""
            return format(float(v), ".17g")

        mean = "" if self.bracket_only else f(self.mean)
        se = "" if self.bracket_only else f(self.std_error)
        return ",".join([
            self.quantity, f(self.phi), f(self.theta), mean, se,
            f(self.low), f(self.high), f(self.censor_fraction), str(self.n_reps),
        ])


def to_csv(estimates) -> str:
    lines = [CSV_HEADER] + [e.csv_row() for e in estimates]
    return "\n".join(lines) + "\n"


def _mean(a) -> float:
    a = np.asarray(a, dtype=float)
    if np.isinf(a).any():
        return float(np.sum(a))
    return math.fsum(a.tolist()) / len(a)


def summarize(quantity: str, point, low, high, censored=None, released=None, budget_hit=None,
              phi=None, theta=None, bracket_only: bool = False) -> McEstimate:
    point = np.asarray(point, dtype=float)
    n = len(point)
    if n < 2:
        raise DomainError(f"need at least 2 replicates, got {n}")
    mean = _mean(point)
    var = math.fsum(((point - mean) ** 2).tolist()) / (n - 1)

    def frac(flags):
        return 0.0 if flags is None else float(np.count_nonzero(flags)) / n

    return McEstimate(
        quantity=quantity,
        mean=mean,
        std_error=math.sqrt(var / n),
        n_reps=n,
        censor_fraction=frac(censored),
        bracket=(min(_mean(low), mean), max(_mean(high), mean)),
        phi=phi,
        theta=theta,
        bracket_only=bracket_only,
        released_fraction=frac(released),
        budget_hit_fraction=frac(budget_hit),
    )


def _chunks(reps: int, chunk: int = CHUNK):
    return [(r0, min(chunk, reps - r0)) for r0 in range(0, reps, chunk)]


def run_chunked(fn, reps: int, workers: int = 1):
    """Call ``fn(rep0, nrep)`` over all chunks and concatenate outputs in replicate order."""
    if reps < 1:
        raise DomainError(f"reps must be >= 1, got {reps}")
    parts = _chunks(reps)
    if workers > 1 and len(parts) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            outs = list(pool.map(_call, [fn] * len(parts), parts))
    else:
        outs = [fn(r0, n) for r0, n in parts]
    if isinstance(outs[0], tuple):
        return tuple(np.concatenate([o[i] for o in outs]) for i in range(len(outs[0])))
    return np.concatenate(outs)


def _call(fn, part):
    return fn(*part)


def _bounded(params: ModelParams) -> bool:
    return derive_constants(params).regime is not Regime.SUPERCRITICAL


def _levels(v) -> np.ndarray:
    a = np.asarray([] if v is None else v, dtype=float).reshape(-1)
    if np.any(a < 0) or not np.all(np.isfinite(a)):
        raise DomainError(f"levels must be finite and >= 0, got {a.tolist()}")
    if np.any(np.diff(a) <= 0):
        raise DomainError(f"levels must be strictly ascending, got {a.tolist()}")
    return a


def _level_job(qp, qm, beta, root_s, pp, pm, horizon, budget, release, bounded, seed, rep0, nrep):
    return kernels.level_batch(qp, qm, beta, root_s, pp, pm, horizon, budget, release,
                               bounded, seed, rep0, nrep)


@dataclass
class LevelBatch:
    """Raw per-replicate level counts; row ``r`` is replicate ``r``."""

    plus_levels: np.ndarray
    minus_levels: np.ndarray
    n_plus: np.ndarray
    n_minus: np.ndarray
    low_plus: np.ndarray
    high_plus: np.ndarray
    low_minus: np.ndarray
    high_minus: np.ndarray
    censored_plus: np.ndarray
    censored_minus: np.ndarray
    released_minus: np.ndarray
    budget_hit: np.ndarray
    events: np.ndarray
    bounded: bool

    def side(self, side: str, k: int):
        if side == "plus":
            return (self.n_plus[:, k], self.low_plus[:, k], self.high_plus[:, k],
                    self.censored_plus[:, k], None)
        return (self.n_minus[:, k], self.low_minus[:, k], self.high_minus[:, k],
                self.censored_minus[:, k], self.released_minus[:, k])


def simulate_levels(params: ModelParams, root_type, plus_levels=(), minus_levels=(),
                    reps: int = DEFAULT_REPS, seed: int = 0, horizon: float = DEFAULT_HORIZON,
                    budget: int = DEFAULT_BUDGET, release: float = DEFAULT_RELEASE,
                    workers: int = 1) -> LevelBatch:
    """Counts ``N+(phi)`` at ``plus_levels`` and ``N-(phi)`` at ``minus_levels``."""
    if not horizon > 0:
        raise DomainError(f"horizon must be > 0, got {horizon}")
    if budget < 1:
        raise DomainError(f"budget must be >= 1, got {budget}")
    pp, pm = _levels(plus_levels), _levels(minus_levels)
    bounded = _bounded(params)
    fn = partial(_level_job, params.q_plus, params.q_minus, params.beta,
                 PType.parse(root_type).sign, pp, pm, float(horizon), int(budget),
                 float(release), bounded, seed_to_int(seed))
    out = run_chunked(fn, reps, workers)
    return LevelBatch(pp, pm, *out, bounded=bounded)


def _root_tag(root_type) -> str:
    return "+" if PType.parse(root_type) is PType.PLUS else "-"


def level_means(params: ModelParams, root_type, plus_levels=(), minus_levels=(), **kw) -> dict:
    """``E N+(phi)`` and ``E N-(phi)`` keyed by ``(quantity, phi)``, e.g. ``("E-N+", 0.0)``."""
    batch = simulate_levels(params, root_type, plus_levels, minus_levels, **kw)
    tag = _root_tag(root_type)
    out = {}
    for side, levels, sym in (("plus", batch.plus_levels, "+"), ("minus", batch.minus_levels, "-")):
        for k, phi in enumerate(levels):
            n, lo, hi, cens, rel = batch.side(side, k)
            q = f"E{tag}N{sym}"
            out[(q, float(phi))] = summarize(
                q, n + lo, n + lo, n + hi, cens, rel, batch.budget_hit,
                phi=float(phi), bracket_only=not batch.bounded,
            )
    return out


def pgf_from_batch(batch: LevelBatch, side: str, k: int, theta: float, quantity: str) -> McEstimate:
    n, lo, hi, cens, rel = batch.side(side, k)
    with np.errstate(over="ignore", under="ignore"):
        upper = theta ** (n + lo)
        # residual R with E R <= hi: Jensen gives theta^hi, Bernoulli gives 1 - (1 - theta) hi
        b = np.where(np.isinf(hi), 0.0, hi)
        resid = np.maximum(theta ** b, 1.0 - (1.0 - theta) * b)
        lower = np.where(np.isinf(hi), 0.0, theta ** n * resid)
    lv = batch.plus_levels if side == "plus" else batch.minus_levels
    return summarize(quantity, upper, lower, upper, cens, rel, batch.budget_hit,
                     phi=float(lv[k]), theta=float(theta), bracket_only=not batch.bounded)


def estimate_pgf(params: ModelParams, root_type, phi: float, theta: float,
                 reps: int = DEFAULT_REPS, seed: int = 0, count: str = "plus", **kw) -> McEstimate:
    """``E theta ** N(phi)`` for the plus count (default) or the minus count."""
    if not 0.0 <= theta < 1.0:
        raise DomainError(f"theta must lie in [0, 1), got {theta}")
    if count not in ("plus", "minus"):
        raise DomainError(f"count must be 'plus' or 'minus', got {count!r}")
    levels = {"plus_levels": [phi]} if count == "plus" else {"minus_levels": [phi]}
    batch = simulate_levels(params, root_type, reps=reps, seed=seed, **levels, **kw)
    sym = "+" if count == "plus" else "-"
    return pgf_from_batch(batch, count, 0, theta, f"E{_root_tag(root_type)}theta^N{sym}")


def _winding_job(qp, qm, beta, n_stages, horizon, budget, release, bounded, seed, rep0, nrep):
    return kernels.winding_batch(qp, qm, beta, n_stages, horizon, budget, release, bounded,
                                 seed, rep0, nrep)


def winding_means(params: ModelParams, n_max: int = 1, reps: int = DEFAULT_REPS, seed: int = 0,
                  horizon: float = DEFAULT_HORIZON, budget: int = DEFAULT_BUDGET,
                  release: float = DEFAULT_RELEASE, workers: int = 1) -> dict:
    """``E W+(n)`` and ``E W-(n)`` for ``n <= n_max`` under a plus root."""
    if n_max < 0:
        raise DomainError(f"n_max must be >= 0, got {n_max}")
    n_stages = 2 * n_max + 2
    bounded = _bounded(params)
    fn = partial(_winding_job, params.q_plus, params.q_minus, params.beta, n_stages,
                 float(horizon), int(budget), float(release), bounded, seed_to_int(seed))
    cnt, low, high, cens, rel, hit, _ = run_chunked(fn, reps, workers)
    out = {}
    for j in range(n_stages):
        q = f"W{'+' if j % 2 == 0 else '-'}({j // 2})"
        out[q] = summarize(q, cnt[:, j] + low[:, j], cnt[:, j] + low[:, j], cnt[:, j] + high[:, j],
                           cens[:, j], rel[:, j], hit, bracket_only=not bounded)
    return out


@dataclass
class NestedSweep:
    betas: list[float]
    estimates: list[McEstimate]
    pathwise_monotone_fraction: float
    means_nondecreasing: bool

    def to_csv(self) -> str:
        return to_csv(self.estimates)


def _nested_job(qp, qm, beta0, betas, psi, horizon, budget, release, bc_hi, seed, rep0, nrep):
    return kernels.nested_batch(qp, qm, beta0, betas, psi, horizon, budget, release, bc_hi,
                                seed, rep0, nrep)


def nested_sweep(params0: ModelParams, betas, horizon: float = DEFAULT_HORIZON,
                 reps: int = DEFAULT_REPS, seed: int = 0, psi: float = 0.0,
                 budget: int = DEFAULT_BUDGET, release: float = DEFAULT_RELEASE,
                 workers: int = 1) -> NestedSweep:
    """``N-(psi, beta)`` for every ``beta`` in ``betas`` on shared trees at ``params0.beta``."""
    bs = [float(b) for b in betas]
    if not bs:
        raise DomainError("betas must be non-empty")
    if any(not 0 < b <= params0.beta for b in bs):
        raise DomainError(f"betas must lie in (0, beta0={params0.beta}], got {bs}")
    if psi < 0:
        raise DomainError(f"psi must be >= 0, got {psi}")
    asc = np.array(sorted(set(bs)))
    dc = derive_constants(params0)
    bc_hi = dc.beta_c + CRITICAL_RTOL * max(1.0, dc.beta_c)
    fn = partial(_nested_job, params0.q_plus, params0.q_minus, params0.beta, asc, float(psi),
                 float(horizon), int(budget), float(release), bc_hi, seed_to_int(seed))
    cnt, low, high, cens, rel, hit, _ = run_chunked(fn, reps, workers)
    mono = np.all(np.diff(cnt, axis=1) >= 0, axis=1)
    by_beta = {}
    for j, b in enumerate(asc):
        by_beta[float(b)] = summarize(
            f"E+N-(beta={float(b):.12g})", cnt[:, j] + low[:, j], cnt[:, j] + low[:, j],
            cnt[:, j] + high[:, j], cens[:, j], rel[:, j], hit, phi=float(psi),
            bracket_only=bool(b > bc_hi),
        )
    means = [by_beta[float(b)].mean for b in asc]
    return NestedSweep(
        betas=bs,
        estimates=[by_beta[b] for b in bs],
        pathwise_monotone_fraction=float(np.mean(mono)),
        means_nondecreasing=bool(np.all(np.diff(means) >= 0)),
    )


def _dip_job(qp, qm, beta, horizons, budget, seed, rep0, nrep):
    return kernels.dip_batch(qp, qm, beta, horizons, budget, seed, rep0, nrep)


def dip_fraction(params: ModelParams, horizon: float = DEFAULT_HORIZON, reps: int = DEFAULT_REPS,
                 seed: int = 0, budget: int = DEFAULT_BUDGET, workers: int = 1) -> McEstimate:
    """Fraction of plus-rooted replicates with some particle left of 0 before ``horizon``.

    Replicates that hit the budget undecided count as "no" in ``mean`` and
    ``low`` and as "yes" in ``high``.
    """
    hs = [h for h in (0.5, 1.0, 2.0, 4.0, 8.0, 16.0) if h < horizon] + [float(horizon)]
    fn = partial(_dip_job, params.q_plus, params.q_minus, params.beta, np.array(hs), int(budget),
                 seed_to_int(seed))
    dip, und, _ = run_chunked(fn, reps, workers)
    d = dip.astype(float)
    return summarize("P+[dip]", d, d, d + und, und, None, und, phi=0.0)
