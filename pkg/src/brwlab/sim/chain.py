"""Functionals of one particle's type chain, without branching."""

from __future__ import annotations

import enum
import math
from functools import partial

import numpy as np

from brwlab.errors import DomainError
from brwlab.model import ModelParams
from brwlab.sim import kernels
from brwlab.sim.estimators import DEFAULT_REPS, McEstimate, run_chunked, summarize
from brwlab.sim.rng import seed_to_int

DEFAULT_FP_HORIZON = 60.0


class ChainMode(str, enum.Enum):
    FIRST_PASSAGE_LAPLACE = "FirstPassageLaplace"
    LARGE_DEVIATION_FREQ = "LargeDeviationFreq"


def _fp_job(qp, qm, beta, horizon, seed, rep0, nrep):
    return kernels.first_passage_batch(qp, qm, beta, horizon, seed, rep0, nrep)


def _pos_job(qp, qm, times, seed, rep0, nrep):
    return kernels.chain_positions_batch(qp, qm, times, seed, rep0, nrep)


def first_passage_laplace(params: ModelParams, reps: int = DEFAULT_REPS, seed: int = 0,
                          horizon: float = DEFAULT_FP_HORIZON, workers: int = 1) -> McEstimate:
    """``E+ exp(-beta tau)`` with ``tau`` the first time the path goes negative.

    ``tau = inf`` contributes 0; a replicate still non-negative at ``horizon``
    contributes the bracket ``[0, exp(-beta horizon)]``.
    """
    if not horizon > 0:
        raise DomainError(f"horizon must be > 0, got {horizon}")
    fn = partial(_fp_job, params.q_plus, params.q_minus, params.beta, float(horizon),
                 seed_to_int(seed))
    val, cens = run_chunked(fn, reps, workers)
    high = val + cens * math.exp(-params.beta * horizon)
    return summarize("E+exp(-beta*tau)", val, val, high, cens)


def large_deviation_freq(params: ModelParams, times, eps: float, reps: int = DEFAULT_REPS,
                         seed: int = 0, workers: int = 1) -> list[McEstimate]:
    """``exp(beta t) P+[Phi(t) <= eps t]`` for each ``t`` in ``times``."""
    ts = np.asarray(times, dtype=float).reshape(-1)
    if len(ts) == 0 or np.any(ts <= 0):
        raise DomainError(f"times must be positive, got {ts.tolist()}")
    order = np.argsort(ts)
    fn = partial(_pos_job, params.q_plus, params.q_minus, ts[order], seed_to_int(seed))
    pos = run_chunked(fn, reps, workers)
    out = [None] * len(ts)
    for col, j in enumerate(order):
        t = ts[j]
        v = math.exp(params.beta * t) * (pos[:, col] <= eps * t)
        out[j] = summarize(f"exp(beta*t)P+[Phi(t)<={eps:g}t]", v, v, v, phi=float(t))
    return out


def chain_functionals(params: ModelParams, mode, args: dict | None = None,
                      reps: int = DEFAULT_REPS, seed: int = 0, workers: int = 1):
    """Dispatch on ``mode``.

    ``FirstPassageLaplace`` takes ``{"horizon": ...}`` and returns one estimate;
    ``LargeDeviationFreq`` takes ``{"times": [...], "eps": ...}`` and returns a list.
    """
    mode = ChainMode(mode)
    args = dict(args or {})
    if mode is ChainMode.FIRST_PASSAGE_LAPLACE:
        return first_passage_laplace(params, reps, seed, args.get("horizon", DEFAULT_FP_HORIZON),
                                     workers)
    if "times" not in args or "eps" not in args:
        raise DomainError("LargeDeviationFreq needs 'times' and 'eps'")
    return large_deviation_freq(params, args["times"], float(args["eps"]), reps, seed, workers)
