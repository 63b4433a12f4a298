"""Power-series coefficients ``a_n`` of ``A(y) = sum a_n y^n``.

``x = A(y)`` is an integral curve through the origin of the phi-reversed pgf
system.  The coefficients come from matching powers of ``y``; ``a_1`` has a
closed form and every later ``a_n`` is a positive combination of earlier ones.
"""

from __future__ import annotations

import io
import math
from dataclasses import dataclass

from brwlab.errors import DomainError, InternalError
from brwlab.model import ModelParams

DEFAULT_N_MAX = 200


@dataclass(frozen=True)
class SeriesCoeffs:
    a: tuple[float, ...]
    partial_sum: float
    n_max: int
    bound: float  # q_plus / (q_minus + beta)

    def to_csv(self) -> str:
        buf = io.StringIO()
        buf.write("n,a_n\n")
        for n, v in enumerate(self.a):
            buf.write(f"{n},{format(v, '.17g')}\n")
        return buf.getvalue()


@dataclass(frozen=True)
class OffspringDist:
    p: dict[int, float]
    p_inf: float
    total: float
    p_inf_is_upper_estimate: bool = True


def a1_closed_form(params: ModelParams) -> float:
    kp = params.q_plus + params.beta
    km = params.q_minus + params.beta
    s = km + kp
    root = math.sqrt(s * s - 4.0 * params.q_minus * params.q_plus)
    first = (s - root) / (2.0 * params.q_minus)
    second = 2.0 * params.q_plus / (s + root)
    # the subtraction form loses about eps * s / q- absolutely
    if abs(first - second) > 1e-14 * max(1.0, s / params.q_minus):
        raise InternalError(f"a1 forms disagree: {first!r} vs {second!r} for {params}")
    return second


def compute_coeffs(params: ModelParams, n_max: int = DEFAULT_N_MAX) -> SeriesCoeffs:
    if n_max < 2:
        raise DomainError(f"n_max must be >= 2, got {n_max}")
    qp, qm, b = params.q_plus, params.q_minus, params.beta
    kp, km = qp + b, qm + b
    a1 = a1_closed_form(params)
    if not (a1 < kp / qm and a1 < km / qm):
        raise InternalError(f"a1={a1} breaks divisor positivity for {params}")
    a = [0.0, a1]
    for n in range(2, n_max + 1):
        div = kp + n * km - (n + 1) * qm * a1
        if div <= 0:
            raise InternalError(f"non-positive divisor {div} at n={n} for {params}")
        terms = [b * a[k] * a[n - k] for k in range(1, n)]
        terms += [qm * (k + 1) * a[k + 1] * a[n - k] for k in range(1, n - 1)]
        terms.append(b * (n - 1) * a[n - 1])
        a.append(math.fsum(terms) / div)
    return SeriesCoeffs(
        a=tuple(a),
        partial_sum=math.fsum(a),
        n_max=n_max,
        bound=qp / (qm + b),
    )


def evaluate_A(coeffs: SeriesCoeffs, y: float) -> float:
    """Horner evaluation of the degree-``n_max`` truncation."""
    if not 0.0 <= y <= 1.0:
        raise DomainError(f"y must lie in [0, 1], got {y}")
    acc = 0.0
    for c in reversed(coeffs.a):
        acc = acc * y + c
    return acc


def tail_estimate(coeffs: SeriesCoeffs, y: float = 1.0) -> float:
    """Heuristic size of the omitted tail ``sum_{n > N} a_n y^n``.

    Extrapolates geometrically with the ratio of the last two coefficients.
    This is not a bound: nothing forces the coefficients to decay geometrically.
    """
    a = coeffs.a
    if a[-2] <= 0:
        return 0.0
    r = a[-1] / a[-2] * y
    if r >= 1.0:
        return math.inf
    return a[-1] * r / (1.0 - r)


def offspring_distribution(coeffs: SeriesCoeffs, params: ModelParams) -> OffspringDist:
    """Offspring law of the one-type branching process behind ``y' = q-(A(y) - y) + beta(y^2 - y)``."""
    km = params.q_minus + params.beta
    a = coeffs.a
    p = {n: params.q_minus * a[n] / km for n in range(1, len(a))}
    p[2] += params.beta / km
    total = math.fsum(p.values())
    p_inf = params.q_minus * (1.0 - coeffs.partial_sum) / km
    return OffspringDist(p=p, p_inf=p_inf, total=total)


def summary(coeffs: SeriesCoeffs, params: ModelParams) -> dict:
    dist = offspring_distribution(coeffs, params)
    return {
        "a1": coeffs.a[1],
        "partial_sum": coeffs.partial_sum,
        "bound": coeffs.bound,
        "p_inf": dist.p_inf,
        "n_max": coeffs.n_max,
        "tail_estimate_heuristic": tail_estimate(coeffs),
    }
