"""The two probabilistic curves of the pgf phase portrait.

``x = H+-(y)`` carries the pgf of N-(0) under the plus start and ``y = H-+(x)``
that of N+(0) under the minus start.  Above beta_c the first one is the series
curve ``x = A(y)``; at or below beta_c it is found by shooting from the bottom
edge of the square.
"""

from __future__ import annotations

import dataclasses
import enum
import math
from dataclasses import dataclass, field

import numpy as np

from brwlab import series
from brwlab.dynsys import (
    Controls,
    Direction,
    Exit,
    PhasePoint,
    Trajectory,
    field_forward,
    integrate,
    jacobian_at_origin,
)
from brwlab.errors import DomainError, HorizonTooShortError, SpectralError
from brwlab.model import (
    ModelParams,
    Regime,
    derive_constants,
    linearization_at_one_one,
    linearization_matrix,
)

DEFAULT_HORIZON = 400.0
DEFAULT_TOL = 1e-9


class CurveKind(str, enum.Enum):
    HPLUS_MINUS = "HplusMinus"
    HMINUS_PLUS = "HminusPlus"


class Method(str, enum.Enum):
    SERIES_A = "SeriesA"
    SHOOTING = "Shooting"
    REVERSE_FROM_CORNER = "ReverseFromCorner"


class Shot(str, enum.Enum):
    TOO_SMALL = "too_small"
    TOO_LARGE = "too_large"


@dataclass(frozen=True)
class HpmZero:
    """``H+-(0)`` with the bisection bracket it came from."""

    value: float
    bracket: tuple[float, float]
    iterations: int

    def __float__(self) -> float:
        return self.value

    @property
    def width(self) -> float:
        return self.bracket[1] - self.bracket[0]


@dataclass
class CurveResult:
    points: Trajectory
    kind: CurveKind
    endpoint_values: dict
    method: Method
    bracket: tuple[float, float] | None = None
    notes: dict = field(default_factory=dict)

    def summary(self) -> dict:
        return {
            "kind": self.kind.value,
            "value_at_0": self.endpoint_values["value_at_0"],
            "value_at_1_minus": self.endpoint_values["value_at_1_minus"],
            "bracket": list(self.bracket) if self.bracket else None,
            "method": self.method.value,
            "exit": self.points.exit.value,
        }


def corner_side(params: ModelParams, p) -> Shot:
    """Decide from the linearization at (1, 1) how a reversed orbit near the corner ends.

    The reversed flow near (1, 1) is ``w' = -M w``.  Its asymptotic direction
    is the slow-eigenvector component of ``w`` (or ``-N w`` with ``N = M - lam I``
    when ``M`` is a Jordan block).  Pointing down-left means the orbit reaches
    the corner from inside the square.
    """
    w = np.array([p[0] - 1.0, p[1] - 1.0])
    mat = linearization_matrix(params)
    info = linearization_at_one_one(params)
    if len(info.eigenvectors) == 0:
        raise SpectralError(f"complex spectrum at (1,1) for {params}: no node to classify against")
    if len(info.eigenvectors) == 1:
        lam = info.eigenvalues[0].real
        d = -(mat - lam * np.eye(2)) @ w
        e = np.array(info.eigenvectors[0])
        return Shot.TOO_SMALL if float(d @ e) * e[0] < 0 else Shot.TOO_LARGE
    lams = [z.real for z in info.eigenvalues]
    basis = np.array(info.eigenvectors).T
    coef = np.linalg.solve(basis, w)
    slow = int(np.argmin(lams))
    d = coef[slow] * basis[:, slow]
    return Shot.TOO_SMALL if d[0] < 0 and d[1] < 0 else Shot.TOO_LARGE


def classify_shot(params: ModelParams, x0: float, horizon: float = DEFAULT_HORIZON,
                  controls: Controls | None = None) -> tuple[Shot, Trajectory]:
    ctl = controls or Controls()
    # samples are not needed to classify a shot
    ctl = dataclasses.replace(ctl, emit_step=max(ctl.emit_step, horizon))
    tr = integrate(params, (x0, 0.0), Direction.REVERSED, horizon, ctl)
    if tr.exit is Exit.EXIT_RIGHT:
        return Shot.TOO_LARGE, tr
    if tr.exit is Exit.EXIT_TOP:
        return Shot.TOO_SMALL, tr
    if tr.exit is Exit.REACHED_CORNER_BALL:
        return corner_side(params, tr.end), tr
    raise HorizonTooShortError(
        f"shot from x0={x0!r} ended with {tr.exit.value} at phi={tr.phi[-1]:.6g}, "
        f"point={tuple(tr.end)!r}; increase the horizon"
    )


def hpm_at_zero(params: ModelParams, tol: float = DEFAULT_TOL, horizon: float = DEFAULT_HORIZON,
                controls: Controls | None = None) -> HpmZero:
    """``H+-(0) = P+[N-(0) = 0]``.

    Zero above beta_c.  Otherwise bisect on the start ``(x0, 0)`` of the
    reversed system: starts that exit through ``x = 1`` are too large, starts
    that reach (1, 1) from inside (or exit through the top) are too small.
    """
    if tol < 1e-10:
        raise DomainError(f"tol must be >= 1e-10, got {tol}")
    if derive_constants(params).regime is Regime.SUPERCRITICAL:
        return HpmZero(0.0, (0.0, 0.0), 0)
    lo, hi = 1e-3, 1.0 - 1e-9
    if classify_shot(params, lo, horizon, controls)[0] is not Shot.TOO_SMALL:
        raise HorizonTooShortError(f"lower shooting start {lo} does not undershoot")
    if classify_shot(params, hi, horizon, controls)[0] is not Shot.TOO_LARGE:
        raise HorizonTooShortError(f"upper shooting start {hi} does not overshoot")
    it = 0
    while hi - lo >= tol:
        mid = 0.5 * (lo + hi)
        if classify_shot(params, mid, horizon, controls)[0] is Shot.TOO_SMALL:
            lo = mid
        else:
            hi = mid
        it += 1
    return HpmZero(0.5 * (lo + hi), (lo, hi), it)


def _series_curve(params: ModelParams, emit_step: float, ball: float, horizon: float) -> Trajectory:
    """``(A(y(phi)), y(phi))`` from the top edge, with ``y`` solving its autonomous equation."""
    coeffs = series.compute_coeffs(params)
    qm, b = params.q_minus, params.beta

    def ydot(y):
        return qm * (series.evaluate_A(coeffs, min(max(y, 0.0), 1.0)) - y) + b * (y * y - y)

    h = emit_step
    y, phi = 1.0, 0.0
    phis, xs, ys = [0.0], [series.evaluate_A(coeffs, 1.0)], [1.0]
    exit_kind = Exit.INTERIOR_AT_HORIZON
    while phi < horizon:
        k1 = ydot(y)
        k2 = ydot(y + 0.5 * h * k1)
        k3 = ydot(y + 0.5 * h * k2)
        k4 = ydot(y + h * k3)
        y += h / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4)
        phi += h
        x = series.evaluate_A(coeffs, y)
        phis.append(phi)
        xs.append(x)
        ys.append(y)
        if math.hypot(x, y) < ball:
            exit_kind = Exit.REACHED_ORIGIN_BALL
            break
    tr = Trajectory(Direction.REVERSED, np.array(phis), np.array(xs), np.array(ys), exit_kind)
    tr.meta["series_n_max"] = coeffs.n_max
    return tr


def hpm_curve(params: ModelParams, tol: float = DEFAULT_TOL, horizon: float = DEFAULT_HORIZON,
              controls: Controls | None = None) -> CurveResult:
    ctl = controls or Controls()
    if derive_constants(params).regime is Regime.SUPERCRITICAL:
        tr = _series_curve(params, ctl.emit_step, ctl.ball_radius, horizon)
        a1m = float(tr.x[0])
        return CurveResult(
            points=tr,
            kind=CurveKind.HPLUS_MINUS,
            endpoint_values={"value_at_0": 0.0, "value_at_1_minus": a1m},
            method=Method.SERIES_A,
            notes={"bound": params.q_plus / (params.q_minus + params.beta)},
        )
    h0 = hpm_at_zero(params, tol, horizon, ctl)
    tr = integrate(params, (h0.bracket[0], 0.0), Direction.REVERSED, horizon, ctl)
    return CurveResult(
        points=tr,
        kind=CurveKind.HPLUS_MINUS,
        endpoint_values={"value_at_0": h0.value, "value_at_1_minus": 1.0},
        method=Method.SHOOTING,
        bracket=h0.bracket,
    )


def origin_direction(params: ModelParams) -> tuple[np.ndarray, float]:
    """Eigen-direction at (0, 0) along which ``y = H-+(x)`` leaves the origin.

    Among eigenvectors of the forward Jacobian with both components positive,
    the one with the smaller ``|eigenvalue|``.
    """
    jac = jacobian_at_origin(params)
    lams, vecs = np.linalg.eig(jac)
    cands = []
    for lam, v in zip(lams, vecs.T):
        if abs(lam.imag) > 0 or np.any(np.abs(v.imag) > 0):
            continue
        v = v.real
        if v[0] < 0:
            v = -v
        if v[0] > 0 and v[1] > 0:
            cands.append((abs(lam.real), lam.real, v / np.linalg.norm(v)))
    if not cands:
        raise SpectralError(f"no interior-pointing eigenvector at (0,0); jacobian={jac.tolist()}")
    cands.sort(key=lambda c: c[0])
    return cands[0][2], cands[0][1]


def hmp_curve(params: ModelParams, horizon: float = DEFAULT_HORIZON,
              controls: Controls | None = None) -> CurveResult:
    ctl = controls or Controls()
    v, lam = origin_direction(params)
    r0 = 2.0 * ctl.ball_radius
    tr = integrate(params, (r0 * v[0], r0 * v[1]), Direction.REVERSED, horizon, ctl)
    regime = derive_constants(params).regime
    if regime is Regime.SUPERCRITICAL:
        if tr.exit is Exit.EXIT_RIGHT:
            end = float(tr.y[-1])
        else:
            raise SpectralError(f"H-+ trace left the square via {tr.exit.value}, expected x = 1")
    else:
        if tr.exit is not Exit.REACHED_CORNER_BALL:
            raise SpectralError(f"H-+ trace ended with {tr.exit.value}, expected the (1,1) ball")
        end = 1.0
    return CurveResult(
        points=tr,
        kind=CurveKind.HMINUS_PLUS,
        endpoint_values={"value_at_0": 0.0, "value_at_1_minus": end},
        method=Method.REVERSE_FROM_CORNER,
        notes={"origin_eigenvalue": lam, "origin_direction": v.tolist()},
    )


def hmp_value(curve: CurveResult, x: float) -> float:
    """``H-+(x)`` by linear interpolation along the traced polyline."""
    if curve.kind is not CurveKind.HMINUS_PLUS:
        raise ValueError("hmp_value needs an HminusPlus curve")
    # the trace starts a tiny distance from the origin, which lies on the curve
    xs = np.concatenate([[0.0], curve.points.x])
    ys = np.concatenate([[0.0], curve.points.y])
    if not 0.0 <= x <= xs[-1]:
        raise ValueError(f"x={x} outside traced range [0, {xs[-1]}]")
    return float(np.interp(x, xs, ys))


def boundary_solutions(params: ModelParams, theta: int, tol: float = DEFAULT_TOL,
                       horizon: float = DEFAULT_HORIZON, controls: Controls | None = None) -> Trajectory:
    """The ``theta = 0`` and ``theta = 1`` solutions of the reversed system.

    ``theta = 0``: ``(P+[N-(phi) = 0], P-[N-(phi) = 0])``.
    ``theta = 1``: ``(P+[N-(phi) < inf], P-[N-(phi) < inf])``.
    """
    ctl = controls or Controls()
    regime = derive_constants(params).regime
    if theta not in (0, 1):
        raise ValueError(f"theta must be 0 or 1, got {theta}")
    if theta == 0:
        if regime is Regime.SUPERCRITICAL:
            return _constant(0.0, 0.0, horizon, Exit.REACHED_ORIGIN_BALL)
        h0 = hpm_at_zero(params, tol, horizon, ctl)
        tr = integrate(params, (h0.bracket[0], 0.0), Direction.REVERSED, horizon, ctl)
        tr.meta["bracket"] = h0.bracket
        return tr
    if regime is not Regime.SUPERCRITICAL:
        return _constant(1.0, 1.0, horizon, Exit.REACHED_CORNER_BALL)
    coeffs = series.compute_coeffs(params)
    return integrate(params, (series.evaluate_A(coeffs, 1.0), 1.0), Direction.REVERSED, horizon, ctl)


def _constant(x: float, y: float, horizon: float, exit_kind: Exit) -> Trajectory:
    return Trajectory(Direction.REVERSED, np.array([0.0, horizon]), np.array([x, x]),
                      np.array([y, y]), exit_kind)


def curves_cross(hpm: CurveResult, hmp: CurveResult, corner_exclusion: float = 1e-3) -> bool:
    """Whether the two stored polylines cross in the open square.

    Points within ``corner_exclusion`` of (0, 0) or (1, 1), where the curves may
    legitimately meet, are ignored.
    """
    hx, hy = hmp.points.x, hmp.points.y
    order = np.argsort(hx)
    hx, hy = hx[order], hy[order]
    px, py = hpm.points.x, hpm.points.y
    keep = (
        (np.hypot(px, py) > corner_exclusion)
        & (np.hypot(px - 1.0, py - 1.0) > corner_exclusion)
        & (px > 0) & (px < 1) & (py > 0) & (py < 1)
        & (px >= hx[0]) & (px <= hx[-1])
    )
    if keep.sum() < 2:
        return False
    s = py[keep] - np.interp(px[keep], hx, hy)
    s = s[s != 0]
    return bool(np.any(np.sign(s[1:]) != np.sign(s[:-1])))


def slope_segment(params: ModelParams, n: int = 20) -> np.ndarray:
    """``n`` interior points of the slope-``m`` segment from (1, 1), clipped to the square."""
    m = derive_constants(params).m
    x_low = 1.0 - 1.0 / m
    t = np.arange(1, n + 1) / (n + 1)
    xs = x_low + t * (1.0 - x_low)
    ys = 1.0 - m * (1.0 - xs)
    return np.column_stack([xs, ys])


def field_slope(params: ModelParams, p) -> float:
    dx, dy = field_forward(params, p)
    return dy / dx


def origin_slope_identity(params: ModelParams) -> float:
    """Slope of ``H-+`` at the origin predicted from the series: ``q- a1 / q+``."""
    return params.q_minus * series.a1_closed_form(params) / params.q_plus


__all__ = [
    "CurveKind",
    "CurveResult",
    "HpmZero",
    "Method",
    "PhasePoint",
    "Shot",
    "boundary_solutions",
    "classify_shot",
    "corner_side",
    "curves_cross",
    "field_slope",
    "hmp_curve",
    "hmp_value",
    "hpm_at_zero",
    "hpm_curve",
    "origin_direction",
    "origin_slope_identity",
    "slope_segment",
]
