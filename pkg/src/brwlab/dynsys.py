"""The planar pgf vector field and an adaptive integrator on the unit square.

Forward field (``x = E+ theta^N+(phi)``, ``y = E- theta^N+(phi)``)::

    x' = q+ (y - x) + beta (x^2 - x)
    y' = -[q- (x - y) + beta (y^2 - y)]

The reversed system is its exact negation.  Trajectories are integrated with an
embedded Dormand-Prince 5(4) pair; integration stops at the horizon, on entry
to a small ball around either equilibrium corner, or on leaving the square, in
which case the exit point is located by bisection on the offending step.
"""

from __future__ import annotations

import enum
import io
import math
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from brwlab.errors import DomainError, StiffnessError
from brwlab.model import ModelParams


class PhasePoint(NamedTuple):
    x: float
    y: float


class Direction(str, enum.Enum):
    FORWARD = "forward"
    REVERSED = "reversed"


class Exit(str, enum.Enum):
    INTERIOR_AT_HORIZON = "InteriorAtHorizon"
    REACHED_ORIGIN_BALL = "ReachedOriginBall"
    REACHED_CORNER_BALL = "ReachedCornerBall"
    EXIT_LEFT = "ExitLeft"
    EXIT_RIGHT = "ExitRight"
    EXIT_TOP = "ExitTop"
    EXIT_BOTTOM = "ExitBottom"


@dataclass(frozen=True)
class Controls:
    rtol: float = 1e-10
    atol: float = 1e-12
    ball_radius: float = 1e-6
    emit_step: float = 0.01
    exit_tol: float = 1e-12
    h_min: float = 1e-14
    h_init: float = 1e-3
    max_steps: int = 2_000_000


DEFAULT_CONTROLS = Controls()


@dataclass
class Trajectory:
    direction: Direction
    phi: np.ndarray
    x: np.ndarray
    y: np.ndarray
    exit: Exit
    meta: dict = field(default_factory=dict)

    def __len__(self) -> int:
        return len(self.phi)

    @property
    def end(self) -> PhasePoint:
        return PhasePoint(float(self.x[-1]), float(self.y[-1]))

    @property
    def start(self) -> PhasePoint:
        return PhasePoint(float(self.x[0]), float(self.y[0]))

    def samples(self) -> list[tuple[float, PhasePoint]]:
        return [(float(p), PhasePoint(float(a), float(b))) for p, a, b in zip(self.phi, self.x, self.y)]

    def to_csv(self) -> str:
        buf = io.StringIO()
        buf.write("phi,x,y\n")
        for p, a, b in zip(self.phi, self.x, self.y):
            buf.write(f"{_fmt(p)},{_fmt(a)},{_fmt(b)}\n")
        buf.write(f"# exit={self.exit.value}\n")
        return buf.getvalue()


def _fmt(v) -> str:
    return format(float(v), ".17g")


def field_forward(params: ModelParams, p) -> tuple[float, float]:
    x, y = p
    qp, qm, b = params.q_plus, params.q_minus, params.beta
    return qp * (y - x) + b * (x * x - x), -(qm * (x - y) + b * (y * y - y))


def field_reversed(params: ModelParams, p) -> tuple[float, float]:
    dx, dy = field_forward(params, p)
    return -dx, -dy


def _make_rhs(params: ModelParams, direction: Direction):
    qp, qm, b = params.q_plus, params.q_minus, params.beta
    sgn = 1.0 if Direction(direction) is Direction.FORWARD else -1.0

    def rhs(x, y):
        return (
            sgn * (qp * (y - x) + b * (x * x - x)),
            -sgn * (qm * (x - y) + b * (y * y - y)),
        )

    return rhs


# Dormand-Prince 5(4) tableau
_C = (0.0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1.0, 1.0)
_A = (
    (),
    (1 / 5,),
    (3 / 40, 9 / 40),
    (44 / 45, -56 / 15, 32 / 9),
    (19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729),
    (9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656),
    (35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84),
)
_B = _A[6]
_E = (71 / 57600, 0.0, -71 / 16695, 71 / 1920, -17253 / 339200, 22 / 525, -1 / 40)


def _dp_step(rhs, x, y, k1, h):
    """One DP45 step; returns the 5th-order state, its slope and the error vector."""
    a = _A
    k1x, k1y = k1
    k2x, k2y = rhs(x + h * a[1][0] * k1x, y + h * a[1][0] * k1y)
    k3x, k3y = rhs(
        x + h * (a[2][0] * k1x + a[2][1] * k2x),
        y + h * (a[2][0] * k1y + a[2][1] * k2y),
    )
    k4x, k4y = rhs(
        x + h * (a[3][0] * k1x + a[3][1] * k2x + a[3][2] * k3x),
        y + h * (a[3][0] * k1y + a[3][1] * k2y + a[3][2] * k3y),
    )
    k5x, k5y = rhs(
        x + h * (a[4][0] * k1x + a[4][1] * k2x + a[4][2] * k3x + a[4][3] * k4x),
        y + h * (a[4][0] * k1y + a[4][1] * k2y + a[4][2] * k3y + a[4][3] * k4y),
    )
    k6x, k6y = rhs(
        x + h * (a[5][0] * k1x + a[5][1] * k2x + a[5][2] * k3x + a[5][3] * k4x + a[5][4] * k5x),
        y + h * (a[5][0] * k1y + a[5][1] * k2y + a[5][2] * k3y + a[5][3] * k4y + a[5][4] * k5y),
    )
    b = _B
    xn = x + h * (b[0] * k1x + b[2] * k3x + b[3] * k4x + b[4] * k5x + b[5] * k6x)
    yn = y + h * (b[0] * k1y + b[2] * k3y + b[3] * k4y + b[4] * k5y + b[5] * k6y)
    k7 = rhs(xn, yn)
    e = _E
    ex = h * (e[0] * k1x + e[2] * k3x + e[3] * k4x + e[4] * k5x + e[5] * k6x + e[6] * k7[0])
    ey = h * (e[0] * k1y + e[2] * k3y + e[3] * k4y + e[4] * k5y + e[5] * k6y + e[6] * k7[1])
    return xn, yn, k7, ex, ey


def _outside(x, y) -> bool:
    return x < 0.0 or x > 1.0 or y < 0.0 or y > 1.0


def _exit_side(x, y) -> Exit:
    viol = {
        Exit.EXIT_LEFT: -x,
        Exit.EXIT_RIGHT: x - 1.0,
        Exit.EXIT_BOTTOM: -y,
        Exit.EXIT_TOP: y - 1.0,
    }
    return max(viol, key=viol.get)


def _clamp_to_side(x, y, side: Exit) -> tuple[float, float]:
    if side is Exit.EXIT_LEFT:
        x = 0.0
    elif side is Exit.EXIT_RIGHT:
        x = 1.0
    elif side is Exit.EXIT_BOTTOM:
        y = 0.0
    elif side is Exit.EXIT_TOP:
        y = 1.0
    return min(max(x, 0.0), 1.0), min(max(y, 0.0), 1.0)


def in_unit_square(p) -> bool:
    return 0.0 <= p[0] <= 1.0 and 0.0 <= p[1] <= 1.0


def integrate(
    params: ModelParams,
    start,
    direction: Direction | str,
    horizon: float,
    controls: Controls | None = None,
) -> Trajectory:
    """Integrate from ``start`` for ``phi`` in ``[0, horizon]``.

    Samples are emitted on the grid ``k * controls.emit_step``: a step that
    would pass a grid point is shortened to land on it, so every sample is a
    solver state.  The final state is always included.
    """
    ctl = controls or DEFAULT_CONTROLS
    direction = Direction(direction)
    x, y = float(start[0]), float(start[1])
    if not in_unit_square((x, y)):
        raise DomainError(f"start {start!r} is outside the closed unit square")
    if horizon <= 0:
        raise DomainError(f"horizon must be > 0, got {horizon}")
    rhs = _make_rhs(params, direction)
    delta = ctl.ball_radius

    phis, xs, ys = [0.0], [x], [y]

    def finish(exit_kind: Exit) -> Trajectory:
        return Trajectory(direction, np.array(phis), np.array(xs), np.array(ys), exit_kind)

    if math.hypot(x - 1.0, y - 1.0) < delta:
        return finish(Exit.REACHED_CORNER_BALL)
    if math.hypot(x, y) < delta:
        return finish(Exit.REACHED_ORIGIN_BALL)

    phi = 0.0
    h = ctl.h_init
    k1 = rhs(x, y)
    n_emit = 1
    for _ in range(ctl.max_steps):
        next_emit = n_emit * ctl.emit_step
        h_nat = min(h, horizon - phi)
        last_step = h_nat >= horizon - phi
        if next_emit < horizon and phi + h_nat >= next_emit:
            h = next_emit - phi
            landing = True
            last_step = False
        else:
            h = h_nat
            landing = False
        if h <= 1e-14 * max(1.0, phi):
            # already on the grid point up to rounding
            _append_final(phis, xs, ys, next_emit, x, y)
            n_emit += 1
            continue
        while True:
            xn, yn, k7, ex, ey = _dp_step(rhs, x, y, k1, h)
            sx = ctl.atol + ctl.rtol * max(abs(x), abs(xn))
            sy = ctl.atol + ctl.rtol * max(abs(y), abs(yn))
            err = math.sqrt(0.5 * ((ex / sx) ** 2 + (ey / sy) ** 2))
            if err <= 1.0 and math.isfinite(err):
                break
            factor = 0.2 if not math.isfinite(err) else max(0.2, 0.9 * err ** -0.2)
            h *= factor
            last_step = False
            landing = False
            if h < ctl.h_min:
                raise StiffnessError("step size underflow", phi, (x, y))

        if _outside(xn, yn):
            # bisect on the step length for the first boundary crossing
            lo, hi = 0.0, h
            hx, hy = xn, yn
            while hi - lo > ctl.exit_tol:
                mid = 0.5 * (lo + hi)
                mx, my, _, _, _ = _dp_step(rhs, x, y, k1, mid)
                if _outside(mx, my):
                    hi, hx, hy = mid, mx, my
                else:
                    lo = mid
            side = _exit_side(hx, hy)
            cx, cy = _clamp_to_side(hx, hy, side)
            _append_final(phis, xs, ys, phi + hi, cx, cy)
            return finish(side)

        if last_step:
            phi = horizon
        elif landing:
            phi = next_emit
        else:
            phi += h
        x, y, k1 = xn, yn, k7
        if landing:
            phis.append(phi)
            xs.append(x)
            ys.append(y)
            n_emit += 1

        if math.hypot(x - 1.0, y - 1.0) < delta:
            _append_final(phis, xs, ys, phi, x, y)
            return finish(Exit.REACHED_CORNER_BALL)
        if math.hypot(x, y) < delta:
            _append_final(phis, xs, ys, phi, x, y)
            return finish(Exit.REACHED_ORIGIN_BALL)
        if last_step:
            _append_final(phis, xs, ys, phi, x, y)
            return finish(Exit.INTERIOR_AT_HORIZON)

        if err == 0.0:
            h *= 5.0
        else:
            h *= min(5.0, max(0.2, 0.9 * err ** -0.2))
        if landing:
            # a step shortened to hit the grid says nothing against the longer proposal
            h = max(h, h_nat)
    raise StiffnessError("maximum number of steps exceeded", phi, (x, y))


def _append_final(phis, xs, ys, p, x, y):
    if p > phis[-1]:
        phis.append(p)
        xs.append(x)
        ys.append(y)
    else:
        xs[-1], ys[-1] = x, y


def flow(params: ModelParams, start, phi: float, direction=Direction.FORWARD,
         controls: Controls | None = None) -> PhasePoint:
    """End point of the flow map ``V(phi, start)``; raises if the orbit stops early."""
    if phi == 0:
        return PhasePoint(float(start[0]), float(start[1]))
    ctl = controls or Controls(ball_radius=0.0, emit_step=max(phi, 1.0))
    tr = integrate(params, start, direction, phi, ctl)
    if tr.exit is not Exit.INTERIOR_AT_HORIZON:
        raise DomainError(f"orbit from {start!r} stopped early: {tr.exit.value}")
    return tr.end


def no_equilibria_check(params: ModelParams, grid_n: int) -> float:
    """Smallest forward-field norm over the strictly interior grid ``(i, j)/(n+1)``."""
    if grid_n < 2:
        raise DomainError(f"grid_n must be >= 2, got {grid_n}")
    g = np.arange(1, grid_n + 1) / (grid_n + 1)
    x, y = np.meshgrid(g, g, indexing="ij")
    dx, dy = field_forward(params, (x, y))
    return float(np.min(np.hypot(dx, dy)))


def jacobian_at_origin(params: ModelParams) -> np.ndarray:
    """Jacobian of the forward field at (0, 0)."""
    kp = params.q_plus + params.beta
    km = params.q_minus + params.beta
    return np.array([[-kp, params.q_plus], [-params.q_minus, km]])
