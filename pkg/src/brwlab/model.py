"""Model parameters, derived constants and the closed-form spectral facts.

The two-state chain flips ``+ -> -`` at rate ``q_plus`` and ``- -> +`` at rate
``q_minus``; particles split in two at rate ``beta``.  Everything here is a pure
function of :class:`ModelParams`.
"""

from __future__ import annotations

import cmath
import enum
import math
import numbers
from dataclasses import dataclass

import numpy as np

from brwlab.errors import DomainError, ParameterError

# |beta - beta_c| <= CRITICAL_RTOL * max(1, beta_c)  ->  Critical
CRITICAL_RTOL = 1e-12


class Regime(str, enum.Enum):
    SUBCRITICAL = "subcritical"
    CRITICAL = "critical"
    SUPERCRITICAL = "supercritical"


@dataclass(frozen=True)
class ModelParams:
    q_plus: float
    q_minus: float
    beta: float

    def __post_init__(self):
        for name in ("q_plus", "q_minus", "beta"):
            v = getattr(self, name)
            if isinstance(v, bool) or not isinstance(v, numbers.Real) or not math.isfinite(v):
                raise ParameterError(f"{name} must be a finite real number, got {v!r}")
            object.__setattr__(self, name, float(v))
        if not self.q_plus > 0:
            raise ParameterError(f"q_plus > 0 violated (q_plus={self.q_plus})")
        if not self.q_minus > self.q_plus:
            raise ParameterError(
                f"q_minus > q_plus violated (q_minus={self.q_minus}, q_plus={self.q_plus})"
            )
        if not self.beta > 0:
            raise ParameterError(f"beta > 0 violated (beta={self.beta})")

    def with_beta(self, beta: float) -> "ModelParams":
        return ModelParams(self.q_plus, self.q_minus, beta)

    def as_dict(self) -> dict:
        return {"q_plus": self.q_plus, "q_minus": self.q_minus, "beta": self.beta}


@dataclass(frozen=True)
class DerivedConstants:
    k_plus: float
    k_minus: float
    beta_c: float
    regime: Regime
    m: float

    def as_dict(self) -> dict:
        return {
            "k_plus": self.k_plus,
            "k_minus": self.k_minus,
            "beta_c": self.beta_c,
            "regime": self.regime.value,
            "m": self.m,
        }


@dataclass(frozen=True)
class SpectralInfo:
    matrix: tuple[tuple[float, float], tuple[float, float]]
    eigenvalues: tuple[complex, complex]
    discriminant: float
    eigenvectors: tuple[tuple[float, float], ...]

    def as_dict(self) -> dict:
        return {
            "matrix": [list(r) for r in self.matrix],
            "eigenvalues": [[z.real, z.imag] for z in self.eigenvalues],
            "discriminant": self.discriminant,
            "eigenvectors": [list(v) for v in self.eigenvectors],
        }


def critical_beta(q_plus: float, q_minus: float) -> float:
    return 0.5 * (math.sqrt(q_minus) - math.sqrt(q_plus)) ** 2


def classify(beta: float, beta_c: float) -> Regime:
    if abs(beta - beta_c) <= CRITICAL_RTOL * max(1.0, beta_c):
        return Regime.CRITICAL
    return Regime.SUPERCRITICAL if beta > beta_c else Regime.SUBCRITICAL


def derive_constants(params: ModelParams) -> DerivedConstants:
    bc = critical_beta(params.q_plus, params.q_minus)
    return DerivedConstants(
        k_plus=params.q_plus + params.beta,
        k_minus=params.q_minus + params.beta,
        beta_c=bc,
        regime=classify(params.beta, bc),
        m=math.sqrt(params.q_minus / params.q_plus),
    )


def linearization_matrix(params: ModelParams) -> np.ndarray:
    """Jacobian of the forward pgf field at the corner (1, 1)."""
    qp, qm, b = params.q_plus, params.q_minus, params.beta
    return np.array([[b - qp, qp], [-qm, qm - b]])


def _is_double_root(disc: float, params: ModelParams) -> bool:
    scale = (params.q_plus + params.q_minus) ** 2
    return abs(disc) <= 1e-12 * max(1.0, scale)


def linearization_at_one_one(params: ModelParams) -> SpectralInfo:
    qp, qm, b = params.q_plus, params.q_minus, params.beta
    mat = linearization_matrix(params)
    disc = (2.0 * b - (qp + qm)) ** 2 - 4.0 * qm * qp
    # lambda^2 + (qp - qm) lambda + (qm + qp) b - b^2 = 0
    half_trace = 0.5 * (qm - qp)
    root = cmath.sqrt(disc) / 2.0
    lams = (complex(half_trace) + root, complex(half_trace) - root)

    vecs: tuple[tuple[float, float], ...]
    if _is_double_root(disc, params):
        lam = half_trace
        lams = (complex(lam), complex(lam))
        if derive_constants(params).regime is Regime.CRITICAL:
            v = (1.0, math.sqrt(qm / qp))
        else:
            v = (qp, lam - b + qp)
        vecs = (_unit(v),)
    elif disc < 0:
        vecs = ()
    else:
        vecs = tuple(_unit((qp, z.real - b + qp)) for z in lams)
    return SpectralInfo(
        matrix=((mat[0, 0], mat[0, 1]), (mat[1, 0], mat[1, 1])),
        eigenvalues=lams,
        discriminant=disc,
        eigenvectors=vecs,
    )


def _unit(v) -> tuple[float, float]:
    n = math.hypot(v[0], v[1])
    return (v[0] / n, v[1] / n)


def gamma_eigenvalue(params: ModelParams, mu: float) -> float:
    """Top eigenvalue of ``Q - mu V`` for the single-particle chain.

    Its minimum over ``mu >= 0`` sits at ``(q_minus - q_plus)/2`` and equals
    ``-beta_c``.
    """
    if mu < 0:
        raise DomainError(f"mu must be >= 0, got {mu}")
    s = params.q_minus + params.q_plus
    d = params.q_minus - params.q_plus
    return -0.5 * s + 0.5 * math.sqrt(s * s - 4.0 * d * mu + 4.0 * mu * mu)


def expm2(mat: np.ndarray, t: float) -> np.ndarray:
    """``exp(t * mat)`` for a real 2x2 matrix, in closed form.

    Uses the shifted form ``exp(st) [f(t) I + g(t) (M - sI)]`` with
    ``s = tr/2``; the repeated-eigenvalue case is the Jordan-block formula.
    """
    mat = np.asarray(mat, dtype=float)
    s = 0.5 * (mat[0, 0] + mat[1, 1])
    shifted = mat - s * np.eye(2)
    d = -(shifted[0, 0] * shifted[1, 1] - shifted[0, 1] * shifted[1, 0])
    scale = max(1.0, float(np.max(np.abs(mat))) ** 2)
    if abs(d) <= 1e-14 * scale:
        f, g = 1.0, t
    elif d > 0:
        w = math.sqrt(d)
        f, g = math.cosh(w * t), math.sinh(w * t) / w
    else:
        w = math.sqrt(-d)
        f, g = math.cos(w * t), math.sin(w * t) / w
    return math.exp(s * t) * (f * np.eye(2) + g * shifted)


def expectation_matrix_exp(params: ModelParams, phi: float) -> np.ndarray:
    """``exp(phi * M)`` with ``M`` the linearization at (1, 1).

    Applied to ``(E+ N+(0), E- N+(0))`` it propagates the plus-count means in
    the level ``phi``.
    """
    if phi < 0:
        raise DomainError(f"phi must be >= 0, got {phi}")
    return expm2(linearization_matrix(params), phi)


def critical_level_means(params: ModelParams, phi: float) -> dict[str, float]:
    """The four level-count means at ``beta = beta_c``.

    Keys are ``"E+N+"``, ``"E-N+"``, ``"E+N-"``, ``"E-N-"``.  Plus counts evolve
    with ``exp(phi M)`` from ``(1, m)``; minus counts with ``exp(-phi M)`` from
    ``(1/m, 1)``.
    """
    dc = derive_constants(params)
    if dc.regime is not Regime.CRITICAL:
        raise DomainError(f"level means have closed forms only at beta_c={dc.beta_c}")
    if phi < 0:
        raise DomainError(f"phi must be >= 0, got {phi}")
    mat = linearization_matrix(params)
    plus = expm2(mat, phi) @ np.array([1.0, dc.m])
    minus = expm2(mat, -phi) @ np.array([1.0 / dc.m, 1.0])
    return {"E+N+": plus[0], "E-N+": plus[1], "E+N-": minus[0], "E-N-": minus[1]}
