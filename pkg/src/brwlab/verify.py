"""The acceptance battery.

Each check returns a :class:`CheckResult`; ``run_battery`` runs a selection and
``format_table`` prints one line per check.  Expected constants live in
:data:`EXPECTED` and can be overridden, which is how the harness is tested
against itself.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field

import numpy as np

from brwlab import curves, series
from brwlab.dynsys import Direction, flow, integrate, no_equilibria_check
from brwlab.errors import DomainError
from brwlab.model import (
    ModelParams,
    critical_beta,
    derive_constants,
    gamma_eigenvalue,
    linearization_at_one_one,
)
from brwlab import sim
from brwlab.sim.estimators import pgf_from_batch

FULL_REPS = 100_000
FAST_REPS = 10_000
DEFAULT_SEED = 0

EXPECTED = {
    "c1_target": 0.6182,
    "c1_tol": 5e-4,
    "c1_runtime_s": 60.0,
    "c2_low": 0.6289,
    "c2_high": 0.6300,
    "c2_width": 1e-4,
    "c3_slack": 1e-12,
    "c4_tol": 1e-6,
    "c5_tol": 1e-8,
    "c6_min_norm": 1e-4,
    "c7_tol": 1e-12,
    "c8_tol": 1e-12,
    "c9_EpNp0": 1.0,
    "c9_EmNp0": 2.0,
    "c9_EpNm0": 0.5,
    "c9_EpNp05": math.exp(0.75),
    "c9_runtime_s": 300.0,
    "c11_a1": 0.190983,
    "c12_target": 1.0,
    "c14_super_min": 0.99,
    "c14_crit_max": 0.5,
    "c15_hand": 2.545,
    "n_se": 3.0,
}

SUPER = ModelParams(1.0, 4.0, 4.0)
CRIT = ModelParams(1.0, 4.0, 0.5)
SUB = ModelParams(1.0, 4.0, 0.4)


@dataclass
class CheckResult:
    id: int
    title: str
    passed: bool
    measured: str
    expected: str
    details: dict = field(default_factory=dict)
    seconds: float = 0.0
    error: str | None = None

    @property
    def status(self) -> str:
        if self.error:
            return "ERROR"
        return "PASS" if self.passed else "FAIL"

    def line(self) -> str:
        return (f"[{self.status}] {self.id:>2} {self.title}: measured {self.measured}; "
                f"expected {self.expected} ({self.seconds:.1f}s)")

    def as_dict(self) -> dict:
        return {
            "id": self.id, "title": self.title, "status": self.status, "passed": self.passed,
            "measured": self.measured, "expected": self.expected, "details": self.details,
            "seconds": self.seconds, "error": self.error,
        }


@dataclass
class Settings:
    reps: int = FULL_REPS
    seed: int = DEFAULT_SEED
    horizon: float = sim.DEFAULT_HORIZON
    workers: int = 1
    expected: dict = field(default_factory=lambda: dict(EXPECTED))

    @classmethod
    def make(cls, fast: bool = False, seed: int = DEFAULT_SEED, overrides: dict | None = None,
             workers: int = 1) -> "Settings":
        exp = dict(EXPECTED)
        for k, v in (overrides or {}).items():
            if k not in exp:
                raise KeyError(f"unknown expected constant {k!r}")
            exp[k] = float(v)
        return cls(reps=FAST_REPS if fast else FULL_REPS, seed=seed, workers=workers, expected=exp)


def param_grid() -> list[tuple[float, float]]:
    """25 valid ``(q_plus, q_minus)`` pairs."""
    return [(qp, qp + d) for qp in (0.25, 0.5, 1.0, 2.0, 4.0) for d in (0.5, 1.0, 3.0, 6.0, 12.0)]


def _fmt_est(e: sim.McEstimate) -> str:
    return f"{e.mean:.5g} [{e.low:.5g}, {e.high:.5g}] se {e.std_error:.2g}"


def check_1(st: Settings) -> CheckResult:
    t0 = time.perf_counter()
    h = curves.hpm_at_zero(SUB)
    dt = time.perf_counter() - t0
    ex = st.expected
    ok = abs(h.value - ex["c1_target"]) <= ex["c1_tol"] and dt < ex["c1_runtime_s"]
    return CheckResult(1, "H+-(0) at (1,4,0.4)", ok, f"{h.value:.8f} bracket [{h.bracket[0]:.10f}, {h.bracket[1]:.10f}]",
                       f"{ex['c1_target']} +- {ex['c1_tol']}, < {ex['c1_runtime_s']:g}s",
                       {"value": h.value, "bracket": list(h.bracket), "runtime_s": dt})


def check_2(st: Settings) -> CheckResult:
    h = curves.hpm_at_zero(CRIT)
    ex = st.expected
    ok = ex["c2_low"] <= h.value <= ex["c2_high"] and h.width < ex["c2_width"]
    return CheckResult(2, "H+-(0) at (1,4,0.5)", ok, f"{h.value:.8f} width {h.width:.2g}",
                       f"in [{ex['c2_low']}, {ex['c2_high']}], width < {ex['c2_width']:g}",
                       {"value": h.value, "bracket": list(h.bracket)})


def check_3(st: Settings) -> CheckResult:
    worst = -math.inf
    bad = []
    for qp, qm in param_grid():
        bc = critical_beta(qp, qm)
        for f in (0.1, 1.0, 3.0):
            p = ModelParams(qp, qm, f * bc)
            c = series.compute_coeffs(p)
            excess = c.partial_sum - c.bound
            worst = max(worst, excess)
            if min(c.a[1:]) <= 0 or excess > st.expected["c3_slack"]:
                bad.append(p.as_dict())
    return CheckResult(3, "series positivity and bound", not bad,
                       f"max(partial sum - bound) = {worst:.3g}, {len(bad)} violations of 75",
                       f"all a_n > 0 and excess <= {st.expected['c3_slack']:g}", {"violations": bad})


def check_4(st: Settings) -> CheckResult:
    worst = 0.0
    for p in (CRIT, SUPER):
        coeffs = series.compute_coeffs(p)
        for y0 in (1.0, 0.75, 0.5, 0.25):
            x0 = series.evaluate_A(coeffs, y0)
            tr = integrate(p, (x0, y0), Direction.REVERSED, 1.0)
            if tr.phi[-1] < 1.0 - 1e-12:
                raise DomainError(f"orbit from y0={y0} stopped at phi={tr.phi[-1]}")
            dev = max(abs(x - series.evaluate_A(coeffs, y)) for x, y in zip(tr.x, tr.y))
            worst = max(worst, dev)
    return CheckResult(4, "reversed flow stays on x = A(y)", worst < st.expected["c4_tol"],
                       f"max deviation {worst:.3g}", f"< {st.expected['c4_tol']:g}")


def _semigroup_starts(p: ModelParams, n: int, seed: int) -> list[tuple[float, float]]:
    rng = np.random.default_rng(seed)
    out = []
    while len(out) < n:
        v = tuple(rng.uniform(0.02, 0.98, size=2))
        try:
            flow(p, v, 0.4)
        except DomainError:
            continue
        out.append(v)
    return out


def check_5(st: Settings) -> CheckResult:
    worst = 0.0
    for p in (CRIT, SUPER):
        for v in _semigroup_starts(p, 50, st.seed):
            a = flow(p, v, 0.4)
            b = flow(p, flow(p, v, 0.2), 0.2)
            worst = max(worst, math.hypot(a[0] - b[0], a[1] - b[1]))
    return CheckResult(5, "flow semigroup", worst < st.expected["c5_tol"], f"max error {worst:.3g}",
                       f"< {st.expected['c5_tol']:g}")


def check_6(st: Settings) -> CheckResult:
    mins = {str(p.beta): no_equilibria_check(p, 99) for p in (CRIT, SUPER)}
    lo = min(mins.values())
    return CheckResult(6, "no interior equilibria", lo > st.expected["c6_min_norm"],
                       f"min field norm {lo:.4g}", f"> {st.expected['c6_min_norm']:g}", {"by_beta": mins})


def check_7(st: Settings) -> CheckResult:
    d_super = linearization_at_one_one(SUPER).discriminant
    d_roots = [linearization_at_one_one(ModelParams(1.0, 4.0, b)).discriminant for b in (0.5, 4.5)]
    tol = st.expected["c7_tol"]
    ok = d_super < 0 and all(abs(d) <= tol for d in d_roots)
    return CheckResult(7, "discriminant signs", ok,
                       f"disc(1,4,4) = {d_super:.6g}; disc at 0.5, 4.5 = {d_roots[0]:.3g}, {d_roots[1]:.3g}",
                       f"< 0 and |.| <= {tol:g}")


def check_8(st: Settings) -> CheckResult:
    worst = 0.0
    for qp, qm in param_grid():
        g = gamma_eigenvalue(ModelParams(qp, qm, 1.0), 0.5 * (qm - qp))
        worst = max(worst, abs(g + critical_beta(qp, qm)))
    return CheckResult(8, "gamma minimum equals -beta_c", worst <= st.expected["c8_tol"],
                       f"max |gamma + beta_c| = {worst:.3g}", f"<= {st.expected['c8_tol']:g}")


def check_9(st: Settings) -> CheckResult:
    ex = st.expected
    kw = dict(reps=st.reps, seed=st.seed, horizon=st.horizon, workers=st.workers)
    t0 = time.perf_counter()
    plus = sim.level_means(CRIT, "Plus", plus_levels=[0.0, 0.5], **kw)
    minus_root = sim.level_means(CRIT, "Minus", plus_levels=[0.0], **kw)
    minus_side = sim.level_means(CRIT, "Plus", minus_levels=[0.0], **kw)
    dt = time.perf_counter() - t0
    e0 = plus[("E+N+", 0.0)]
    items = [
        ("E-N+(0)", minus_root[("E-N+", 0.0)], ex["c9_EmNp0"]),
        ("E+N-(0)", minus_side[("E+N-", 0.0)], ex["c9_EpNm0"]),
        ("E+N+(0.5)", plus[("E+N+", 0.5)], ex["c9_EpNp05"]),
    ]
    exact = e0.mean == ex["c9_EpNp0"] and e0.std_error == 0.0
    oks = [e.contains(target, ex["n_se"]) for _, e, target in items]
    ok = exact and all(oks) and dt < ex["c9_runtime_s"]
    measured = "; ".join(
        [f"E+N+(0) = {e0.mean:g}"]
        + [f"{n} = {_fmt_est(e)} {'ok' if o else 'MISS'}" for (n, e, _), o in zip(items, oks)]
    )
    return CheckResult(9, "MC level means at beta_c", ok, measured,
                       f"1 exactly; {ex['c9_EmNp0']:g}, {ex['c9_EpNm0']:g}, {ex['c9_EpNp05']:.5g} within "
                       f"{ex['n_se']:g} SE + bracket; < {ex['c9_runtime_s']:g}s",
                       {n: e.as_dict() for n, e, _ in items} | {"runtime_s": dt})


def _pgf_and_derivative(batch, k: int, theta: float):
    n = batch.n_plus[:, k] + batch.low_plus[:, k]
    return float(np.mean(n * theta ** np.maximum(n - 1, 0)))


def check_10(st: Settings) -> CheckResult:
    ex = st.expected
    nse = ex["n_se"]
    theta = 0.5
    kw = dict(reps=st.reps, horizon=st.horizon, workers=st.workers)
    hmp = curves.hmp_curve(CRIT)
    ode = flow(CRIT, (theta, curves.hmp_value(hmp, theta)), 0.5)[0]
    # three independent batches: g(0.5, theta), alpha = g(0.25, theta), g(0.25, alpha)
    b1 = sim.simulate_levels(CRIT, "Plus", plus_levels=[0.5], seed=st.seed, **kw)
    lhs = pgf_from_batch(b1, "plus", 0, theta, "g(0.5)")
    b2 = sim.simulate_levels(CRIT, "Plus", plus_levels=[0.25], seed=st.seed + 1, **kw)
    alpha = pgf_from_batch(b2, "plus", 0, theta, "g(0.25)")
    b3 = sim.simulate_levels(CRIT, "Plus", plus_levels=[0.25], seed=st.seed + 2, **kw)
    r_mid = pgf_from_batch(b3, "plus", 0, alpha.mean, "g(0.25,alpha)")
    r_lo = pgf_from_batch(b3, "plus", 0, alpha.low, "g(0.25,alpha_lo)")
    r_hi = pgf_from_batch(b3, "plus", 0, alpha.high, "g(0.25,alpha_hi)")
    deriv = _pgf_and_derivative(b3, 0, alpha.mean)
    se = math.sqrt(lhs.std_error ** 2 + r_mid.std_error ** 2 + (deriv * alpha.std_error) ** 2)
    gap = max(0.0, lhs.low - r_hi.high, r_lo.low - lhs.high)
    ok_ode = lhs.contains(ode, nse)
    ok_comp = gap <= nse * se
    return CheckResult(
        10, "MC pgf vs ODE and composition", ok_ode and ok_comp,
        f"MC g(0.5,0.5) = {_fmt_est(lhs)} vs ODE {ode:.6f}; composition gap {gap:.3g} (se {se:.2g})",
        f"ODE within {nse:g} SE + bracket; composition gap <= {nse:g} SE",
        {"ode": ode, "lhs": lhs.as_dict(), "alpha": alpha.as_dict(), "rhs": r_mid.as_dict(), "gap": gap},
    )


def check_11(st: Settings) -> CheckResult:
    ex = st.expected
    est = sim.first_passage_laplace(CRIT, reps=st.reps, seed=st.seed, workers=st.workers)
    target = ex["c11_a1"]
    ok = est.contains(target, ex["n_se"])
    return CheckResult(11, "first-passage Laplace transform = a1", ok, _fmt_est(est),
                       f"{target} within {ex['n_se']:g} SE", {"estimate": est.as_dict(),
                                                              "a1_closed_form": series.a1_closed_form(CRIT)})


def check_12(st: Settings) -> CheckResult:
    ex = st.expected
    w = sim.winding_means(CRIT, n_max=1, reps=st.reps, seed=st.seed, horizon=st.horizon,
                          workers=st.workers)
    e = w["W+(1)"]
    ok = e.contains(ex["c12_target"], ex["n_se"])
    return CheckResult(12, "E W+(1) at beta_c", ok, _fmt_est(e),
                       f"{ex['c12_target']:g} within {ex['n_se']:g} SE + bracket",
                       {k: v.as_dict() for k, v in w.items()})


def check_13(st: Settings) -> CheckResult:
    betas = [0.5, 0.45, 0.4, 0.35, 0.3, 0.2, 0.1]
    sw = sim.nested_sweep(CRIT, betas, horizon=st.horizon, reps=st.reps, seed=st.seed,
                          workers=st.workers)
    ok = sw.pathwise_monotone_fraction == 1.0 and sw.means_nondecreasing
    means = ", ".join(f"{b:g}:{e.mean:.4f}" for b, e in zip(sw.betas, sw.estimates))
    return CheckResult(13, "nested sweep monotonicity", ok,
                       f"monotone in {100 * sw.pathwise_monotone_fraction:.2f}% of replicates; means {means}",
                       "100% and nondecreasing in beta",
                       {"estimates": [e.as_dict() for e in sw.estimates]})


def check_14(st: Settings) -> CheckResult:
    ex = st.expected
    s = sim.dip_fraction(SUPER, horizon=20.0, reps=st.reps, seed=st.seed, workers=st.workers)
    c = sim.dip_fraction(CRIT, horizon=20.0, reps=st.reps, seed=st.seed, workers=st.workers)
    ok = s.low > ex["c14_super_min"] and c.high <= ex["c14_crit_max"] + ex["n_se"] * c.std_error
    return CheckResult(14, "left-of-0 dichotomy", ok,
                       f"(1,4,4): {s.low:.5f} (undecided {s.budget_hit_fraction:.3g}); (1,4,0.5): {_fmt_est(c)}",
                       f"> {ex['c14_super_min']:g}; <= {ex['c14_crit_max']:g} + {ex['n_se']:g} SE",
                       {"super": s.as_dict(), "crit": c.as_dict()})


def check_15(st: Settings) -> CheckResult:
    m = derive_constants(CRIT).m
    pts = curves.slope_segment(CRIT, 20)
    slopes = [curves.field_slope(CRIT, p) for p in pts]
    hand = curves.field_slope(CRIT, (0.75, 0.5))
    ex = st.expected["c15_hand"]
    ok = min(slopes) > m and hand > m and ex <= hand < ex + 1e-3
    return CheckResult(15, "slopes exceed m on the segment", ok,
                       f"min slope {min(slopes):.6f}; slope at (0.75, 0.5) = {hand:.6f}",
                       f"> m = {m:g}; hand value {ex}...", {"slopes": slopes})


CHECKS = {
    1: check_1, 2: check_2, 3: check_3, 4: check_4, 5: check_5, 6: check_6, 7: check_7,
    8: check_8, 9: check_9, 10: check_10, 11: check_11, 12: check_12, 13: check_13,
    14: check_14, 15: check_15,
}


def run_check(i: int, st: Settings) -> CheckResult:
    t0 = time.perf_counter()
    try:
        res = CHECKS[i](st)
    except Exception as exc:  # reported as an infrastructure failure
        res = CheckResult(i, CHECKS[i].__name__, False, "-", "-", error=f"{type(exc).__name__}: {exc}")
    res.seconds = time.perf_counter() - t0
    return res


def run_battery(st: Settings, only=None, echo=None) -> list[CheckResult]:
    ids = sorted(CHECKS) if not only else sorted(set(only))
    out = []
    for i in ids:
        if i not in CHECKS:
            raise KeyError(f"no check {i}")
        r = run_check(i, st)
        if echo:
            echo(r.line())
        out.append(r)
    return out


def format_table(results) -> str:
    lines = [r.line() for r in results]
    n_pass = sum(r.status == "PASS" for r in results)
    lines.append(f"{n_pass}/{len(results)} passed")
    return "\n".join(lines)


def exit_code(results) -> int:
    if any(r.error for r in results):
        return 3
    return 0 if all(r.passed for r in results) else 1
