"""Checks of growth statements on computed paths.

Limits cannot be certified from finite data, so every ``o(.)`` statement
is turned into a decade test with a stated threshold:

* ``fit_growth_exponent``   least-squares slope of ``log x`` against ``log t``
* ``verify_upper_estimate`` decade maxima of ``x(t)/t^e`` must shrink
* ``theorem_diagnostics``   the intermediate quantities of the Bihari argument
* ``verify_sharpness``      lower/upper exponent bracket for the slowly-decaying example

Also home to the Mittag-Leffler function used as the oracle for linear
relaxation.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy import integrate

from .bihari import GSpec, eval_W
from .errors import (
    HorizonTooShort,
    NonpositiveValues,
    ParameterError,
    PlanMismatch,
    PreconditionViolation,
    RangeExceeded,
    WindowTooShort,
)
from .param_plan import ParamPlan, strictly_less

__all__ = [
    "mittag_leffler",
    "mittag_leffler_array",
    "ExponentFit",
    "fit_growth_exponent",
    "UpperEstimateCheck",
    "verify_upper_estimate",
    "TheoremDiagnostics",
    "theorem_diagnostics",
    "omega_analysis",
    "SharpnessReport",
    "verify_sharpness",
    "EXPONENT_TOL",
]

EXPONENT_TOL = 0.02
ML_SERIES_RADIUS = 5.0
ML_MIN_Z = -50.0
_EPS = np.finfo(float).eps


# ---------------------------------------------------------------------------
# Mittag-Leffler
# ---------------------------------------------------------------------------

def _ml_series(alpha, z, max_terms=3000):
    """Power series with exactly rounded summation; returns ``(value, condition)``."""
    terms = [1.0]
    logz = math.log(abs(z))
    neg = z < 0
    k = 1
    prev = 1.0
    while k < max_terms:
        lmag = k * logz - math.lgamma(alpha * k + 1.0)
        if lmag > 700.0 or (neg and lmag > 40.0):
            # overflow, or cancellation no double can survive
            return math.nan, math.inf
        mag = math.exp(lmag)
        terms.append(-mag if (neg and k % 2) else mag)
        if mag < prev and mag < 1e-18 * abs(math.fsum(terms)):
            break
        prev = mag
        k += 1
    else:
        return math.nan, math.inf
    value = math.fsum(terms)
    cond = math.fsum(abs(v) for v in terms) / abs(value) if value != 0 else math.inf
    return value, cond


def _ml_integral(alpha, x):
    """``E_alpha(-x)`` for ``x > 0``, ``0 < alpha < 1``.

    Uses ``E_alpha(-x) = sin(pi alpha)/(pi alpha) int_0^inf exp(-(x s)^(1/alpha)) / (s^2 + 2 s cos(pi alpha) + 1) ds``.
    """
    c = math.cos(math.pi * alpha)
    inv = 1.0 / alpha

    def f(s):
        return math.exp(-((x * s) ** inv)) / (s * s + 2.0 * s * c + 1.0)

    cuts = sorted({0.0, 1.0 / x, 0.5, 1.0, 2.0, 10.0 / x})
    total = 0.0
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", integrate.IntegrationWarning)
        for lo, hi in zip(cuts[:-1], cuts[1:]):
            total += integrate.quad(f, lo, hi, epsabs=0.0, epsrel=1e-13, limit=400)[0]
        total += integrate.quad(f, cuts[-1], math.inf, epsabs=0.0, epsrel=1e-13, limit=400)[0]
    return math.sin(math.pi * alpha) / (math.pi * alpha) * total


def mittag_leffler(alpha: float, z: float) -> float:
    """One-parameter Mittag-Leffler function ``E_alpha(z) = sum z^k / Gamma(alpha k + 1)``.

    Valid for ``0 < alpha <= 1`` and real ``-50 <= z <= 5``.  Near the origin
    the series is summed exactly rounded (``math.fsum``) and accepted when its
    condition number keeps the error below 1e-12; otherwise negative
    arguments go through the integral representation on the positive axis.
    """
    alpha = float(alpha)
    z = float(z)
    if not 0.0 < alpha <= 1.0:
        raise RangeExceeded(f"alpha={alpha!r} outside (0, 1]")
    if not (ML_MIN_Z <= z <= ML_SERIES_RADIUS):
        raise RangeExceeded(f"z={z!r} outside the validated range [{ML_MIN_Z}, {ML_SERIES_RADIUS}]")
    if z == 0.0:
        return 1.0
    if alpha == 1.0:
        return math.exp(z)
    if z >= -ML_SERIES_RADIUS:
        value, cond = _ml_series(alpha, z)
        if math.isfinite(value) and cond * _EPS < 1e-12:
            return value
        if z > 0:
            raise RangeExceeded(f"series for E_{alpha}({z}) is not numerically usable")
    return _ml_integral(alpha, -z)


def mittag_leffler_array(alpha: float, z) -> np.ndarray:
    z = np.asarray(z, dtype=float)
    flat = [mittag_leffler(alpha, v) for v in z.ravel()]
    return np.array(flat).reshape(z.shape)


# ---------------------------------------------------------------------------
# exponent fits
# ---------------------------------------------------------------------------

def _tx(path):
    if isinstance(path, tuple):
        t, x = path
        return np.asarray(t, dtype=float), np.asarray(x, dtype=float)
    return path.t, path.values


@dataclass(frozen=True)
class ExponentFit:
    exponent: float
    intercept: float
    rms_residual: float
    window: tuple
    n_points: int

    def to_dict(self) -> dict:
        return {"exponent": self.exponent, "intercept": self.intercept, "rms_residual": self.rms_residual,
                "window": list(self.window), "n_points": self.n_points}


def fit_growth_exponent(path, window: Optional[tuple] = None) -> ExponentFit:
    """Least-squares line through ``(log t, log x)`` on the nodes inside ``window``.

    ``path`` is a ``SolutionPath`` or a ``(t, x)`` tuple; the default window
    is the last two decades ``[T/100, T]``.
    """
    t, x = _tx(path)
    T = float(t[-1])
    lo, hi = window if window is not None else (T / 100.0, T)
    if not (lo > 0 and hi / lo >= 100.0 * (1 - 1e-12)):
        raise WindowTooShort(f"window ({lo!r}, {hi!r}) spans less than two decades")
    if hi > T * (1 + 1e-12) or lo < t[1] * (1 - 1e-12):
        raise WindowTooShort(f"window ({lo!r}, {hi!r}) leaves the path range ({t[1]!r}, {T!r})")
    sel = (t >= lo * (1 - 1e-12)) & (t <= hi * (1 + 1e-12))
    if sel.sum() < 3:
        raise WindowTooShort("fewer than three nodes in the fit window")
    xs = x[sel]
    if np.any(~(xs > 0)):
        raise NonpositiveValues("x must be positive throughout the fit window")
    lt, lx = np.log(t[sel]), np.log(xs)
    A = np.column_stack([lt, np.ones_like(lt)])
    (slope, icpt), *_ = np.linalg.lstsq(A, lx, rcond=None)
    rms = float(np.sqrt(np.mean((lx - A @ np.array([slope, icpt])) ** 2)))
    return ExponentFit(float(slope), float(icpt), rms, (float(lo), float(hi)), int(sel.sum()))


@dataclass(frozen=True)
class UpperEstimateCheck:
    passed: bool
    exponent: float
    decades: tuple
    max_ratios: tuple
    reason: str

    def to_csv(self, path) -> None:
        with open(path, "w") as fh:
            fh.write("decade,maxRatio\n")
            for d, m in zip(self.decades, self.max_ratios):
                fh.write(f"{d},{m:.17g}\n")

    def to_dict(self) -> dict:
        return {"passed": self.passed, "exponent": self.exponent, "decades": list(self.decades),
                "max_ratios": list(self.max_ratios), "reason": self.reason}


def verify_upper_estimate(path, exponent: float, shrink: float = 0.5) -> UpperEstimateCheck:
    """Decade proxy for ``x(t) = o(t^exponent)``.

    With ``m_k = max x(t)/t^exponent`` over ``[10^k, 10^(k+1)]``, passes iff
    the last three ``m_k`` decrease strictly and the final one is below
    ``shrink`` times ``m_0``.
    """
    t, x = _tx(path)
    K = int(math.floor(math.log10(t[-1]) + 1e-9)) if t[-1] > 1 else 0
    if K < 3:
        raise HorizonTooShort(f"need at least three decades beyond t=1, path ends at {t[-1]!r}")
    decades, maxima = [], []
    ax = np.abs(x)
    for k in range(K):
        lo, hi = 10.0 ** k, 10.0 ** (k + 1)
        sel = (t >= lo * (1 - 1e-12)) & (t <= hi * (1 + 1e-12))
        if not sel.any():
            raise HorizonTooShort(f"no nodes in decade [{lo}, {hi}]")
        decades.append(k)
        maxima.append(float(np.max(ax[sel] / t[sel] ** exponent)))
    m = maxima
    decreasing = all(m[i] > m[i + 1] * (1 + 1e-12) for i in range(K - 3, K - 1))
    shrunk = m[-1] < shrink * m[0]
    if decreasing and shrunk:
        reason = "decade maxima decrease and shrank below the threshold"
    elif not decreasing:
        reason = "decade maxima not strictly decreasing over the last three decades"
    else:
        reason = f"final decade maximum not below {shrink} x first decade maximum"
    return UpperEstimateCheck(decreasing and shrunk, float(exponent), tuple(decades), tuple(m), reason)


# ---------------------------------------------------------------------------
# theorem diagnostics
# ---------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class TheoremDiagnostics:
    t: np.ndarray
    y: np.ndarray
    z: np.ndarray
    B: np.ndarray
    lhs4: np.ndarray
    estim_y_ratio: np.ndarray
    m1_estimate: float
    m1_from_estim_y: float
    z_over_t: np.ndarray
    z_over_t_tail_mean: float
    z_over_t_decreasing: bool

    def to_dict(self) -> dict:
        return {"m1_estimate": self.m1_estimate, "m1_from_estim_y": self.m1_from_estim_y,
                "z_over_t_final": float(self.z_over_t[-1]), "z_over_t_tail_mean": self.z_over_t_tail_mean,
                "z_over_t_decreasing": self.z_over_t_decreasing, "B_final": float(self.B[-1])}

    def to_csv(self, path) -> None:
        cols = np.column_stack([self.t, self.y, self.z, self.B, self.lhs4, self.estim_y_ratio])
        np.savetxt(path, cols, fmt="%.17g", delimiter=",", header="t,y,z,B,lhs4,estim_y_ratio", comments="")


def _check_plan(problem, plan: ParamPlan):
    if abs(problem.alpha - plan.alpha) > 1e-12:
        raise PlanMismatch(f"plan alpha={plan.alpha!r} but problem alpha={problem.alpha!r}")
    if problem.lam is not None and abs(problem.lam - plan.lam) > 1e-12:
        raise PlanMismatch(f"plan lambda={plan.lam!r} but problem lambda={problem.lam!r}")


def _interp_at(t, v, s):
    return float(np.interp(s, t, v))


def theorem_diagnostics(path, plan: ParamPlan, g: Optional[GSpec] = None) -> TheoremDiagnostics:
    """Intermediate quantities of the Bihari argument, measured on ``path``.

    * ``y = x - x0``
    * ``z(t) = int_0^t g((|y| + |x0|)/(s+1)^alpha)^p3 ds`` (trapezoidal)
    * ``B = x/(t+1)^alpha``
    * ``lhs4 = W(|y|^p3)/|y|^(a p3) * (|y|/(t+1)^alpha)^(a p3)``, bounded by ``M1``
    * ``estim_y_ratio = |y|^p3 / ((t+1)^alpha z)``, also bounded by ``M1``

    ``z(t)/t`` must head to ``g(0) = 0``; ``z_over_t_decreasing`` compares its
    value at ``T`` with that at ``T/100``.
    """
    problem = path.problem
    _check_plan(problem, plan)
    g = g if g is not None else GSpec.from_plan(plan)
    t, x = path.t, path.values
    al, p3, a = plan.alpha, plan.p3, plan.a
    x0 = float(problem.x0)
    x0abs = abs(x0)
    y = x - x0
    ay = np.abs(y)
    arg = (ay + x0abs) / (t + 1.0) ** al
    G = np.asarray(g(arg), dtype=float) ** p3
    z = np.concatenate(([0.0], np.cumsum(0.5 * (G[1:] + G[:-1]) * np.diff(t))))
    B = x / (t + 1.0) ** al

    u = ay ** p3
    lhs4 = np.zeros_like(t)
    pos = u > 0
    if pos.any():
        uniq, inv = np.unique(u[pos], return_inverse=True)
        W = eval_W(g, x0abs, p3, uniq).W[inv]
        lhs4[pos] = W / u[pos] ** a * (ay[pos] / (t[pos] + 1.0) ** al) ** (a * p3)
    ratio = np.zeros_like(t)
    zp = z > 0
    ratio[zp] = u[zp] / ((t[zp] + 1.0) ** al * z[zp])

    z_over_t = np.zeros_like(t)
    z_over_t[1:] = z[1:] / t[1:]
    T = float(t[-1])
    if T / 100.0 >= t[1]:
        decreasing = bool(z_over_t[-1] < _interp_at(t, z_over_t, T / 100.0))
        tail = t >= T / 10.0
    else:
        decreasing = False
        tail = t > 0
    return TheoremDiagnostics(
        t=t, y=y, z=z, B=B, lhs4=lhs4, estim_y_ratio=ratio,
        m1_estimate=float(np.max(lhs4)), m1_from_estim_y=float(np.max(ratio)),
        z_over_t=z_over_t, z_over_t_tail_mean=float(np.mean(z_over_t[tail])),
        z_over_t_decreasing=decreasing,
    )


# ---------------------------------------------------------------------------
# sharpness
# ---------------------------------------------------------------------------

def omega_analysis(plan: ParamPlan, epsilon: float, eta0: float) -> dict:
    """Exponent gap between the upper estimate and the sharpness lower bound.

    The gap ``a alpha - [(1-lambda) alpha - (1+eps)/p2]`` is compared with
    ``Omega alpha`` where ``Omega = [a + (2+eps) lambda - 1] + (1+eps) alpha``.
    ``Omega < eta0 a`` is only claimed when ``eta0 > 7 alpha/2``; otherwise
    the check is reported as ``not_armed``.
    """
    al, lam, a, p2, p3 = plan.alpha, plan.lam, plan.a, plan.p2, plan.p3
    lower = (1.0 - lam) * al - (1.0 + epsilon) / p2
    lower_p3 = (1.0 - lam) * al - (1.0 + epsilon) / p3
    upper = a * al
    gap = upper - lower
    omega = (a + (2.0 + epsilon) * lam - 1.0) + (1.0 + epsilon) * al
    armed = 0.0 < eta0 < 1.0 and eta0 > 3.5 * al
    lhs = (1.0 - eta0) * a + (2.0 + epsilon) * lam + (1.0 + epsilon) * al
    if armed:
        status = "pass" if (omega < eta0 * a and lhs < 1.0) else "fail"
    else:
        status = "not_armed"
    return {
        "lower_exponent": lower,
        "lower_exponent_p3_variant": lower_p3,
        "upper_exponent": upper,
        "gap": gap,
        "omega": omega,
        "omega_alpha": omega * al,
        "gap_bound_holds": bool(gap < omega * al),
        "eta0": eta0,
        "eta0_threshold": 3.5 * al,
        "omega_armed": armed,
        "omega_inequality_lhs": lhs,
        "omega_status": status,
    }


@dataclass(frozen=True)
class SharpnessReport:
    plan: ParamPlan
    epsilon: float
    eta0: float
    lower_exponent: float
    upper_exponent: float
    lower_exponent_p3_variant: float
    gap: float
    omega: float
    fit: ExponentFit
    upper_check: UpperEstimateCheck
    overclaim_check: UpperEstimateCheck
    verdict: dict
    omega_details: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return self.verdict["lower_bound"] == "pass" and self.verdict["upper_estimate"] == "pass"

    def to_dict(self) -> dict:
        return {
            "plan": self.plan.to_dict(),
            "epsilon": self.epsilon,
            "eta0": self.eta0,
            "lower_exponent": self.lower_exponent,
            "upper_exponent": self.upper_exponent,
            "lower_exponent_p3_variant": self.lower_exponent_p3_variant,
            "gap": self.gap,
            "omega": self.omega,
            "omega_details": self.omega_details,
            "fit": self.fit.to_dict(),
            "upper_check": self.upper_check.to_dict(),
            "overclaim_check": self.overclaim_check.to_dict(),
            "verdict": dict(self.verdict),
            "passed": self.passed,
        }


def _require(cond, name):
    if not cond:
        raise PreconditionViolation(f"sharpness precondition failed: {name}", inequality=name)


def check_sharpness_preconditions(plan: ParamPlan, epsilon: float, min_horizon: float = 1e4, T=None):
    al, lam, a = plan.alpha, plan.lam, plan.a
    _require(strictly_less(1.5 * al, 1.0), "strict regime: 1 > 3*alpha/2")
    _require(strictly_less(2.0 * lam, al), "strict regime: alpha > 2*lambda")
    _require(strictly_less(2.0 * lam, al) and strictly_less(1.0 - a, 2.0 * lam)
             and strictly_less(lam, 1.0 - a), "alpha > 2*lambda > 1-a > lambda")
    _require(0.0 < epsilon < 1.0, "epsilon too large: 0 < epsilon < 1")
    _require(strictly_less((1.0 + epsilon) / plan.p2, (1.0 - lam) * al),
             "epsilon too large: (1-lambda)*alpha > (1+epsilon)/p2")
    if T is not None:
        _require(T >= min_horizon * (1 - 1e-12), f"horizon T >= {min_horizon:g}")


def verify_sharpness(path, plan: ParamPlan, epsilon: float, eta0: float = 0.9,
                     window: Optional[tuple] = None, min_horizon: float = 1e4) -> SharpnessReport:
    """Bracket the measured tail exponent of the slowly-decaying example.

    Passes iff the fitted exponent is at least ``lower - 0.02`` and the
    decade test confirms ``o(t^(a alpha))``.  The report also states whether
    the decade test rejects the fitted exponent itself (no over-claiming),
    whether the fit stays below ``a alpha``, and the Omega gap analysis.
    """
    problem = path.problem
    _require(problem.family == "sharpness", "path must come from the sharpness family")
    _require(abs(problem.alpha - plan.alpha) <= 1e-12 and abs(problem.lam - plan.lam) <= 1e-12,
             "problem (alpha, lambda) must match the plan")
    _require(abs(problem.p2 - plan.p2) <= 1e-12 * plan.p2, "problem p2 must match the plan")
    _require(abs(problem.epsilon - epsilon) <= 1e-15, "problem epsilon must match")
    check_sharpness_preconditions(plan, epsilon, min_horizon, path.mesh.T)

    om = omega_analysis(plan, epsilon, eta0)
    fit = fit_growth_exponent(path, window)
    upper = verify_upper_estimate(path, om["upper_exponent"])
    over = verify_upper_estimate(path, fit.exponent)
    verdict = {
        "lower_bound": "pass" if fit.exponent >= om["lower_exponent"] - EXPONENT_TOL else "fail",
        "fit_below_upper": "pass" if fit.exponent <= om["upper_exponent"] else "fail",
        "upper_estimate": "pass" if upper.passed else "fail",
        "no_overclaim": "pass" if not over.passed else "fail",
        "gap_bound": "pass" if om["gap_bound_holds"] else "fail",
        "omega": om["omega_status"],
    }
    return SharpnessReport(plan, float(epsilon), float(eta0), om["lower_exponent"], om["upper_exponent"],
                           om["lower_exponent_p3_variant"], om["gap"], om["omega"], fit, upper, over,
                           verdict, om)
