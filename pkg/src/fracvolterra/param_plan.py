"""Exponent bookkeeping for the sublinear growth estimate.

Given fractional order ``alpha`` and power ``lambda``, pick a Hoelder
triple ``(p1, p2, p3)`` with ``1/p1 + 1/p2 + 1/p3 = 1`` together with the
auxiliary numbers ``zeta`` and ``a`` so that the solutions of
``D^alpha (x - x0) = H(t) x^lambda`` grow like ``o(t^(a*alpha))``.

The construction is a six-step recipe::

    1. 1 > alpha > lambda > 0
    2. 1/p2 in (lambda*alpha, lambda*alpha + (1-lambda)*alpha^2/(1+alpha))
    3. 0 < zeta < min((alpha-lambda)/(1-alpha), (1-lambda*alpha*p2)/(alpha*p2-1))
    4. a  = (1-lambda)/(1+zeta)
    5. p1 = 1 / ((1 + (1-a)*alpha)/(1+alpha) - 1/p2)
    6. p3 = (1+alpha)/(a*alpha)

All strict inequalities are tested with a relative slack of ``REL_SLACK``.
"""
from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass

import numpy as np

from .errors import (
    EmptyGrid,
    OrderViolation,
    P2OutOfRange,
    ParameterError,
    PlanInconsistent,
    StrictRegimeViolation,
    ZetaOutOfRange,
)

REL_SLACK = 1e-12
IDENTITY_TOL = 1e-12

__all__ = [
    "OrderPair",
    "ParamPlan",
    "validate_orders",
    "p2_bounds",
    "zeta_bound",
    "build_plan",
    "default_plan",
    "check_h_growth",
    "plan_violations",
    "strictly_less",
]


def strictly_less(lo: float, hi: float) -> bool:
    """``lo < hi`` with the gap required to exceed rounding noise."""
    return hi - lo > REL_SLACK * max(1.0, abs(lo), abs(hi))


@dataclass(frozen=True)
class OrderPair:
    alpha: float
    lam: float
    strict: bool = False

    def __post_init__(self):
        _check_orders(self.alpha, self.lam, self.strict)


def _check_orders(alpha, lam, strict):
    if not all(math.isfinite(v) for v in (alpha, lam)):
        raise OrderViolation("order violation: alpha and lambda must be finite")
    if not (strictly_less(0.0, lam) and strictly_less(lam, alpha) and strictly_less(alpha, 1.0)):
        raise OrderViolation(
            f"order violation: need 1 > alpha > lambda > 0, got alpha={alpha!r}, lambda={lam!r}"
        )
    if strict:
        if not strictly_less(1.5 * alpha, 1.0):
            raise StrictRegimeViolation(
                f"strict regime: need 1 > 3*alpha/2, got 3*alpha/2={1.5 * alpha!r}"
            )
        if not strictly_less(2.0 * lam, alpha):
            raise StrictRegimeViolation(
                f"strict regime: need alpha > 2*lambda, got alpha={alpha!r}, 2*lambda={2 * lam!r}"
            )


def validate_orders(alpha: float, lam: float, strict: bool = False) -> OrderPair:
    """Check ``1 > alpha > lambda > 0`` (and, if ``strict``, ``3 alpha/2 < 1``, ``alpha > 2 lambda``)."""
    return OrderPair(float(alpha), float(lam), bool(strict))


def p2_bounds(orders: OrderPair) -> tuple[float, float]:
    """Open interval ``(lo, hi)`` of admissible ``p2``.

    Reciprocal of the interval for ``1/p2``:
    ``lo = 1/(lambda*alpha + (1-lambda)*alpha^2/(1+alpha))`` and
    ``hi = 1/(lambda*alpha)``.
    """
    al, lam = orders.alpha, orders.lam
    upper_recip = lam * al + (1.0 - lam) * al * al / (1.0 + al)
    return 1.0 / upper_recip, 1.0 / (lam * al)


def _check_p2(orders, p2):
    lo, hi = p2_bounds(orders)
    if not (math.isfinite(p2) and strictly_less(lo, p2) and strictly_less(p2, hi)):
        raise P2OutOfRange(f"p2={p2!r} outside admissible interval ({lo!r}, {hi!r})")


def zeta_bound(orders: OrderPair, p2: float) -> float:
    """Supremum of admissible ``zeta`` for the given ``p2`` (Step 3)."""
    _check_p2(orders, p2)
    al, lam = orders.alpha, orders.lam
    return min((al - lam) / (1.0 - al), (1.0 - lam * al * p2) / (al * p2 - 1.0))


@dataclass(frozen=True)
class ParamPlan:
    orders: OrderPair
    p2: float
    zeta: float
    a: float
    p1: float
    p3: float

    @property
    def alpha(self) -> float:
        return self.orders.alpha

    @property
    def lam(self) -> float:
        return self.orders.lam

    @property
    def growth_exponent(self) -> float:
        """The exponent ``a*alpha`` in the upper estimate ``o(t^(a*alpha))``."""
        return self.a * self.alpha

    @property
    def h_exponent(self) -> float:
        """Exponent ``(p3/p1)[1 - p1(1-alpha)]`` of ``t`` in the coefficient condition."""
        return self.p3 / self.p1 * (1.0 - self.p1 * (1.0 - self.alpha))

    def to_dict(self) -> dict:
        return {
            "alpha": self.alpha,
            "lambda": self.lam,
            "p2": self.p2,
            "zeta": self.zeta,
            "a": self.a,
            "p1": self.p1,
            "p3": self.p3,
        }

    def to_json(self, **kw) -> str:
        return json.dumps(self.to_dict(), **kw)

    @classmethod
    def from_dict(cls, d: dict, strict: bool = False) -> "ParamPlan":
        """Rebuild from ``alpha, lambda, p2, zeta``; stored derived values are cross-checked."""
        plan = build_plan(validate_orders(d["alpha"], d["lambda"], strict), d["p2"], d["zeta"])
        for key in ("a", "p1", "p3"):
            if key in d and not math.isclose(d[key], getattr(plan, key), rel_tol=1e-12):
                raise ParameterError(f"stored {key}={d[key]!r} disagrees with recomputed {getattr(plan, key)!r}")
        return plan


def plan_violations(plan: ParamPlan) -> list[str]:
    """Names of every plan invariant that fails; empty for a consistent plan."""
    al, lam = plan.alpha, plan.lam
    a, p1, p2, p3, zeta = plan.a, plan.p1, plan.p2, plan.p3, plan.zeta
    r1, r2, r3 = 1.0 / p1, 1.0 / p2, 1.0 / p3
    out = []
    if abs(r1 + r2 + r3 - 1.0) >= IDENTITY_TOL:
        out.append("interpolation identity 1/p1+1/p2+1/p3=1")
    if not (strictly_less(lam * al, r2) and strictly_less(r2, lam * al + (1 - lam) * al * al / (1 + al))):
        out.append("lambda*alpha < 1/p2 < lambda*alpha+(1-lambda)alpha^2/(1+alpha)")
    if not (strictly_less((1 - a) * al, r2) and strictly_less(r2, ((1 - a) * al + al * al) / (1 + al))):
        out.append("(1-a)alpha < 1/p2 < ((1-a)alpha+alpha^2)/(1+alpha)")
    bound = min((al - lam) / (1 - al), (1 - lam * al * p2) / (al * p2 - 1))
    if not (strictly_less(0.0, zeta) and strictly_less(zeta, bound) and strictly_less(zeta, 1.0)):
        out.append("0 < zeta < min(bounds, 1)")
    if not math.isclose(a, (1 - lam) / (1 + zeta), rel_tol=1e-14):
        out.append("a = (1-lambda)/(1+zeta)")
    if not (strictly_less(lam, 1 - a) and strictly_less(1 - a, al)):
        out.append("alpha > 1-a > lambda")
    if not (strictly_less(1 - al, r1) and strictly_less(r1, (1 - (1 - a) * al * al) / (1 + al))):
        out.append("1-alpha < 1/p1 < (1-(1-a)alpha^2)/(1+alpha)")
    if not math.isclose(p3, (1 + al) / (a * al), rel_tol=1e-14):
        out.append("p3 = (1+alpha)/(a*alpha)")
    if not (p1 > 1 and p2 > 1 and p3 > 1):
        out.append("p1, p2, p3 > 1")
    if not strictly_less(plan.h_exponent, al):
        out.append("(p3/p1)[1-p1(1-alpha)] < alpha")
    return out


def build_plan(orders: OrderPair, p2: float, zeta: float) -> ParamPlan:
    """Steps 4-6: derive ``a``, ``p1``, ``p3`` and verify every invariant."""
    p2 = float(p2)
    zeta = float(zeta)
    bound = zeta_bound(orders, p2)
    if not (math.isfinite(zeta) and strictly_less(0.0, zeta) and strictly_less(zeta, min(bound, 1.0))):
        raise ZetaOutOfRange(f"zeta={zeta!r} outside (0, {min(bound, 1.0)!r})")
    al, lam = orders.alpha, orders.lam
    a = (1.0 - lam) / (1.0 + zeta)
    p1 = 1.0 / ((1.0 + (1.0 - a) * al) / (1.0 + al) - 1.0 / p2)
    p3 = (1.0 + al) / (a * al)
    plan = ParamPlan(orders, p2, zeta, a, p1, p3)
    bad = plan_violations(plan)
    if bad:
        raise PlanInconsistent("plan invariants failed: " + "; ".join(bad))
    return plan


def default_p2(orders: OrderPair) -> float:
    """Geometric midpoint of the admissible ``p2`` interval."""
    lo, hi = p2_bounds(orders)
    return math.sqrt(lo * hi)


def default_zeta(orders: OrderPair, p2: float) -> float:
    # (0, b) has no geometric midpoint; the arithmetic one is used instead
    return 0.5 * min(zeta_bound(orders, p2), 1.0)


def default_plan(alpha, lam, p2=None, zeta=None, strict=False):
    """Build a plan, filling ``p2``/``zeta`` with midpoint defaults.

    Returns ``(plan, defaulted)`` where ``defaulted`` lists the names that
    were chosen automatically.
    """
    orders = validate_orders(alpha, lam, strict)
    defaulted = []
    if p2 is None:
        p2 = default_p2(orders)
        defaulted.append("p2")
    if zeta is None:
        zeta = default_zeta(orders, p2)
        defaulted.append("zeta")
    return build_plan(orders, p2, zeta), defaulted


def check_h_growth(plan: ParamPlan, t, h, M: float) -> bool:
    """Discrete test of the coefficient growth condition.

    True iff ``t^e * (int_0^t h^p2)^(p3/p2) <= M (t+1)^alpha`` at every node,
    with ``e = (p3/p1)[1 - p1(1-alpha)]`` and the integral accumulated by the
    trapezoidal rule on the sample grid.
    """
    t = np.asarray(t, dtype=float)
    h = np.asarray(h, dtype=float)
    if t.size == 0:
        raise EmptyGrid("empty sample grid")
    if t.shape != h.shape:
        raise ParameterError("t and h samples differ in shape")
    if t[0] != 0.0 or np.any(np.diff(t) <= 0):
        raise ParameterError("sample grid must start at 0 and increase strictly")
    if np.any(h < 0):
        raise ParameterError("h must be non-negative")
    if not M > 0:
        raise ParameterError("M must be positive")
    hp = h ** plan.p2
    cum = np.concatenate(([0.0], np.cumsum(0.5 * (hp[1:] + hp[:-1]) * np.diff(t))))
    lhs = t ** plan.h_exponent * cum ** (plan.p3 / plan.p2)
    return bool(np.all(lhs <= M * (t + 1.0) ** plan.alpha))
