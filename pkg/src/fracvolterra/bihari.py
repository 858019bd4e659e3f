"""Bihari comparison functional.

    W(u) = int_0^u dxi / g(|x0| + xi^(1/p3))^p3

The growth condition ``W(u)/u^a -> inf`` is what lets the contradiction
argument for the ``o(t^alpha)`` bound go through.  Here ``W`` is tabulated
by adaptive quadrature on a caller-supplied grid and the limit condition is
replaced by a finite, falsifiable decade test.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy import integrate

from .errors import GridTooShort, ParameterError, SingularIntegrand

__all__ = ["GSpec", "BihariProfile", "eval_W", "check_superlinear", "power_lower_bound"]

_FAMILIES = ("power", "shifted_power", "constant", "table")


@dataclass(frozen=True)
class GSpec:
    """Non-decreasing, non-negative envelope ``g``.

    Families
    --------
    power
        ``g(u) = u**beta``; ``g(0) = 0`` for ``beta > 0``.
    shifted_power
        ``g(u) = C * (1 + u)**lam``.
    constant
        ``g(u) = C``.
    table
        monotone piecewise-linear interpolation of ``(u_table, g_table)``,
        held constant beyond the last sample.
    """

    family: str
    beta: float = 0.0
    C: float = 1.0
    lam: float = 0.0
    u_table: tuple = field(default=())
    g_table: tuple = field(default=())

    def __post_init__(self):
        if self.family not in _FAMILIES:
            raise ParameterError(f"unknown g family {self.family!r}")
        if self.family == "power" and self.beta < 0:
            raise ParameterError("power family needs beta >= 0")
        if self.family in ("shifted_power", "constant") and self.C < 0:
            raise ParameterError("g must be non-negative")
        if self.family == "shifted_power" and self.lam < 0:
            raise ParameterError("shifted_power needs lam >= 0")
        if self.family == "table":
            u = np.asarray(self.u_table, dtype=float)
            g = np.asarray(self.g_table, dtype=float)
            if u.size < 2 or u.shape != g.shape:
                raise ParameterError("table needs at least two matching samples")
            if np.any(np.diff(u) <= 0) or np.any(np.diff(g) < 0) or np.any(g < 0):
                raise ParameterError("table g must be non-negative and non-decreasing on increasing u")

    @classmethod
    def power(cls, beta: float) -> "GSpec":
        return cls("power", beta=float(beta))

    @classmethod
    def shifted_power(cls, C: float, lam: float) -> "GSpec":
        return cls("shifted_power", C=float(C), lam=float(lam))

    @classmethod
    def constant(cls, C: float) -> "GSpec":
        return cls("constant", C=float(C))

    @classmethod
    def table(cls, u, g) -> "GSpec":
        return cls("table", u_table=tuple(map(float, u)), g_table=tuple(map(float, g)))

    @classmethod
    def from_plan(cls, plan) -> "GSpec":
        """Power envelope with ``beta = 1 - (1+zeta) a`` (equal to ``lambda``)."""
        return cls.power(1.0 - (1.0 + plan.zeta) * plan.a)

    def __call__(self, u):
        u = np.asarray(u, dtype=float)
        if self.family == "power":
            return np.power(u, self.beta)
        if self.family == "shifted_power":
            return self.C * np.power(1.0 + u, self.lam)
        if self.family == "constant":
            return np.full_like(u, self.C)
        return np.interp(u, self.u_table, self.g_table)

    def to_dict(self) -> dict:
        d = {"family": self.family}
        if self.family == "power":
            d["beta"] = self.beta
        elif self.family == "shifted_power":
            d.update(C=self.C, lam=self.lam)
        elif self.family == "constant":
            d["C"] = self.C
        else:
            d.update(u=list(self.u_table), g=list(self.g_table))
        return d


@dataclass(frozen=True)
class BihariProfile:
    u: np.ndarray
    W: np.ndarray
    x0abs: float
    p3: float
    g: GSpec

    def ratio(self, a: float) -> np.ndarray:
        """``W(u)/u^a`` on the positive part of the grid."""
        pos = self.u > 0
        return self.W[pos] / self.u[pos] ** a

    def to_csv(self, path) -> None:
        np.savetxt(path, np.column_stack([self.u, self.W]), fmt="%.17g",
                   delimiter=",", header="u,W", comments="")


def _integrand(g: GSpec, x0abs: float, p3: float):
    inv = 1.0 / p3

    def f(xi):
        return float(g(x0abs + xi ** inv)) ** (-p3)

    return f


def _panel(f, lo, hi, rel_tol, depth=0):
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", integrate.IntegrationWarning)
        res = integrate.quad(f, lo, hi, epsabs=0.0, epsrel=rel_tol, limit=200, full_output=1)
    val, err = res[0], res[1]
    # a fourth element carries QUADPACK's failure message
    ok = len(res) == 3 and err <= max(rel_tol * abs(val), 1e-300)
    if ok or depth >= 12:
        return val
    mid = 0.5 * (lo + hi)
    return _panel(f, lo, mid, rel_tol, depth + 1) + _panel(f, mid, hi, rel_tol, depth + 1)


def eval_W(g: GSpec, x0abs: float, p3: float, u, rel_tol: float = 1e-8) -> BihariProfile:
    """Tabulate ``W`` on the increasing, non-negative grid ``u``.

    Each panel between consecutive grid points is integrated with adaptive
    Gauss-Kronrod quadrature; a panel that misses ``rel_tol`` is halved
    recursively.
    """
    u = np.asarray(u, dtype=float)
    if u.ndim != 1 or u.size == 0:
        raise ParameterError("u grid must be a non-empty 1-d array")
    if u[0] < 0 or np.any(np.diff(u) <= 0):
        raise ParameterError("u grid must be non-negative and strictly increasing")
    if not x0abs > 0:
        raise ParameterError("x0abs must be positive")
    if not p3 > 1:
        raise ParameterError("p3 must exceed 1")
    if not float(g(x0abs)) > 0:
        raise SingularIntegrand(f"g(|x0|) = 0 at |x0|={x0abs!r}; the integrand blows up at 0")
    f = _integrand(g, x0abs, p3)
    edges = np.concatenate(([0.0], u))
    pieces = np.array([_panel(f, lo, hi, rel_tol) if hi > lo else 0.0
                       for lo, hi in zip(edges[:-1], edges[1:])])
    return BihariProfile(u=u, W=np.cumsum(pieces), x0abs=float(x0abs), p3=float(p3), g=g)


def power_lower_bound(u, growth: float, x0abs: float, p3: float):
    """Closed-form lower bound of ``W`` for ``g(u) = u^(1-growth)``, valid for ``u >= x0abs^p3``.

    ``growth`` is ``(1+zeta) a``.
    """
    u = np.asarray(u, dtype=float)
    beta = 1.0 - growth
    return 2.0 ** (-beta * p3) * (u ** growth - x0abs ** (growth * p3)) / growth


def _decade_values(profile: BihariProfile, a: float, n_decades: int):
    pos = profile.u > 0
    logu = np.log(profile.u[pos])
    logr = np.log(profile.W[pos]) - a * logu
    top = logu[-1]
    pts = top - np.log(10.0) * np.arange(n_decades, -1, -1)
    return np.interp(pts, logu, logr)


def check_superlinear(profile: BihariProfile, a: float, stall_fraction: float = 0.5) -> bool:
    """Finite proxy for ``lim W(u)/u^a = +inf``.

    With ``R = W/u^a`` sampled at the last four decade points, the test
    passes iff ``R`` increases strictly from decade to decade and the
    log-growth of ``R`` over the final decade is at least ``stall_fraction``
    times its mean over the three decades (growth that has not stalled).
    """
    pos = profile.u[profile.u > 0]
    if pos.size < 2 or pos[-1] / pos[0] < 1e4 * (1 - 1e-12):
        raise GridTooShort("profile must cover at least four decades of u")
    logr = _decade_values(profile, a, 3)
    steps = np.diff(logr)
    if not np.all(steps > 1e-9):
        return False
    return bool(steps[-1] >= stall_fraction * steps.mean())
