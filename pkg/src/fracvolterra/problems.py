"""Problem families for ``x(t) = x0 + int_0^t f(s, x(s)) (t-s)^(alpha-1) ds``.

Every forcing handled here is a short sum of separable terms
``f(t, x) = sum_k c_k(t) * x**e_k``, which is the form the solver kernels
consume: the coefficients are sampled once on the mesh, the powers are
evaluated inside the time-stepping loop.

Forcings are written in the kernel-without-Gamma convention (``"main"``).
A spec tagged ``"integr_ivp"`` carries the ``1/Gamma(alpha)`` prefactor of
the fractional-integral form and is rescaled on evaluation.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, replace
from typing import Callable, Optional

import numpy as np
from scipy.special import gamma

from .bihari import GSpec
from .errors import (
    EpsilonTooLarge,
    MuOutOfRange,
    NonpositiveTau,
    NonpositiveX0,
    OrderViolation,
    ParameterError,
)
from .param_plan import p2_bounds, strictly_less, validate_orders

__all__ = [
    "CoefficientSpec",
    "ProblemSpec",
    "make_constant",
    "make_linear_relaxation",
    "make_sublinear_cooling",
    "make_logistic",
    "make_sharpness",
    "make_custom",
    "FAMILIES",
    "CONVENTIONS",
]

FAMILIES = ("constant", "linear_relaxation", "sublinear_cooling", "logistic", "sharpness", "custom")
CONVENTIONS = ("main", "integr_ivp")
_COEF_FAMILIES = ("constant", "power_decay", "shifted_power", "envelope", "table")


@dataclass(frozen=True)
class CoefficientSpec:
    """Time-dependent coefficient ``H(t)``, ``h(t)`` or ``P(t)``.

    ``constant``       ``c``
    ``power_decay``    ``c * t**-theta`` for ``t >= 1``, ``continuation`` on ``[0, 1)``
    ``shifted_power``  ``c * (1 + t)**-theta``
    ``envelope``       ``(t + 1)**(-alpha*lam) * inner(t)``
    ``table``          piecewise-linear through ``(times, values)``, flat beyond the ends
    """

    family: str
    c: float = 1.0
    theta: float = 0.0
    continuation: Optional[float] = None
    alpha: float = 0.0
    lam: float = 0.0
    inner: Optional["CoefficientSpec"] = None
    times: tuple = field(default=())
    values: tuple = field(default=())

    def __post_init__(self):
        if self.family not in _COEF_FAMILIES:
            raise ParameterError(f"unknown coefficient family {self.family!r}")
        if self.family == "envelope" and self.inner is None:
            raise ParameterError("envelope coefficient needs an inner spec")
        if self.family == "table":
            ts = np.asarray(self.times, dtype=float)
            if ts.size < 1 or ts.size != len(self.values) or np.any(np.diff(ts) <= 0):
                raise ParameterError("table coefficient needs increasing times with matching values")

    @classmethod
    def constant(cls, c: float) -> "CoefficientSpec":
        return cls("constant", c=float(c))

    @classmethod
    def power_decay(cls, theta: float, c: float = 1.0, continuation: Optional[float] = None) -> "CoefficientSpec":
        return cls("power_decay", c=float(c), theta=float(theta),
                   continuation=None if continuation is None else float(continuation))

    @classmethod
    def shifted_power(cls, theta: float, c: float = 1.0) -> "CoefficientSpec":
        return cls("shifted_power", c=float(c), theta=float(theta))

    @classmethod
    def envelope(cls, alpha: float, lam: float, inner: "CoefficientSpec") -> "CoefficientSpec":
        return cls("envelope", alpha=float(alpha), lam=float(lam), inner=inner)

    @classmethod
    def table(cls, times, values) -> "CoefficientSpec":
        return cls("table", times=tuple(map(float, times)), values=tuple(map(float, values)))

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        fam = self.family
        if fam == "constant":
            return np.full_like(t, self.c)
        if fam == "power_decay":
            cont = self.c if self.continuation is None else self.continuation
            safe = np.maximum(t, 1.0)
            return np.where(t >= 1.0, self.c * safe ** (-self.theta), cont)
        if fam == "shifted_power":
            return self.c * (1.0 + t) ** (-self.theta)
        if fam == "envelope":
            return (t + 1.0) ** (-self.alpha * self.lam) * self.inner(t)
        return np.interp(t, self.times, self.values)

    @property
    def breakpoints(self) -> tuple:
        if self.family == "power_decay":
            return (1.0,)
        if self.family == "envelope":
            return self.inner.breakpoints
        if self.family == "table":
            return self.times
        return ()

    def is_nonnegative(self) -> bool:
        fam = self.family
        if fam == "constant":
            return self.c >= 0
        if fam == "power_decay":
            cont = self.c if self.continuation is None else self.continuation
            return self.c >= 0 and cont >= 0
        if fam == "shifted_power":
            return self.c >= 0
        if fam == "envelope":
            return self.inner.is_nonnegative()
        return min(self.values) >= 0

    def sup_abs(self, horizon: float = 1e8) -> float:
        """Upper estimate of ``sup |coef|`` on ``[0, horizon]``."""
        fam = self.family
        if fam == "constant":
            return abs(self.c)
        if fam == "table":
            return max(abs(v) for v in self.values)
        t = np.concatenate(([0.0], np.geomspace(1e-6, horizon, 4001), self.breakpoints))
        return float(np.max(np.abs(self(t))))

    def to_dict(self) -> dict:
        fam = self.family
        d = {"family": fam}
        if fam == "constant":
            d["c"] = self.c
        elif fam == "power_decay":
            d.update(c=self.c, theta=self.theta)
            if self.continuation is not None:
                d["continuation"] = self.continuation
        elif fam == "shifted_power":
            d.update(c=self.c, theta=self.theta)
        elif fam == "envelope":
            d.update(alpha=self.alpha, **{"lambda": self.lam}, inner=self.inner.to_dict())
        else:
            d.update(times=list(self.times), values=list(self.values))
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "CoefficientSpec":
        fam = d["family"]
        if fam == "constant":
            return cls.constant(d["c"])
        if fam == "power_decay":
            return cls.power_decay(d["theta"], d.get("c", 1.0), d.get("continuation"))
        if fam == "shifted_power":
            return cls.shifted_power(d["theta"], d.get("c", 1.0))
        if fam == "envelope":
            return cls.envelope(d["alpha"], d["lambda"], cls.from_dict(d["inner"]))
        if fam == "table":
            return cls.table(d["times"], d["values"])
        raise ParameterError(f"unknown coefficient family {fam!r}")


# A term is (coefficient(t) -> array, exponent); f(t, x) = sum c(t) * x**e.
Term = tuple


@dataclass(frozen=True)
class ProblemSpec:
    family: str
    x0: float
    alpha: float
    lam: Optional[float] = None
    mu: Optional[float] = None
    tau0: Optional[float] = None
    epsilon: Optional[float] = None
    p2: Optional[float] = None
    f0: Optional[float] = None
    H: Optional[CoefficientSpec] = None
    P: Optional[CoefficientSpec] = None
    p_norm: Optional[float] = None
    convention: str = "main"
    first_step_only: bool = False
    custom_terms: tuple = field(default=(), compare=False, repr=False)

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise ParameterError(f"unknown problem family {self.family!r}")
        if self.convention not in CONVENTIONS:
            raise ParameterError(f"unknown convention {self.convention!r}")
        if not (0.0 < self.alpha <= 1.0):
            raise OrderViolation(f"order violation: alpha={self.alpha!r} outside (0, 1]")

    # -- forcing ------------------------------------------------------------

    def _raw_terms(self) -> list:
        fam = self.family
        if fam == "constant":
            return [(CoefficientSpec.constant(self.f0), 0.0)]
        if fam == "linear_relaxation":
            rate = -1.0 / (gamma(self.alpha) * self.tau0 ** self.alpha)
            return [(CoefficientSpec.constant(rate), 1.0)]
        if fam in ("sublinear_cooling", "sharpness"):
            return [(self.H, self.lam)]
        if fam == "logistic":
            H, P = self.H, self.P

            def HP(t, H=H, P=P):
                return H(t) * P(t)

            return [(H, self.lam), (HP, self.lam - self.mu)]
        return list(self.custom_terms)

    @property
    def convention_scale(self) -> float:
        return 1.0 / gamma(self.alpha) if self.convention == "integr_ivp" else 1.0

    def forcing_terms(self, t) -> tuple[np.ndarray, np.ndarray]:
        """Coefficients sampled on ``t`` (shape ``(K, len(t))``) and exponents (``K``).

        The ``1/Gamma(alpha)`` rescaling for the ``integr_ivp`` convention is
        already applied.
        """
        t = np.asarray(t, dtype=float)
        terms = self._raw_terms()
        scale = self.convention_scale
        coefs = np.empty((len(terms), t.size))
        exps = np.empty(len(terms))
        for k, (c, e) in enumerate(terms):
            coefs[k] = scale * np.broadcast_to(np.asarray(c(t), dtype=float), t.shape)
            exps[k] = float(e)
        return coefs, exps

    def f(self, t, x):
        """Evaluate the (rescaled) forcing at matching arrays ``t``, ``x``."""
        t = np.asarray(t, dtype=float)
        x = np.asarray(x, dtype=float)
        coefs, exps = self.forcing_terms(np.atleast_1d(t))
        return eval_terms(coefs, exps, np.broadcast_to(x, coefs.shape[1:])).reshape(np.shape(t))

    @property
    def nonnegative_data(self) -> bool:
        """True when positivity ``x >= x0`` is guaranteed (non-negative forcing, ``x0 > 0``)."""
        if not self.x0 > 0:
            return False
        fam = self.family
        if fam == "constant":
            return self.f0 >= 0
        if fam in ("sublinear_cooling", "sharpness"):
            return self.H.is_nonnegative()
        if fam == "logistic":
            return self.H.is_nonnegative() and self.P.is_nonnegative()
        return False

    def lipschitz_terms(self, t):
        """Per-node bound ``F(t)`` on ``|df/dx|`` over ``x >= x0/2``.

        Power terms use ``e * (2/x0)**(1-e)``; the other exponents contribute
        the obvious constants.
        """
        coefs, exps = self.forcing_terms(t)
        F = np.zeros(coefs.shape[1])
        for c, e in zip(coefs, exps):
            if e == 0.0:
                continue
            if e == 1.0:
                F += np.abs(c)
            elif 0.0 < e < 1.0:
                F += np.abs(c) * e * (2.0 / self.x0) ** (1.0 - e)
            else:
                raise ParameterError(f"no Lipschitz bound for exponent {e!r}")
        return F

    # -- oracles ------------------------------------------------------------

    def has_exact(self) -> bool:
        return self.family in ("constant", "linear_relaxation")

    def exact(self, t):
        """Closed-form solution where one is known."""
        t = np.asarray(t, dtype=float)
        if self.family == "constant":
            f0 = self.f0 * self.convention_scale
            return self.x0 + f0 / self.alpha * t ** self.alpha
        if self.family == "linear_relaxation":
            from .asymptotics import mittag_leffler_array

            return self.x0 * mittag_leffler_array(self.alpha, -((t / self.tau0) ** self.alpha))
        raise ParameterError(f"no closed form for family {self.family!r}")

    def envelope_g(self) -> GSpec:
        """Envelope ``g`` with ``|f(t, x)| <= h(t) g(x/(t+1)^alpha)``."""
        if self.family in ("sublinear_cooling", "sharpness"):
            return GSpec.power(self.lam)
        if self.family == "logistic":
            return GSpec.shifted_power(2.0 * (1.0 + self.p_norm), self.lam)
        raise ParameterError(f"family {self.family!r} has no Bihari envelope")

    # -- serialization ------------------------------------------------------

    def to_dict(self) -> dict:
        if self.family == "custom":
            raise ParameterError("custom problems carry code and cannot be serialized")
        d = {"family": self.family, "x0": self.x0, "alpha": self.alpha, "convention": self.convention}
        for key, name in (("lam", "lambda"), ("mu", "mu"), ("tau0", "tau0"), ("epsilon", "epsilon"),
                          ("p2", "p2"), ("f0", "f0"), ("p_norm", "p_norm")):
            v = getattr(self, key)
            if v is not None:
                d[name] = v
        if self.H is not None:
            d["H"] = self.H.to_dict()
        if self.P is not None:
            d["P"] = self.P.to_dict()
        if self.first_step_only:
            d["first_step_only"] = True
        return d

    def to_json(self, **kw) -> str:
        return json.dumps(self.to_dict(), **kw)

    @classmethod
    def from_dict(cls, d: dict) -> "ProblemSpec":
        """Rebuild through the family constructor so all preconditions are re-checked."""
        fam = d.get("family")
        conv = d.get("convention", "main")
        if fam == "constant":
            spec = make_constant(d["x0"], d["f0"], d["alpha"])
        elif fam == "linear_relaxation":
            spec = make_linear_relaxation(d["x0"], d["tau0"], d["alpha"])
        elif fam == "sublinear_cooling":
            spec = _from_envelope(d, make_sublinear_cooling)
        elif fam == "logistic":
            h = _inner(d)
            spec = make_logistic(d["x0"], d["alpha"], d["lambda"], d["mu"], h,
                                 CoefficientSpec.from_dict(d["P"]), d["p_norm"])
        elif fam == "sharpness":
            spec = make_sharpness(d["x0"], d["alpha"], d["lambda"], d["p2"], d["epsilon"])
        else:
            raise ParameterError(f"unknown or non-serializable problem family {fam!r}")
        return replace(spec, convention=conv) if conv != spec.convention else spec

    @classmethod
    def from_json(cls, text: str) -> "ProblemSpec":
        return cls.from_dict(json.loads(text))


def _inner(d):
    H = CoefficientSpec.from_dict(d["H"])
    if H.family != "envelope":
        raise ParameterError("H must be an envelope (t+1)^(-alpha*lambda) h(t)")
    return H.inner


def _from_envelope(d, ctor):
    return ctor(d["x0"], d["alpha"], d["lambda"], _inner(d))


def eval_terms(coefs, exps, x):
    """``sum_k coefs[k] * x**exps[k]``; fractional powers of ``x <= 0`` are taken as 0."""
    out = np.zeros(np.shape(x))
    for c, e in zip(coefs, exps):
        if e == 0.0:
            out = out + c
        elif e == 1.0:
            out = out + c * x
        else:
            out = out + c * np.power(np.maximum(x, 0.0), e)
    return out


# -- constructors -----------------------------------------------------------

def make_constant(x0: float, f0: float, alpha: float) -> ProblemSpec:
    """Constant forcing; exact solution ``x0 + f0/alpha * t**alpha``."""
    return ProblemSpec("constant", x0=float(x0), alpha=float(alpha), f0=float(f0))


def make_linear_relaxation(phi0: float, tau0: float, alpha: float) -> ProblemSpec:
    """Linear fractional relaxation with Mittag-Leffler solution.

    Solution ``phi0 * E_alpha(-(t/tau0)**alpha)``, obtained with
    ``f(t, x) = -x / (Gamma(alpha) * tau0**alpha)``.
    """
    if not tau0 > 0:
        raise NonpositiveTau(f"tau0 must be positive, got {tau0!r}")
    return ProblemSpec("linear_relaxation", x0=float(phi0), alpha=float(alpha), tau0=float(tau0))


def _check_power_family(x0, alpha, lam, strict=False):
    validate_orders(alpha, lam, strict)
    if not x0 > 0:
        raise NonpositiveX0(f"x0 must be positive for power nonlinearities, got {x0!r}")


def make_sublinear_cooling(x0: float, alpha: float, lam: float, h: CoefficientSpec) -> ProblemSpec:
    """``f(t, x) = (t+1)^(-alpha*lam) h(t) x^lam``."""
    _check_power_family(x0, alpha, lam)
    H = CoefficientSpec.envelope(alpha, lam, h)
    return ProblemSpec("sublinear_cooling", x0=float(x0), alpha=float(alpha), lam=float(lam), H=H)


def make_logistic(x0, alpha, lam, mu, h: CoefficientSpec, P: CoefficientSpec, p_norm: float) -> ProblemSpec:
    """``f(t, x) = H(t) x^lam [1 + P(t) x^-mu]`` with ``H = (t+1)^(-alpha*lam) h``.

    Only the first-step estimate ``o(t^alpha)`` applies to this family since
    its envelope ``g(u) = 2(1+|P|_inf)(1+u)^lam`` has ``g(0) != 0``.
    """
    _check_power_family(x0, alpha, lam)
    if not (strictly_less(0.0, mu) and strictly_less(mu, lam)):
        raise MuOutOfRange(f"need 0 < mu < lambda, got mu={mu!r}, lambda={lam!r}")
    if not p_norm >= 0 or P.sup_abs() > p_norm * (1 + 1e-12) + 1e-300:
        raise ParameterError(f"p_norm={p_norm!r} does not bound sup|P|")
    H = CoefficientSpec.envelope(alpha, lam, h)
    return ProblemSpec("logistic", x0=float(x0), alpha=float(alpha), lam=float(lam), mu=float(mu),
                       H=H, P=P, p_norm=float(p_norm), first_step_only=True)


def make_sharpness(x0: float, alpha: float, lam: float, p2: float, epsilon: float) -> ProblemSpec:
    """Slowly-decaying coefficient used to show the growth estimate is nearly optimal.

    ``H(t) = (t+1)^(-alpha*lam) * t^(-(1+eps)/p2)`` for ``t >= 1``, continued by
    ``h = 1`` on ``[0, 1)``.
    """
    orders = validate_orders(alpha, lam, strict=True)
    if not x0 > 0:
        raise NonpositiveX0(f"x0 must be positive, got {x0!r}")
    from .param_plan import _check_p2

    _check_p2(orders, p2)
    if not (0.0 < epsilon < 1.0):
        raise EpsilonTooLarge(f"epsilon too large: need 0 < epsilon < 1, got {epsilon!r}")
    if not strictly_less((1.0 + epsilon) / p2, (1.0 - lam) * alpha):
        raise EpsilonTooLarge(
            f"epsilon too large: need (1-lambda)*alpha > (1+epsilon)/p2, "
            f"got {(1 - lam) * alpha!r} <= {(1 + epsilon) / p2!r}"
        )
    h = CoefficientSpec.power_decay((1.0 + epsilon) / p2, c=1.0, continuation=1.0)
    H = CoefficientSpec.envelope(alpha, lam, h)
    return ProblemSpec("sharpness", x0=float(x0), alpha=float(alpha), lam=float(lam),
                       p2=float(p2), epsilon=float(epsilon), H=H)


def make_custom(x0: float, alpha: float, terms, convention: str = "main") -> ProblemSpec:
    """In-library extension point: ``terms`` is a sequence of ``(callable(t) -> array, exponent)``.

    Custom problems are not serializable.
    """
    terms = tuple((c, float(e)) for c, e in terms)
    for c, _ in terms:
        if not callable(c):
            raise ParameterError("custom term coefficients must be callables of t")
    return ProblemSpec("custom", x0=float(x0), alpha=float(alpha), convention=convention,
                       custom_terms=terms)
