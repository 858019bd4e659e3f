"""Solvers for ``x(t) = x0 + int_0^t f(s, x(s)) (t-s)^(alpha-1) ds``.

Two routes share the same discretisation (product trapezoidal rule: the
kernel is integrated exactly against the piecewise-linear interpolant of
``f``):

``solve_step``
    marches node by node, solving the implicit scalar equation at each node.
``solve_picard``
    iterates the discrete integral operator on the whole path starting from
    ``x == x0``, measuring progress in the weighted sup-metric whose weight
    ``H_L`` makes the operator a contraction.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy.special import gamma

from .errors import MaxIterationsExceeded, ParameterError, PositivityViolation, StepDivergence
from .kernels import get_backend
from .mesh import Mesh
from .problems import ProblemSpec

__all__ = [
    "SolutionPath",
    "ContractionConfig",
    "solve_step",
    "solve_picard",
    "uniqueness_probe",
    "product_weights",
    "observed_order",
    "richardson_order",
    "log_contraction_weight",
]

ABS_TOL = 1e-12
REL_TOL = 1e-10
POSITIVITY_SLACK = 1e-10


@dataclass(frozen=True, eq=False)
class SolutionPath:
    mesh: Mesh
    values: np.ndarray
    residuals: np.ndarray
    problem: ProblemSpec
    method: str
    iterations: np.ndarray
    backend: str
    tolerances: dict = field(default_factory=dict)
    info: dict = field(default_factory=dict)

    @property
    def t(self) -> np.ndarray:
        return self.mesh.nodes

    @property
    def convention(self) -> str:
        return self.problem.convention

    @property
    def x0(self) -> float:
        return self.problem.x0

    def to_csv(self, path) -> None:
        np.savetxt(path, np.column_stack([self.t, self.values, self.residuals]), fmt="%.17g",
                   delimiter=",", header="t,x,residual", comments="")

    def summary(self) -> dict:
        return {
            "method": self.method,
            "backend": self.backend,
            "convention": self.convention,
            "n_nodes": int(self.t.size),
            "T": self.mesh.T,
            "x_final": float(self.values[-1]),
            "max_residual": float(np.max(self.residuals)),
            "total_iterations": int(np.sum(self.iterations)),
            **self.info,
        }


def product_weights(mesh: Mesh, alpha: float, n: int, backend=None) -> np.ndarray:
    """Row ``n`` of the product trapezoidal weights (nodes ``0..n``)."""
    if not 1 <= n <= mesh.N:
        raise ParameterError(f"row index must lie in 1..{mesh.N}, got {n}")
    return np.array(get_backend(backend).weight_row(mesh.nodes, int(n), float(alpha)))


def _check_positivity(problem: ProblemSpec, x: np.ndarray):
    if problem.nonnegative_data:
        low = np.flatnonzero(x < problem.x0 - POSITIVITY_SLACK)
        if low.size:
            n = int(low[0])
            raise PositivityViolation(
                f"x[{n}]={x[n]!r} fell below x0={problem.x0!r} for non-negative data", node=n)


def solve_step(problem: ProblemSpec, mesh: Mesh, abs_tol: float = ABS_TOL, rel_tol: float = REL_TOL,
               max_iter: int = 100, backend: Optional[str] = None) -> SolutionPath:
    """March the implicit product-trapezoidal scheme across ``mesh``.

    At node ``n`` the equation ``x_n = x0 + sum_{j<n} w_nj f_j + w_nn f(t_n, x_n)``
    is solved by fixed-point iteration to ``abs_tol`` or ``rel_tol``.

    Raises
    ------
    StepDivergence
        the scalar solve failed even after the bisection fallback.
    PositivityViolation
        a node dropped below ``x0`` although the data are non-negative.
    """
    kern = get_backend(backend)
    coefs, exps = problem.forcing_terms(mesh.nodes)
    packed = mesh.cached_weights(problem.alpha, backend)
    x, res, iters, failed = kern.march(mesh.nodes, float(problem.alpha), float(problem.x0), coefs, exps,
                                       float(abs_tol), float(rel_tol), int(max_iter), packed)
    if failed >= 0:
        raise StepDivergence(f"step solve diverged at node {failed} (t={mesh.nodes[failed]!r})", node=failed)
    x = np.asarray(x)
    _check_positivity(problem, x)
    return SolutionPath(mesh, x, np.asarray(res), problem, "step", np.asarray(iters), kern.BACKEND,
                        {"abs_tol": abs_tol, "rel_tol": rel_tol, "max_iter": max_iter})


@dataclass(frozen=True)
class ContractionConfig:
    """Exponents and weight constant making the integral operator a contraction.

    Needs ``1/p + 1/q = 1``, ``1 < p < min(1/alpha, 1/(1-alpha))`` and
    ``L > C(alpha, p)^q`` with ``C(alpha, p) = p^(1/q - alpha) Gamma(1 - p(1-alpha))``.
    """

    alpha: float
    p: float
    L: float
    max_iterations: int = 500
    tolerance: float = 1e-12

    def __post_init__(self):
        pmax = min(1.0 / self.alpha, 1.0 / (1.0 - self.alpha)) if self.alpha < 1 else 1.0
        if not (1.0 < self.p < pmax):
            raise ParameterError(f"need 1 < p < {pmax!r}, got p={self.p!r}")
        if not self.L > self.C ** self.q:
            raise ParameterError(f"need L > C(alpha,p)^q = {self.C ** self.q!r}, got L={self.L!r}")
        if self.max_iterations < 1 or not self.tolerance > 0:
            raise ParameterError("max_iterations >= 1 and tolerance > 0 required")

    @property
    def q(self) -> float:
        return self.p / (self.p - 1.0)

    @property
    def C(self) -> float:
        return self.p ** (1.0 / self.q - self.alpha) * gamma(1.0 - self.p * (1.0 - self.alpha))

    @property
    def coefficient(self) -> float:
        """Contraction coefficient ``C(alpha, p) L^(-1/q)``."""
        return self.C * self.L ** (-1.0 / self.q)

    @classmethod
    def default(cls, alpha: float, safety: float = 2.0, **kw) -> "ContractionConfig":
        """Midpoint ``p`` of its interval and ``L = safety * C^q``."""
        if not 0 < alpha < 1:
            raise ParameterError("Picard weights need 0 < alpha < 1")
        p = 0.5 * (1.0 + min(1.0 / alpha, 1.0 / (1.0 - alpha)))
        q = p / (p - 1.0)
        C = p ** (1.0 / q - alpha) * gamma(1.0 - p * (1.0 - alpha))
        return cls(alpha, p, safety * C ** q, **kw)

    def to_dict(self) -> dict:
        return {"p": self.p, "q": self.q, "L": self.L, "C": self.C, "coefficient": self.coefficient,
                "max_iterations": self.max_iterations, "tolerance": self.tolerance}


def log_contraction_weight(problem: ProblemSpec, mesh: Mesh, cfg: ContractionConfig, backend=None):
    """``log H_L(t)`` on the mesh.

    ``H_L = k(t) exp(t + (L/q) int_0^t (k F)^q)`` with
    ``k(t) = 1 + |x0| + int_0^t |f(s, x0)| (t-s)^(alpha-1) ds`` and ``F`` the
    Lipschitz bound of ``f`` in ``x``.  Kept in log form: ``exp(t)`` alone
    overflows past ``t ~ 709``.
    """
    kern = get_backend(backend)
    t = mesh.nodes
    coefs, exps = problem.forcing_terms(t)
    f0 = np.abs(kern.eval_f(coefs, exps, np.full(t.size, float(problem.x0))))
    k = 1.0 + abs(problem.x0) + np.asarray(kern.packed_matvec(mesh.weights(problem.alpha, backend), f0))
    F = problem.lipschitz_terms(t)
    g = (k * F) ** cfg.q
    cum = np.concatenate(([0.0], np.cumsum(0.5 * (g[1:] + g[:-1]) * np.diff(t))))
    return np.log(k) + t + cfg.L / cfg.q * cum


def solve_picard(problem: ProblemSpec, mesh: Mesh, cfg: Optional[ContractionConfig] = None,
                 initial=None, backend: Optional[str] = None) -> SolutionPath:
    """Whole-path fixed-point iteration ``x <- x0 + K f(., x)`` from ``x == x0``.

    Stops once the change is below ``cfg.tolerance`` both in the weighted
    metric ``sup |dx| / H_L`` and in the plain relative sup-norm; on long
    horizons ``H_L`` is astronomically large and the weighted distance alone
    says nothing about the tail.
    """
    cfg = cfg or ContractionConfig.default(problem.alpha)
    if not math.isclose(cfg.alpha, problem.alpha, rel_tol=0, abs_tol=1e-15):
        raise ParameterError("contraction config built for a different alpha")
    kern = get_backend(backend)
    t = mesh.nodes
    coefs, exps = problem.forcing_terms(t)
    W = mesh.weights(problem.alpha, backend)
    log_hl = log_contraction_weight(problem, mesh, cfg, backend)
    x0 = float(problem.x0)
    if initial is None:
        x = np.full(t.size, x0)
    else:
        x = np.array(np.broadcast_to(np.asarray(initial, dtype=float), t.shape))
    fv = np.empty(t.size)
    history = []
    for k in range(1, cfg.max_iterations + 1):
        kern.eval_f(coefs, exps, x, fv)
        xn = x0 + np.asarray(kern.packed_matvec(W, fv))
        d = np.abs(xn - x)
        with np.errstate(divide="ignore"):
            weighted = float(np.max(np.exp(np.log(d) - log_hl)))
        plain = float(np.max(d / np.maximum(1.0, np.abs(xn))))
        history.append((weighted, plain))
        x = xn
        if weighted < cfg.tolerance and plain < cfg.tolerance:
            break
    else:
        raise MaxIterationsExceeded(
            f"Picard iteration not converged after {cfg.max_iterations} sweeps "
            f"(weighted {history[-1][0]:.3e}, plain {history[-1][1]:.3e})")
    kern.eval_f(coefs, exps, x, fv)
    res = np.abs(x0 + np.asarray(kern.packed_matvec(W, fv)) - x)
    _check_positivity(problem, x)
    iters = np.zeros(t.size, dtype=np.int64)
    iters[-1] = k
    return SolutionPath(mesh, x, res, problem, "picard", iters, kern.BACKEND,
                        {"tolerance": cfg.tolerance, "max_iterations": cfg.max_iterations},
                        {"sweeps": k, "contraction": cfg.to_dict(),
                         "final_weighted_distance": history[-1][0],
                         "final_plain_distance": history[-1][1]})


def uniqueness_probe(problem: ProblemSpec, mesh: Mesh, perturbation: float,
                     cfg: Optional[ContractionConfig] = None, backend=None) -> float:
    """Sup-distance between Picard limits started from ``x0`` and ``x0 + perturbation``."""
    if problem.family not in ("sublinear_cooling", "sharpness", "logistic") or not problem.x0 > 0:
        raise ParameterError("uniqueness probe needs a power-nonlinearity problem with x0 > 0")
    a = solve_picard(problem, mesh, cfg, backend=backend)
    if perturbation == 0:
        return 0.0
    b = solve_picard(problem, mesh, cfg, initial=problem.x0 + perturbation, backend=backend)
    return float(np.max(np.abs(a.values - b.values)))


def observed_order(errors, refinement: float = 2.0, floor: float = 0.0) -> np.ndarray:
    """Orders ``log(e_i / e_{i+1}) / log(refinement)``; ``inf`` where both errors sit at ``floor``."""
    e = np.asarray(errors, dtype=float)
    out = np.empty(e.size - 1)
    for i in range(e.size - 1):
        if e[i] <= floor and e[i + 1] <= floor:
            out[i] = math.inf
        else:
            out[i] = math.log(max(e[i], 1e-300) / max(e[i + 1], 1e-300)) / math.log(refinement)
    return out


def richardson_order(coarse: SolutionPath, mid: SolutionPath, fine: SolutionPath, floor: float = 0.0) -> float:
    """Self-convergence order from graded meshes with ``N``, ``2N``, ``4N`` intervals.

    Returns ``inf`` when both successive differences are at or below
    ``floor``: the scheme already reproduces the solution to rounding.
    """
    n = coarse.mesh.N
    if mid.mesh.N != 2 * n or fine.mesh.N != 4 * n:
        raise ParameterError("richardson_order needs meshes with N, 2N and 4N intervals")
    xc = coarse.values
    xm = mid.values[::2]
    xf = fine.values[::4]
    d1 = np.max(np.abs(xc - xm))
    d2 = np.max(np.abs(xm - xf))
    if d1 <= floor and d2 <= floor:
        return math.inf
    return math.log(max(d1, 1e-300) / max(d2, 1e-300)) / math.log(2.0)
