"""Time meshes for the Volterra solver.

Solutions behave like ``x0 + c t^alpha`` near 0, so nodes cluster there as
``T (j/N)^r`` with ``r = 2/alpha`` by default.  Long horizons switch to
geometric spacing past ``t_switch`` with a fixed number of nodes per decade.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import BadMeshParams
from .kernels import get_backend

__all__ = ["Mesh", "build_graded_mesh", "build_geometric_tail_mesh", "default_grading", "mesh_from_dict"]


def default_grading(alpha: float) -> float:
    return max(1.0, 2.0 / alpha)


@dataclass(frozen=True, eq=False)
class Mesh:
    nodes: np.ndarray
    grading: float
    kind: str = "graded"
    params: dict = field(default_factory=dict)
    _cache: dict = field(default_factory=dict, repr=False)

    def __post_init__(self):
        nodes = np.ascontiguousarray(self.nodes, dtype=float)
        if nodes.ndim != 1 or nodes.size < 2:
            raise BadMeshParams("mesh needs at least two nodes")
        if nodes[0] != 0.0 or np.any(np.diff(nodes) <= 0) or not np.all(np.isfinite(nodes)):
            raise BadMeshParams("mesh nodes must start at 0 and increase strictly")
        nodes.setflags(write=False)
        object.__setattr__(self, "nodes", nodes)

    @property
    def N(self) -> int:
        """Number of intervals."""
        return self.nodes.size - 1

    @property
    def T(self) -> float:
        return float(self.nodes[-1])

    def weights(self, alpha: float, backend=None) -> np.ndarray:
        """Packed lower-triangular product weights, cached per ``(alpha, backend)``."""
        kern = get_backend(backend)
        key = (float(alpha), kern.BACKEND)
        if key not in self._cache:
            self._cache[key] = kern.weight_matrix(self.nodes, float(alpha))
        return self._cache[key]

    def cached_weights(self, alpha: float, backend=None):
        return self._cache.get((float(alpha), get_backend(backend).BACKEND))

    def clear_cache(self) -> None:
        self._cache.clear()

    def to_dict(self) -> dict:
        return {"kind": self.kind, "grading": self.grading, "n_nodes": int(self.nodes.size),
                "T": self.T, **self.params}


def build_graded_mesh(T: float, N: int, r: float) -> Mesh:
    """Nodes ``T (j/N)^r`` for ``j = 0..N``."""
    if not (T > 0 and math.isfinite(T)):
        raise BadMeshParams(f"T must be positive and finite, got {T!r}")
    if int(N) != N or N < 2:
        raise BadMeshParams(f"N must be an integer >= 2, got {N!r}")
    if not r >= 1:
        raise BadMeshParams(f"grading exponent must be >= 1, got {r!r}")
    N = int(N)
    nodes = T * (np.arange(N + 1) / N) ** r
    nodes[-1] = T
    return Mesh(nodes, float(r), "graded", {"N": N, "r": float(r)})


def build_geometric_tail_mesh(T: float, alpha: float, nodes_per_decade: int = 2048,
                              graded_nodes: int = 512, t_switch: float = 1.0,
                              r: float | None = None, max_nodes: int | None = None) -> Mesh:
    """Graded nodes on ``[0, t_switch]`` followed by log-uniform nodes up to ``T``.

    The tail has at least ``nodes_per_decade`` nodes per decade.  When
    ``max_nodes`` caps the total, the per-decade count is lowered to fit.
    """
    r = default_grading(alpha) if r is None else float(r)
    if not (t_switch > 0 and T > 0):
        raise BadMeshParams("T and t_switch must be positive")
    if int(graded_nodes) != graded_nodes or graded_nodes < 2 or nodes_per_decade < 1 or r < 1:
        raise BadMeshParams("need graded_nodes >= 2, nodes_per_decade >= 1, r >= 1")
    if T <= t_switch:
        return build_graded_mesh(T, graded_nodes, r)
    head = t_switch * (np.arange(graded_nodes + 1) / graded_nodes) ** r
    head[-1] = t_switch
    decades = math.log10(T / t_switch)
    npd = int(nodes_per_decade)
    if max_nodes is not None:
        room = int(max_nodes) - (graded_nodes + 1)
        if room < 1:
            raise BadMeshParams(f"max_nodes={max_nodes} leaves no room for the geometric tail")
        npd = min(npd, max(1, int(room / decades)))
    K = max(1, math.ceil(npd * decades - 1e-9))
    tail = np.geomspace(t_switch, T, K + 1)[1:]
    tail[-1] = T
    params = {"graded_nodes": int(graded_nodes), "nodes_per_decade": npd, "t_switch": float(t_switch),
              "r": r, "tail_intervals": K}
    return Mesh(np.concatenate([head, tail]), r, "geometric_tail", params)


def mesh_from_dict(d: dict) -> Mesh:
    kind = d.get("kind", "graded")
    if kind == "graded":
        return build_graded_mesh(d["T"], d["N"], d["r"])
    if kind == "geometric_tail":
        return build_geometric_tail_mesh(d["T"], 1.0, d["nodes_per_decade"], d["graded_nodes"],
                                         d["t_switch"], d["r"])
    raise BadMeshParams(f"cannot rebuild mesh kind {kind!r}")
